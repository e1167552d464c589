//! Dense linear-algebra oracles used to cross-check the incremental
//! learners. Deliberately independent of the library's Sherman-Morrison
//! path: plain Gauss-Jordan elimination with partial pivoting.

#![allow(dead_code)]

/// Inverts a square matrix given in row-major order. Panics on singular
/// input; the test matrices are λI + Σ φφᵀ with λ > 0, hence well-posed.
pub fn invert(matrix: &[f64], n: usize) -> Vec<f64> {
    assert_eq!(matrix.len(), n * n);
    let mut a = matrix.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r1, &r2| {
                a[r1 * n + col]
                    .abs()
                    .partial_cmp(&a[r2 * n + col].abs())
                    .unwrap()
            })
            .unwrap();
        assert!(a[pivot_row * n + col].abs() > 1e-300, "singular matrix");
        if pivot_row != col {
            for k in 0..n {
                a.swap(col * n + k, pivot_row * n + k);
                inv.swap(col * n + k, pivot_row * n + k);
            }
        }
        let pivot = a[col * n + col];
        for k in 0..n {
            a[col * n + k] /= pivot;
            inv[col * n + k] /= pivot;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row * n + col];
            if factor == 0.0 {
                continue;
            }
            for k in 0..n {
                a[row * n + k] -= factor * a[col * n + k];
                inv[row * n + k] -= factor * inv[col * n + k];
            }
        }
    }
    inv
}

/// Solves A·x = b by inversion (adequate at test sizes).
pub fn solve(matrix: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let inv = invert(matrix, n);
    mat_vec(&inv, b, n)
}

pub fn mat_vec(matrix: &[f64], v: &[f64], n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (0..n).map(|j| matrix[i * n + j] * v[j]).sum())
        .collect()
}

/// Accumulates S = λI + Σ φφᵀ and b = Σ yφ for a recorded stream.
pub struct DenseRidge {
    pub n: usize,
    pub s: Vec<f64>,
    pub b: Vec<f64>,
}

impl DenseRidge {
    pub fn new(n: usize, lambda: f64) -> Self {
        let mut s = vec![0.0; n * n];
        for i in 0..n {
            s[i * n + i] = lambda;
        }
        DenseRidge {
            n,
            s,
            b: vec![0.0; n],
        }
    }

    pub fn add_features(&mut self, phi: &[f64]) {
        for i in 0..self.n {
            for j in 0..self.n {
                self.s[i * self.n + j] += phi[i] * phi[j];
            }
        }
    }

    pub fn add_label(&mut self, phi: &[f64], y: f64) {
        for (bi, &p) in self.b.iter_mut().zip(phi) {
            *bi += y * p;
        }
    }

    /// Prediction ⟨S⁻¹ b, φ⟩ with S already containing the current φ.
    pub fn predict(&self, phi: &[f64]) -> f64 {
        let w = solve(&self.s, &self.b, self.n);
        w.iter().zip(phi).map(|(a, b)| a * b).sum()
    }

    pub fn inverse(&self) -> Vec<f64> {
        invert(&self.s, self.n)
    }

    pub fn weights(&self) -> Vec<f64> {
        solve(&self.s, &self.b, self.n)
    }
}
