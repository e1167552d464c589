//! The Vovk-Azoury-Warmuth online ridge forecaster.
//!
//! The forecaster maintains P = S_t⁻¹ for S_t = λI + Σ_{i≤t} φ_i φ_iᵀ via
//! rank-one Sherman-Morrison updates, and the accumulator b = Σ_{i<t} y_i φ_i.
//! Its distinguishing trait is that the current round's features enter S_t
//! *before* the prediction ⟨P b, φ_t⟩ is made, which is what yields
//! logarithmic regret for squared loss in fixed dimension.
//!
//! A round is a strict two-step protocol: `absorb_features` (returns the
//! prediction) followed by `absorb_label`. The phase machine rejects any
//! other ordering so that no update can peek at a label before the
//! prediction is out.

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How many rank-one updates may pass between explicit re-symmetrizations
/// of the maintained inverse. Bounds floating-point asymmetry drift on long
/// streams.
const SYMMETRIZE_EVERY: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    AwaitingFeatures,
    AwaitingLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VawState {
    lambda: f64,
    dim: usize,
    /// P = S_t⁻¹, symmetric positive definite.
    inv_matrix: Array2<f64>,
    /// b = Σ_{i<t} y_i φ_i.
    accumulator: Array1<f64>,
    rounds_seen: u64,
    phase: Phase,
    updates: u64,
}

impl VawState {
    /// Fresh state: P = λ⁻¹ I, b = 0.
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "dimension must be at least 1"));
        }
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(Error::invalid(
                "lambda",
                format!("regularizer must be a positive finite real, got {lambda}"),
            ));
        }
        Ok(VawState {
            lambda,
            dim,
            inv_matrix: Array2::eye(dim) / lambda,
            accumulator: Array1::zeros(dim),
            rounds_seen: 0,
            phase: Phase::AwaitingFeatures,
            updates: 0,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rounds_seen(&self) -> u64 {
        self.rounds_seen
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn inv_matrix(&self) -> &Array2<f64> {
        &self.inv_matrix
    }

    pub fn accumulator(&self) -> &Array1<f64> {
        &self.accumulator
    }

    /// Current linear coefficients P·b (the ridge solution over everything
    /// absorbed so far).
    pub fn weights(&self) -> Array1<f64> {
        self.inv_matrix.dot(&self.accumulator)
    }

    /// Folds the round-t features into S_t and returns the prediction
    /// ⟨P_t b, φ_t⟩.
    pub fn absorb_features(&mut self, phi: &[f64]) -> Result<f64> {
        if self.phase != Phase::AwaitingFeatures {
            return Err(Error::Protocol(
                "absorb_features called while a label is pending",
            ));
        }
        self.check_dim(phi)?;
        let phi = ArrayView1::from(phi);

        // Sherman-Morrison: P ← P − (Pφ)(Pφ)ᵀ / (1 + φᵀPφ)
        let u = self.inv_matrix.dot(&phi);
        let q = phi.dot(&u);
        let denom = 1.0 + q;
        // φᵀPφ ≥ 0 for positive definite P, so denom ≥ 1 always; anything
        // smaller means the state is corrupt.
        if denom < 1.0 - 1e-12 {
            return Err(Error::Internal(format!(
                "Sherman-Morrison denominator {denom} < 1; inverse no longer positive definite"
            )));
        }
        let inv_denom = denom.recip();
        for (i, mut row) in self.inv_matrix.rows_mut().into_iter().enumerate() {
            row.scaled_add(-u[i] * inv_denom, &u);
        }
        self.updates += 1;
        if self.updates.is_multiple_of(SYMMETRIZE_EVERY) {
            self.symmetrize();
        }

        // With P symmetric, ⟨P_t b, φ⟩ = ⟨b, P_t φ⟩ and P_t φ = u / denom.
        let prediction = self.accumulator.dot(&u) * inv_denom;
        self.phase = Phase::AwaitingLabel;
        Ok(prediction)
    }

    /// Reveals the label for the features passed to the preceding
    /// `absorb_features` call. `phi` must be that same vector.
    pub fn absorb_label(&mut self, phi: &[f64], y: f64) -> Result<()> {
        if self.phase != Phase::AwaitingLabel {
            return Err(Error::Protocol(
                "absorb_label called before absorb_features",
            ));
        }
        self.check_dim(phi)?;
        let phi = ArrayView1::from(phi);
        self.accumulator.scaled_add(y, &phi);
        self.rounds_seen += 1;
        self.phase = Phase::AwaitingFeatures;
        Ok(())
    }

    /// One full round: absorb features, return the prediction made before
    /// the label was revealed, then absorb the label.
    pub fn step(&mut self, phi: &[f64], y: f64) -> Result<f64> {
        let prediction = self.absorb_features(phi)?;
        self.absorb_label(phi, y)?;
        Ok(prediction)
    }

    fn check_dim(&self, phi: &[f64]) -> Result<()> {
        if phi.len() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "feature vector",
                expected: self.dim,
                got: phi.len(),
            });
        }
        Ok(())
    }

    fn symmetrize(&mut self) {
        let n = self.dim;
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (self.inv_matrix[(i, j)] + self.inv_matrix[(j, i)]);
                self.inv_matrix[(i, j)] = avg;
                self.inv_matrix[(j, i)] = avg;
            }
        }
    }

    /// Snapshot for checkpoint/resume. Only allowed at a round boundary.
    pub fn snapshot(&self) -> Result<VawSnapshot> {
        if self.phase != Phase::AwaitingFeatures {
            return Err(Error::Protocol("snapshot taken mid-round"));
        }
        Ok(VawSnapshot {
            dim: self.dim,
            lambda: self.lambda,
            inv_matrix: self.inv_matrix.iter().copied().collect(),
            accumulator: self.accumulator.to_vec(),
            rounds_seen: self.rounds_seen,
        })
    }

    /// Rebuilds a state from a snapshot, resuming at a round boundary.
    pub fn restore(snapshot: &VawSnapshot) -> Result<Self> {
        let dim = snapshot.dim;
        if dim == 0 {
            return Err(Error::invalid(
                "dim",
                "snapshot dimension must be at least 1",
            ));
        }
        if snapshot.inv_matrix.len() != dim * dim {
            return Err(Error::invalid(
                "inv_matrix",
                format!(
                    "snapshot matrix has {} entries, expected {}",
                    snapshot.inv_matrix.len(),
                    dim * dim
                ),
            ));
        }
        if snapshot.accumulator.len() != dim {
            return Err(Error::invalid(
                "accumulator",
                format!(
                    "snapshot accumulator has {} entries, expected {dim}",
                    snapshot.accumulator.len()
                ),
            ));
        }
        if !snapshot.lambda.is_finite() || snapshot.lambda <= 0.0 {
            return Err(Error::invalid(
                "lambda",
                "snapshot regularizer must be positive",
            ));
        }
        let inv_matrix = Array2::from_shape_vec((dim, dim), snapshot.inv_matrix.clone())
            .expect("length checked above");
        Ok(VawState {
            lambda: snapshot.lambda,
            dim,
            inv_matrix,
            accumulator: Array1::from_vec(snapshot.accumulator.clone()),
            rounds_seen: snapshot.rounds_seen,
            phase: Phase::AwaitingFeatures,
            updates: snapshot.rounds_seen,
        })
    }
}

/// Serializable round-boundary snapshot of a forecaster; the matrix is
/// stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VawSnapshot {
    pub dim: usize,
    pub lambda: f64,
    pub inv_matrix: Vec<f64>,
    pub accumulator: Vec<f64>,
    pub rounds_seen: u64,
}

/// Worst-case regret bound for the forecaster over `horizon` rounds against
/// a fixed comparator:
///
///   (λ/2)·‖w‖² + (dim·Y²/2)·ln(1 + ρ²·T / (λ·dim))
///
/// where Y bounds |y_t| and ρ bounds ‖φ_t‖₂. Holds deterministically for
/// every sequence satisfying those bounds.
pub fn vaw_regret_bound(
    lambda: f64,
    dim: usize,
    label_bound: f64,
    feature_norm_bound: f64,
    horizon: u64,
    comparator_norm: f64,
) -> f64 {
    let d = dim as f64;
    let t = horizon as f64;
    let rho2 = feature_norm_bound * feature_norm_bound;
    0.5 * lambda * comparator_norm * comparator_norm
        + 0.5 * d * label_bound * label_bound * (1.0 + rho2 * t / (lambda * d)).ln()
}
