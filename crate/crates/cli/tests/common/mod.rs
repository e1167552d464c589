//! Shared helpers for the harness test suites: a dense ridge oracle
//! (independent of the incremental path) and full-scale benchmark drivers.

#![allow(dead_code)]

use rayon::prelude::*;
use std::path::PathBuf;
use std::sync::{Mutex, MutexGuard, OnceLock};

use vaw2_cli::config::{AlgorithmSpec, ExperimentConfig, MetaKind};
use vaw2_cli::runner::build_model;
use vaw2_core::data::{master_seed_split, Dataset};
use vaw2_core::pipeline::run_stream;
use vaw2_core::rff::{build_dictionary, DictionaryConfig, KernelSpec};

/// Serializes tests that measure wall-clock time or run large streams, so
/// sibling tests cannot distort them.
pub fn exclusive() -> MutexGuard<'static, ()> {
    static GATE: OnceLock<Mutex<()>> = OnceLock::new();
    GATE.get_or_init(|| Mutex::new(()))
        .lock()
        .unwrap_or_else(|poisoned| poisoned.into_inner())
}

/// Dense inversion via Gauss-Jordan with partial pivoting.
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

pub fn solve(matrix: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let inv = invert(matrix, n);
    (0..n)
        .map(|i| (0..n).map(|j| inv[i * n + j] * b[j]).sum())
        .collect()
}

/// Streaming S = λI + Σ φφᵀ, b = Σ yφ oracle.
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

    pub fn predict(&self, phi: &[f64]) -> f64 {
        let w = solve(&self.s, &self.b, self.n);
        w.iter().zip(phi).map(|(a, b)| a * b).sum()
    }
}

/// Benchmark defaults: the 76-kernel dictionary, m = 50 cos/sin features,
/// λ = 1, labels on [0, 1], 5 runs.
pub fn benchmark_config(num_runs: usize, master_seed: u64) -> ExperimentConfig {
    let config: ExperimentConfig = toml::from_str(
        r#"
        [[datasets]]
        name = "placeholder"
        ar4 = {}
        "#,
    )
    .expect("valid baseline config");
    ExperimentConfig {
        master_seed,
        num_runs,
        ..config
    }
}

pub fn algorithm(meta: MetaKind, truncate: bool) -> AlgorithmSpec {
    AlgorithmSpec {
        meta,
        truncate: Some(truncate),
    }
}

pub fn default_dictionary() -> Vec<KernelSpec> {
    build_dictionary(&DictionaryConfig::default()).expect("default grid")
}

/// Runs `num_runs` independent benchmark repetitions of one algorithm over
/// a normalized dataset and returns the final MSE of each run, scaled by
/// 10³. Run r uses feature maps seeded from (master_seed, "run", r), so all
/// algorithms given the same master seed see identical features.
pub fn benchmark_finals(
    dataset: &Dataset,
    meta: MetaKind,
    truncate: bool,
    config: &ExperimentConfig,
) -> Vec<f64> {
    let specs = default_dictionary();
    let alg = algorithm(meta, truncate);
    (0..config.num_runs)
        .into_par_iter()
        .map(|run| {
            let run_seed = master_seed_split(config.master_seed, "run", run as u64);
            let mut model =
                build_model(&specs, dataset.dim(), config, &alg, run_seed).expect("model builds");
            let trajectory = run_stream(&mut model, dataset, false).expect("stream runs");
            trajectory.final_mse() * 1e3
        })
        .collect()
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Directory holding manually downloaded benchmark CSVs; see the README for
/// how to obtain them. Resolution: $VAW2_DATA_DIR, else `<workspace>/data`.
pub fn data_dir() -> PathBuf {
    if let Some(dir) = std::env::var_os("VAW2_DATA_DIR") {
        return PathBuf::from(dir);
    }
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join("data")
}
