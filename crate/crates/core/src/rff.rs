//! Translation-invariant kernels, their spectral samplers, and random
//! Fourier feature maps.
//!
//! A Gaussian or Laplacian kernel k(x, y) = κ(x − y) is approximated by a
//! finite feature map Φ built from frequencies drawn from the kernel's
//! spectral density (Gaussian ↔ normal frequencies, Laplacian ↔ Cauchy
//! frequencies). The inner product ⟨Φ(x), Φ(y)⟩ / m is an unbiased estimate
//! of k(x, y).

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::data::master_seed_split;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    Gaussian,
    Laplacian,
}

impl std::fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KernelFamily::Gaussian => write!(f, "gaussian"),
            KernelFamily::Laplacian => write!(f, "laplacian"),
        }
    }
}

/// One dictionary entry: a kernel family plus its bandwidth.
///
/// The bandwidth is σ² for Gaussian kernels and σ for Laplacian kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub bandwidth: f64,
}

impl KernelSpec {
    /// Gaussian kernel exp(−‖x−y‖₂² / (2σ²)), parameterized by the variance σ².
    pub fn gaussian(variance: f64) -> Result<Self> {
        Self::new(KernelFamily::Gaussian, variance)
    }

    /// Laplacian kernel exp(−‖x−y‖₁ / σ), parameterized by the scale σ.
    pub fn laplacian(scale: f64) -> Result<Self> {
        Self::new(KernelFamily::Laplacian, scale)
    }

    pub fn new(family: KernelFamily, bandwidth: f64) -> Result<Self> {
        if !bandwidth.is_finite() || bandwidth <= 0.0 {
            return Err(Error::invalid(
                "bandwidth",
                format!("must be a positive finite real, got {bandwidth}"),
            ));
        }
        Ok(KernelSpec { family, bandwidth })
    }

    /// Exact kernel value k(x, y). Always in (0, 1].
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                context: "kernel evaluation",
                expected: x.len(),
                got: y.len(),
            });
        }
        let v = match self.family {
            KernelFamily::Gaussian => {
                let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-sq / (2.0 * self.bandwidth)).exp()
            }
            KernelFamily::Laplacian => {
                let l1: f64 = x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum();
                (-l1 / self.bandwidth).exp()
            }
        };
        Ok(v)
    }
}

/// Shape of the sampled feature map.
///
/// `PhaseShift` produces m features √2·cos(⟨ω_k, x⟩ + b_k) with random
/// phases; `CosSin` drops the phases and emits the m pairs
/// (cos⟨ω_k, x⟩, sin⟨ω_k, x⟩), so its output dimension is 2m.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureVariant {
    PhaseShift,
    CosSin,
}

impl FeatureVariant {
    pub fn output_dim(&self, m: usize) -> usize {
        match self {
            FeatureVariant::PhaseShift => m,
            FeatureVariant::CosSin => 2 * m,
        }
    }
}

/// A sampled random Fourier feature map for one kernel.
///
/// Immutable after sampling: evaluating features is a pure function of x,
/// so one map may be shared across any number of concurrent readers.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    spec: KernelSpec,
    variant: FeatureVariant,
    /// m × d matrix; row k is the frequency ω_k drawn from the spectral density.
    frequencies: Array2<f64>,
    /// Phases b_k ~ U[0, 2π), present only for the PhaseShift variant.
    phases: Option<Array1<f64>>,
}

impl FeatureMap {
    /// Draws a feature map: m frequencies of dimension d from the kernel's
    /// spectral density, plus phases for the PhaseShift variant.
    ///
    /// Gaussian frequencies are normal with per-coordinate standard deviation
    /// 1/σ; Laplacian frequencies are coordinate-wise Cauchy with scale 1/σ,
    /// drawn by the inverse-CDF transform tan(π(u − ½))/σ so the marginals
    /// are exact. Extreme Cauchy draws are kept as-is; the cos/sin features
    /// remain bounded regardless.
    pub fn sample(
        spec: KernelSpec,
        m: usize,
        d: usize,
        variant: FeatureVariant,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("m", "frequency count must be at least 1"));
        }
        if d == 0 {
            return Err(Error::invalid("d", "input dimension must be at least 1"));
        }
        let mut frequencies = Array2::zeros((m, d));
        match spec.family {
            KernelFamily::Gaussian => {
                // spectral density N(0, σ⁻² I); bandwidth holds σ²
                let coord_std = spec.bandwidth.sqrt().recip();
                for w in frequencies.iter_mut() {
                    let n: f64 = StandardNormal.sample(rng);
                    *w = n * coord_std;
                }
            }
            KernelFamily::Laplacian => {
                let scale = spec.bandwidth.recip();
                for w in frequencies.iter_mut() {
                    let u: f64 = rng.random();
                    *w = (PI * (u - 0.5)).tan() * scale;
                }
            }
        }
        let phases = match variant {
            FeatureVariant::PhaseShift => Some(Array1::from_iter(
                (0..m).map(|_| rng.random::<f64>() * 2.0 * PI),
            )),
            FeatureVariant::CosSin => None,
        };
        Ok(FeatureMap {
            spec,
            variant,
            frequencies,
            phases,
        })
    }

    pub fn spec(&self) -> KernelSpec {
        self.spec
    }

    pub fn variant(&self) -> FeatureVariant {
        self.variant
    }

    pub fn m(&self) -> usize {
        self.frequencies.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.frequencies.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.variant.output_dim(self.m())
    }

    pub fn frequencies(&self) -> &Array2<f64> {
        &self.frequencies
    }

    pub fn phases(&self) -> Option<&Array1<f64>> {
        self.phases.as_ref()
    }

    /// Evaluates the feature vector Φ(x).
    pub fn features(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.output_dim()];
        self.features_into(x, &mut out)?;
        Ok(out)
    }

    /// Evaluates Φ(x) into a caller-provided buffer of length `output_dim()`.
    pub fn features_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "feature evaluation",
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        if out.len() != self.output_dim() {
            return Err(Error::DimensionMismatch {
                context: "feature output buffer",
                expected: self.output_dim(),
                got: out.len(),
            });
        }
        let sqrt2 = std::f64::consts::SQRT_2;
        match self.variant {
            FeatureVariant::PhaseShift => {
                let phases = self.phases.as_ref().expect("phase-shift map has phases");
                for (k, row) in self.frequencies.rows().into_iter().enumerate() {
                    let proj: f64 = row.iter().zip(x).map(|(w, xi)| w * xi).sum();
                    out[k] = sqrt2 * (proj + phases[k]).cos();
                }
            }
            FeatureVariant::CosSin => {
                for (k, row) in self.frequencies.rows().into_iter().enumerate() {
                    let proj: f64 = row.iter().zip(x).map(|(w, xi)| w * xi).sum();
                    let (s, c) = proj.sin_cos();
                    out[2 * k] = c;
                    out[2 * k + 1] = s;
                }
            }
        }
        Ok(())
    }

    /// Monte Carlo kernel estimate ⟨Φ(x), Φ(y)⟩ / m.
    pub fn approximate_kernel(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let fx = self.features(x)?;
        let fy = self.features(y)?;
        let dot: f64 = fx.iter().zip(&fy).map(|(a, b)| a * b).sum();
        Ok(dot / self.m() as f64)
    }
}

/// Kernel dictionary: a grid of Gaussian variances followed by a grid of
/// Laplacian scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DictionaryConfig {
    pub gaussian_variances: Vec<f64>,
    pub laplacian_scales: Vec<f64>,
}

impl Default for DictionaryConfig {
    /// The default 76-kernel grid: 51 Gaussian kernels with
    /// σ² = 10^(2i/25 − 2) for i = 0..50 and 25 Laplacian kernels with
    /// σ = 10^(i/6 − 2) for i = 0..24.
    fn default() -> Self {
        DictionaryConfig {
            gaussian_variances: (0..=50)
                .map(|i| 10f64.powf(2.0 * i as f64 / 25.0 - 2.0))
                .collect(),
            laplacian_scales: (0..=24).map(|i| 10f64.powf(i as f64 / 6.0 - 2.0)).collect(),
        }
    }
}

/// Materializes the dictionary grid, Gaussian entries first.
pub fn build_dictionary(config: &DictionaryConfig) -> Result<Vec<KernelSpec>> {
    if config.gaussian_variances.is_empty() && config.laplacian_scales.is_empty() {
        return Err(Error::EmptyInput("kernel dictionary grid"));
    }
    let mut specs =
        Vec::with_capacity(config.gaussian_variances.len() + config.laplacian_scales.len());
    for &v in &config.gaussian_variances {
        specs.push(KernelSpec::gaussian(v)?);
    }
    for &s in &config.laplacian_scales {
        specs.push(KernelSpec::laplacian(s)?);
    }
    Ok(specs)
}

/// Samples one feature map per dictionary entry.
///
/// Each kernel gets its own PRNG stream derived from `seed` and the kernel's
/// index, so reordering or editing other dictionary entries cannot silently
/// reshuffle the randomness of a given kernel.
pub fn sample_dictionary(
    specs: &[KernelSpec],
    m: usize,
    d: usize,
    variant: FeatureVariant,
    seed: u64,
) -> Result<Vec<FeatureMap>> {
    specs
        .iter()
        .enumerate()
        .map(|(j, spec)| {
            let mut rng = ChaCha8Rng::seed_from_u64(master_seed_split(seed, "kernel", j as u64));
            FeatureMap::sample(*spec, m, d, variant, &mut rng)
        })
        .collect()
}
