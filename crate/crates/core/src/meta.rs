//! Second-level combiners that map the vector of expert predictions to a
//! single prediction: exponentially weighted averaging (EWA), the
//! aggregating forecaster with the squared-loss substitution rule, and the
//! truncation preprocessor. (The linear VAW meta-learner reuses
//! [`crate::vaw::VawState`] with dimension N.)
//!
//! EWA and the aggregating forecaster keep their weights in log space and
//! renormalize by max-subtraction, so products of exp(−η·loss) factors
//! cannot underflow on long streams.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Componentwise clamping of expert predictions to a known label interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    enabled: bool,
    lo: f64,
    hi: f64,
}

impl TruncationPolicy {
    pub fn disabled() -> Self {
        TruncationPolicy {
            enabled: false,
            lo: 0.0,
            hi: 0.0,
        }
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(Error::invalid(
                "truncation interval",
                format!("need lo < hi, got [{lo}, {hi}]"),
            ));
        }
        Ok(TruncationPolicy {
            enabled: true,
            lo,
            hi,
        })
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn apply_in_place(&self, z: &mut [f64]) {
        if self.enabled {
            for v in z {
                *v = v.clamp(self.lo, self.hi);
            }
        }
    }

    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        let mut out = z.to_vec();
        self.apply_in_place(&mut out);
        out
    }
}

/// Clamps each entry of `z` to the policy's interval (identity when the
/// policy is disabled).
pub fn truncate(z: &[f64], policy: &TruncationPolicy) -> Vec<f64> {
    policy.apply(z)
}

fn check_len(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            got,
        });
    }
    Ok(())
}

/// log Σ exp(v_i), stable under large magnitudes.
fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Shared exponential-weights recursion: lw_j += −η(z_j − y)², renormalized.
fn exp_weights_update(log_weights: &mut [f64], eta: f64, z: &[f64], y: f64) -> Result<()> {
    check_len("expert predictions", log_weights.len(), z.len())?;
    for (lw, &zj) in log_weights.iter_mut().zip(z) {
        let diff = zj - y;
        *lw -= eta * diff * diff;
    }
    let norm = log_sum_exp(log_weights);
    if !norm.is_finite() {
        return Err(Error::Internal(
            "exponential weights collapsed to zero mass".into(),
        ));
    }
    for lw in log_weights.iter_mut() {
        *lw -= norm;
    }
    Ok(())
}

fn validate_simplex(weights: &[f64]) -> Result<Vec<f64>> {
    if weights.is_empty() {
        return Err(Error::EmptyInput("weight vector"));
    }
    let sum: f64 = weights.iter().sum();
    if weights.iter().any(|&w| !w.is_finite() || w < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(
            "weights",
            format!("not a probability vector (sum {sum})"),
        ));
    }
    Ok(weights.iter().map(|&w| (w / sum).ln()).collect())
}

/// Exponentially weighted average forecaster over N experts.
#[derive(Debug, Clone, PartialEq)]
pub struct EwaState {
    log_weights: Vec<f64>,
    eta: f64,
}

impl EwaState {
    /// Uniform initial weights 1/N.
    pub fn new(n: usize, eta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "need at least one expert"));
        }
        if !eta.is_finite() || eta <= 0.0 {
            return Err(Error::invalid(
                "eta",
                format!("learning rate must be positive, got {eta}"),
            ));
        }
        Ok(EwaState {
            log_weights: vec![-(n as f64).ln(); n],
            eta,
        })
    }

    pub fn with_weights(weights: &[f64], eta: f64) -> Result<Self> {
        let mut state = Self::new(weights.len(), eta)?;
        state.log_weights = validate_simplex(weights)?;
        Ok(state)
    }

    pub fn len(&self) -> usize {
        self.log_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_weights.is_empty()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Current simplex weights.
    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|lw| lw.exp()).collect()
    }

    /// ⟨weights, z⟩.
    pub fn predict(&self, z: &[f64]) -> Result<f64> {
        check_len("expert predictions", self.len(), z.len())?;
        Ok(self
            .log_weights
            .iter()
            .zip(z)
            .map(|(lw, zj)| lw.exp() * zj)
            .sum())
    }

    /// Multiplies each weight by exp(−η(z_j − y)²) and renormalizes.
    pub fn update(&mut self, z: &[f64], y: f64) -> Result<()> {
        exp_weights_update(&mut self.log_weights, self.eta, z, y)
    }
}

/// Aggregating forecaster for squared loss on a known prediction interval
/// [a, b], with the standard substitution rule
///
///   γ = (a+b)/2 + ln(S_b / S_a) / (2η(b−a)),
///   S_y = Σ_j w_j · exp(−η (y − z_j)²),
///
/// whose output is guaranteed to stay inside [a, b] whenever every z_j does.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatingState {
    log_weights: Vec<f64>,
    eta: f64,
    lo: f64,
    hi: f64,
}

impl AggregatingState {
    pub fn new(n: usize, eta: f64, lo: f64, hi: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "need at least one expert"));
        }
        if !eta.is_finite() || eta <= 0.0 {
            return Err(Error::invalid(
                "eta",
                format!("learning rate must be positive, got {eta}"),
            ));
        }
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(Error::invalid(
                "prediction interval",
                format!("need lo < hi, got [{lo}, {hi}]"),
            ));
        }
        Ok(AggregatingState {
            log_weights: vec![-(n as f64).ln(); n],
            eta,
            lo,
            hi,
        })
    }

    pub fn with_weights(weights: &[f64], eta: f64, lo: f64, hi: f64) -> Result<Self> {
        let mut state = Self::new(weights.len(), eta, lo, hi)?;
        state.log_weights = validate_simplex(weights)?;
        Ok(state)
    }

    pub fn len(&self) -> usize {
        self.log_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_weights.is_empty()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|lw| lw.exp()).collect()
    }

    /// Substitution prediction; requires every z_j already truncated into
    /// the state's interval.
    pub fn predict(&self, z: &[f64]) -> Result<f64> {
        check_len("expert predictions", self.len(), z.len())?;
        if let Some(bad) = z.iter().find(|v| !(self.lo..=self.hi).contains(v)) {
            return Err(Error::OutOfRange(format!(
                "expert prediction {bad} outside [{}, {}]",
                self.lo, self.hi
            )));
        }
        let (a, b) = (self.lo, self.hi);
        let log_s_b = log_sum_exp(
            &self
                .log_weights
                .iter()
                .zip(z)
                .map(|(lw, zj)| lw - self.eta * (b - zj) * (b - zj))
                .collect::<Vec<_>>(),
        );
        let log_s_a = log_sum_exp(
            &self
                .log_weights
                .iter()
                .zip(z)
                .map(|(lw, zj)| lw - self.eta * (a - zj) * (a - zj))
                .collect::<Vec<_>>(),
        );
        let gamma = 0.5 * (a + b) + (log_s_b - log_s_a) / (2.0 * self.eta * (b - a));
        // in-range by construction; clamp away float dust at the endpoints
        Ok(gamma.clamp(a, b))
    }

    /// Same exponential-weights recursion as EWA, with this state's η.
    pub fn update(&mut self, z: &[f64], y: f64) -> Result<()> {
        exp_weights_update(&mut self.log_weights, self.eta, z, y)
    }
}

/// Learning rate under which squared loss on an interval of width w is
/// exp-concave: 1 / (2w²). On [−Y, Y] this is the usual 1/(8Y²).
pub fn default_eta_ewa(range_lo: f64, range_hi: f64) -> f64 {
    let width = range_hi - range_lo;
    1.0 / (2.0 * width * width)
}

/// Mixability constant of squared loss on an interval of width w: 2 / w².
/// On [0, 1] this is the classical η = 2.
pub fn default_eta_aggregating(range_lo: f64, range_hi: f64) -> f64 {
    let width = range_hi - range_lo;
    2.0 / (width * width)
}

/// Worst-case EWA meta-regret over any horizon: 4·Y²·ln N with Y = range/2.
pub fn ewa_meta_regret_bound(n: usize, range: f64) -> f64 {
    let y = 0.5 * range;
    4.0 * y * y * (n as f64).ln()
}
