//! Experiment configuration: a TOML document plus one-for-one command-line
//! overrides.

use serde::Deserialize;
use std::path::{Path, PathBuf};

use vaw2_core::data::Ar4Config;
use vaw2_core::rff::{DictionaryConfig, FeatureVariant};

use crate::CliError;

/// Which meta-learner combines the expert predictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetaKind {
    /// Linear VAW combination (the two-level VAW stack).
    Vaw,
    /// Exponentially weighted average.
    Ewa,
    /// Aggregating forecaster with the squared-loss substitution rule.
    Aggregating,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSpec {
    pub meta: MetaKind,
    /// Clamp expert predictions to the label interval before the meta sees
    /// them. Defaults to `false` for the VAW meta and `true` otherwise.
    pub truncate: Option<bool>,
}

impl AlgorithmSpec {
    pub fn truncate_enabled(&self) -> bool {
        self.truncate.unwrap_or(match self.meta {
            MetaKind::Vaw => false,
            MetaKind::Ewa | MetaKind::Aggregating => true,
        })
    }

    /// Stable label used in output files.
    pub fn label(&self) -> String {
        match (self.meta, self.truncate_enabled()) {
            (MetaKind::Vaw, false) => "vaw2".into(),
            (MetaKind::Vaw, true) => "vaw2-trunc".into(),
            (MetaKind::Ewa, true) => "vaw-ewa".into(),
            (MetaKind::Ewa, false) => "vaw-ewa-raw".into(),
            (MetaKind::Aggregating, _) => "vaw-aggr".into(),
        }
    }
}

/// AR(4) stream parameters as they appear in the config file. The seed
/// defaults to a value derived from the master seed and the dataset index.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ar4Spec {
    pub horizon: Option<usize>,
    pub seed: Option<u64>,
    pub noise_std: Option<f64>,
    pub coefficients: Option<[f64; 4]>,
}

impl Ar4Spec {
    pub fn to_config(&self, default_seed: u64) -> Ar4Config {
        let base = Ar4Config::default();
        Ar4Config {
            horizon: self.horizon.unwrap_or(base.horizon),
            seed: self.seed.unwrap_or(default_seed),
            noise_std: self.noise_std.unwrap_or(base.noise_std),
            coefficients: self.coefficients.unwrap_or(base.coefficients),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub name: String,
    /// CSV file path; mutually exclusive with `ar4`.
    pub path: Option<PathBuf>,
    /// Label column index (0-based); defaults to the last column.
    pub label_column: Option<usize>,
    /// Synthetic AR(4) stream; mutually exclusive with `path`.
    pub ar4: Option<Ar4Spec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_num_runs")]
    pub num_runs: usize,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Regularizer of the VAW meta-learner; defaults to `lambda`.
    pub meta_lambda: Option<f64>,
    #[serde(default = "default_variant")]
    pub feature_variant: FeatureVariant,
    /// Label interval [lo, hi] used for truncation and meta learning rates.
    #[serde(default = "default_interval")]
    pub interval: [f64; 2],
    /// Output directory; overridden by `--out-dir` or `VAW2_OUT_DIR`.
    pub out_dir: Option<PathBuf>,
    pub datasets: Vec<DatasetSpec>,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<AlgorithmSpec>,
    #[serde(default)]
    pub dictionary: DictionaryConfig,
}

fn default_num_runs() -> usize {
    5
}

fn default_m() -> usize {
    50
}

fn default_lambda() -> f64 {
    1.0
}

fn default_variant() -> FeatureVariant {
    FeatureVariant::CosSin
}

fn default_interval() -> [f64; 2] {
    [0.0, 1.0]
}

fn default_algorithms() -> Vec<AlgorithmSpec> {
    vec![
        AlgorithmSpec {
            meta: MetaKind::Vaw,
            truncate: Some(false),
        },
        AlgorithmSpec {
            meta: MetaKind::Vaw,
            truncate: Some(true),
        },
        AlgorithmSpec {
            meta: MetaKind::Ewa,
            truncate: Some(true),
        },
        AlgorithmSpec {
            meta: MetaKind::Aggregating,
            truncate: Some(true),
        },
    ]
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let config: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.num_runs == 0 {
            return Err(CliError::Config("num_runs must be at least 1".into()));
        }
        if self.m == 0 {
            return Err(CliError::Config("m must be at least 1".into()));
        }
        if !self.lambda.is_finite() || self.lambda <= 0.0 {
            return Err(CliError::Config(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if let Some(ml) = self.meta_lambda {
            if !ml.is_finite() || ml <= 0.0 {
                return Err(CliError::Config(format!(
                    "meta_lambda must be positive, got {ml}"
                )));
            }
        }
        if !self.interval[0].is_finite()
            || !self.interval[1].is_finite()
            || self.interval[0] >= self.interval[1]
        {
            return Err(CliError::Config(format!(
                "interval must satisfy lo < hi, got [{}, {}]",
                self.interval[0], self.interval[1]
            )));
        }
        if self.datasets.is_empty() {
            return Err(CliError::Config("no datasets configured".into()));
        }
        if self.algorithms.is_empty() {
            return Err(CliError::Config("no algorithms configured".into()));
        }
        let mut names = std::collections::HashSet::new();
        for ds in &self.datasets {
            if ds.name.is_empty() {
                return Err(CliError::Config("dataset name must not be empty".into()));
            }
            if !names.insert(&ds.name) {
                return Err(CliError::Config(format!(
                    "duplicate dataset name `{}`",
                    ds.name
                )));
            }
            match (&ds.path, &ds.ar4) {
                (Some(_), Some(_)) => {
                    return Err(CliError::Config(format!(
                        "dataset `{}` sets both `path` and `ar4`",
                        ds.name
                    )))
                }
                (None, None) => {
                    return Err(CliError::Config(format!(
                        "dataset `{}` needs either `path` or `ar4`",
                        ds.name
                    )))
                }
                _ => {}
            }
        }
        for alg in &self.algorithms {
            if alg.meta == MetaKind::Aggregating && !alg.truncate_enabled() {
                return Err(CliError::Config(
                    "the aggregating meta requires truncation (its substitution rule is only \
                     defined on the label interval)"
                        .into(),
                ));
            }
        }
        if self.dictionary.gaussian_variances.is_empty()
            && self.dictionary.laplacian_scales.is_empty()
        {
            return Err(CliError::Config("kernel dictionary grid is empty".into()));
        }
        Ok(())
    }

    pub fn meta_lambda(&self) -> f64 {
        self.meta_lambda.unwrap_or(self.lambda)
    }
}

/// One-for-one command-line overrides of config keys.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct ConfigOverrides {
    /// Override `master_seed`.
    #[arg(long)]
    pub master_seed: Option<u64>,
    /// Override `num_runs`.
    #[arg(long)]
    pub num_runs: Option<usize>,
    /// Override `m` (frequencies per kernel).
    #[arg(long)]
    pub m: Option<usize>,
    /// Override `lambda`.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Override `feature_variant` (`cos-sin` or `phase-shift`).
    #[arg(long, value_parser = parse_variant)]
    pub feature_variant: Option<FeatureVariant>,
}

fn parse_variant(s: &str) -> Result<FeatureVariant, String> {
    match s {
        "cos-sin" => Ok(FeatureVariant::CosSin),
        "phase-shift" => Ok(FeatureVariant::PhaseShift),
        other => Err(format!("unknown feature variant `{other}`")),
    }
}

impl ConfigOverrides {
    pub fn apply(&self, config: &mut ExperimentConfig) {
        if let Some(v) = self.master_seed {
            config.master_seed = v;
        }
        if let Some(v) = self.num_runs {
            config.num_runs = v;
        }
        if let Some(v) = self.m {
            config.m = v;
        }
        if let Some(v) = self.lambda {
            config.lambda = v;
        }
        if let Some(v) = self.feature_variant {
            config.feature_variant = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let config: ExperimentConfig = toml::from_str(
            r#"
            [[datasets]]
            name = "ar4"
            ar4 = {}
            "#,
        )
        .unwrap();
        config.validate().unwrap();
        assert_eq!(config.num_runs, 5);
        assert_eq!(config.m, 50);
        assert_eq!(config.lambda, 1.0);
        assert_eq!(config.feature_variant, FeatureVariant::CosSin);
        assert_eq!(config.interval, [0.0, 1.0]);
        assert_eq!(config.algorithms.len(), 4);
        let labels: Vec<String> = config.algorithms.iter().map(|a| a.label()).collect();
        assert_eq!(labels, ["vaw2", "vaw2-trunc", "vaw-ewa", "vaw-aggr"]);
        let dict = vaw2_core::rff::build_dictionary(&config.dictionary).unwrap();
        assert_eq!(dict.len(), 76);
    }

    #[test]
    fn rejects_contradictory_dataset_spec() {
        let config: ExperimentConfig = toml::from_str(
            r#"
            [[datasets]]
            name = "x"
            path = "x.csv"
            ar4 = {}
            "#,
        )
        .unwrap();
        assert!(config.validate().is_err());
    }

    #[test]
    fn rejects_bad_scalars() {
        let base = r#"
            [[datasets]]
            name = "ar4"
            ar4 = {}
        "#;
        for (key, value) in [("num_runs", "0"), ("m", "0"), ("lambda", "0.0")] {
            let text = format!("{key} = {value}\n{base}");
            let config: ExperimentConfig = toml::from_str(&text).unwrap();
            assert!(
                config.validate().is_err(),
                "{key}={value} should be rejected"
            );
        }
    }

    #[test]
    fn aggregating_without_truncation_rejected() {
        let config: ExperimentConfig = toml::from_str(
            r#"
            [[datasets]]
            name = "ar4"
            ar4 = {}
            [[algorithms]]
            meta = "aggregating"
            truncate = false
            "#,
        )
        .unwrap();
        assert!(config.validate().is_err());
    }

    #[test]
    fn overrides_apply_one_for_one() {
        let mut config: ExperimentConfig = toml::from_str(
            r#"
            [[datasets]]
            name = "ar4"
            ar4 = {}
            "#,
        )
        .unwrap();
        let overrides = ConfigOverrides {
            master_seed: Some(9),
            num_runs: Some(2),
            m: Some(10),
            lambda: Some(0.5),
            feature_variant: Some(FeatureVariant::PhaseShift),
        };
        overrides.apply(&mut config);
        assert_eq!(config.master_seed, 9);
        assert_eq!(config.num_runs, 2);
        assert_eq!(config.m, 10);
        assert_eq!(config.lambda, 0.5);
        assert_eq!(config.feature_variant, FeatureVariant::PhaseShift);
    }
}
