//! Experiment execution: per-(dataset, algorithm, run) cells, each with its
//! own derived seed so any subset of cells can run in any order — or in
//! parallel — and still produce identical outputs.

use rayon::prelude::*;
use std::path::{Path, PathBuf};
use std::time::Instant;

use vaw2_core::data::{generate_ar4, load_csv, master_seed_split, Dataset};
use vaw2_core::meta::{
    default_eta_aggregating, default_eta_ewa, AggregatingState, EwaState, TruncationPolicy,
};
use vaw2_core::pipeline::{run_stream, MetaCombiner, MklModel};
use vaw2_core::rff::{build_dictionary, sample_dictionary, KernelSpec};
use vaw2_core::vaw::VawState;

use crate::config::{AlgorithmSpec, DatasetSpec, ExperimentConfig, MetaKind};
use crate::emit::{
    emit_timings, emit_trajectory, emit_weights, ResultRow, ResultTable, TimingRow, TrajectoryRow,
};
use crate::CliError;

fn to_cli_error(e: vaw2_core::Error) -> CliError {
    use vaw2_core::Error as E;
    match e {
        E::Io { .. } | E::RaggedRow { .. } | E::NonNumericCell { .. } | E::EmptyInput(_) => {
            CliError::Data(e.to_string())
        }
        E::InvalidParameter { .. } | E::OutOfRange(_) => CliError::Config(e.to_string()),
        E::Protocol(_) | E::DimensionMismatch { .. } | E::Internal(_) => {
            CliError::Internal(e.to_string())
        }
    }
}

/// Builds the two-level model for one (algorithm, run) cell. Feature maps
/// are sampled from per-(run, kernel) seed streams, so every algorithm in a
/// given run sees the same random features.
pub fn build_model(
    specs: &[KernelSpec],
    input_dim: usize,
    config: &ExperimentConfig,
    algorithm: &AlgorithmSpec,
    run_seed: u64,
) -> Result<MklModel, CliError> {
    let maps = sample_dictionary(specs, config.m, input_dim, config.feature_variant, run_seed)
        .map_err(to_cli_error)?;
    let n = maps.len();
    let [lo, hi] = config.interval;
    let truncation = if algorithm.truncate_enabled() {
        TruncationPolicy::interval(lo, hi).map_err(to_cli_error)?
    } else {
        TruncationPolicy::disabled()
    };
    let meta = match algorithm.meta {
        MetaKind::Vaw => {
            MetaCombiner::VawMeta(VawState::new(n, config.meta_lambda()).map_err(to_cli_error)?)
        }
        MetaKind::Ewa => {
            MetaCombiner::Ewa(EwaState::new(n, default_eta_ewa(lo, hi)).map_err(to_cli_error)?)
        }
        MetaKind::Aggregating => MetaCombiner::Aggregating(
            AggregatingState::new(n, default_eta_aggregating(lo, hi), lo, hi)
                .map_err(to_cli_error)?,
        ),
    };
    MklModel::new(maps, config.lambda, meta, truncation).map_err(to_cli_error)
}

/// Loads or generates one dataset and normalizes it.
pub fn resolve_dataset(
    spec: &DatasetSpec,
    dataset_index: usize,
    master_seed: u64,
) -> Result<Dataset, CliError> {
    let raw = if let Some(path) = &spec.path {
        load_csv(path, spec.label_column).map_err(to_cli_error)?
    } else if let Some(ar4) = &spec.ar4 {
        let default_seed = master_seed_split(master_seed, "ar4", dataset_index as u64);
        generate_ar4(&ar4.to_config(default_seed)).map_err(to_cli_error)?
    } else {
        return Err(CliError::Config(format!(
            "dataset `{}` has neither `path` nor `ar4`",
            spec.name
        )));
    };
    Ok(raw.normalize())
}

struct CellOutcome {
    final_mse: f64,
    cumulative_mse: Vec<f64>,
    meta_weights: Vec<f64>,
    seconds: f64,
}

fn run_cell(
    specs: &[KernelSpec],
    dataset: &Dataset,
    config: &ExperimentConfig,
    algorithm: &AlgorithmSpec,
    run: usize,
) -> Result<CellOutcome, CliError> {
    let run_seed = master_seed_split(config.master_seed, "run", run as u64);
    let mut model = build_model(specs, dataset.dim(), config, algorithm, run_seed)?;
    let start = Instant::now();
    let trajectory = run_stream(&mut model, dataset, false).map_err(to_cli_error)?;
    let seconds = start.elapsed().as_secs_f64();
    Ok(CellOutcome {
        final_mse: trajectory.final_mse(),
        cumulative_mse: trajectory.cumulative_mse,
        meta_weights: model.meta_weights(),
        seconds,
    })
}

/// Everything a finished experiment produced, beyond the files on disk.
pub struct ExperimentOutcome {
    pub table: ResultTable,
    /// Datasets that could not be run, with the reason.
    pub failures: Vec<(String, CliError)>,
    pub out_dir: PathBuf,
}

impl ExperimentOutcome {
    /// Process exit code: internal errors dominate, then data errors.
    pub fn exit_code(&self) -> u8 {
        if self.failures.is_empty() {
            0
        } else if self
            .failures
            .iter()
            .any(|(_, e)| matches!(e, CliError::Internal(_)))
        {
            3
        } else {
            2
        }
    }
}

/// Runs the full grid: every dataset × algorithm × run. A dataset that
/// fails to load is reported and skipped; the rest still run. Outputs per
/// dataset: `<name>_trajectory.csv` (all algorithms and runs) and one
/// `<name>_<algorithm>_weights.csv` per algorithm (final weights of run 0).
/// Across datasets: `results.csv` and `timing.csv`.
pub fn run_experiment(
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<ExperimentOutcome, CliError> {
    config.validate()?;
    let specs = build_dictionary(&config.dictionary).map_err(to_cli_error)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Data(format!("{}: {e}", out_dir.display())))?;

    let mut table = ResultTable::default();
    let mut failures = Vec::new();
    let mut timings: Vec<TimingRow> = Vec::new();

    for (ds_index, ds_spec) in config.datasets.iter().enumerate() {
        let dataset = match resolve_dataset(ds_spec, ds_index, config.master_seed) {
            Ok(d) => d,
            Err(e) => {
                eprintln!("dataset `{}` skipped: {e}", ds_spec.name);
                failures.push((ds_spec.name.clone(), e));
                continue;
            }
        };

        // all (algorithm, run) cells of this dataset, in parallel
        let cells: Vec<(usize, usize)> = (0..config.algorithms.len())
            .flat_map(|a| (0..config.num_runs).map(move |r| (a, r)))
            .collect();
        let outcomes: Vec<Result<CellOutcome, CliError>> = cells
            .par_iter()
            .map(|&(a, r)| run_cell(&specs, &dataset, config, &config.algorithms[a], r))
            .collect();

        let mut failed = false;
        for (&(a, r), outcome) in cells.iter().zip(&outcomes) {
            if let Err(e) = outcome {
                eprintln!(
                    "dataset `{}` algorithm `{}` run {r} failed: {e}",
                    ds_spec.name,
                    config.algorithms[a].label()
                );
                failures.push((ds_spec.name.clone(), e.clone()));
                failed = true;
            }
        }
        if failed {
            continue;
        }
        let outcomes: Vec<CellOutcome> =
            outcomes.into_iter().map(|o| o.expect("checked")).collect();

        let mut trajectory_rows: Vec<TrajectoryRow> = Vec::new();
        for (cell_idx, &(a, r)) in cells.iter().enumerate() {
            let label = config.algorithms[a].label();
            let outcome = &outcomes[cell_idx];
            trajectory_rows.extend(outcome.cumulative_mse.iter().enumerate().map(|(t, &mse)| {
                TrajectoryRow {
                    t: t + 1,
                    algorithm: label.clone(),
                    run: r,
                    cumulative_mse: mse,
                }
            }));
            timings.push(TimingRow {
                dataset: ds_spec.name.clone(),
                algorithm: label,
                run: r,
                rounds: outcome.cumulative_mse.len(),
                seconds_total: outcome.seconds,
            });
        }
        emit_trajectory(
            &trajectory_rows,
            &out_dir.join(format!("{}_trajectory.csv", ds_spec.name)),
        )?;

        for (a, algorithm) in config.algorithms.iter().enumerate() {
            let label = algorithm.label();
            let per_run: Vec<f64> = (0..config.num_runs)
                .map(|r| {
                    let idx = cells
                        .iter()
                        .position(|&c| c == (a, r))
                        .expect("cell exists");
                    outcomes[idx].final_mse * 1e3
                })
                .collect();
            table.rows.push(ResultRow::from_runs(
                ds_spec.name.clone(),
                label.clone(),
                per_run,
            ));

            // weight dump from run 0, enough to draw the weight profiles
            let run0 = cells
                .iter()
                .position(|&c| c == (a, 0))
                .expect("cell exists");
            emit_weights(
                &specs,
                &outcomes[run0].meta_weights,
                &out_dir.join(format!("{}_{}_weights.csv", ds_spec.name, label)),
            )?;
        }
    }

    table.write_csv(&out_dir.join("results.csv"), config.num_runs)?;
    emit_timings(&timings, &out_dir.join("timing.csv"))?;

    Ok(ExperimentOutcome {
        table,
        failures,
        out_dir: out_dir.to_path_buf(),
    })
}
