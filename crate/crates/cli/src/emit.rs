//! Output files: trajectory and weight CSVs plus the result table. Every
//! write goes to a temporary sibling first and is renamed into place, so a
//! crash never leaves a half-written file. No timestamps appear in any of
//! these files; identical runs produce identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use vaw2_core::rff::KernelSpec;

use crate::CliError;

/// One row of a trajectory file.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub t: usize,
    pub algorithm: String,
    pub run: usize,
    pub cumulative_mse: f64,
}

pub const TRAJECTORY_HEADER: &str = "t,algorithm,run,cumulative_mse";

/// Writes `t,algorithm,run,cumulative_mse` rows (one per round) atomically.
pub fn emit_trajectory(rows: &[TrajectoryRow], path: &Path) -> Result<(), CliError> {
    let mut text = String::with_capacity(32 * (rows.len() + 1));
    text.push_str(TRAJECTORY_HEADER);
    text.push('\n');
    for row in rows {
        writeln!(
            text,
            "{},{},{},{}",
            row.t, row.algorithm, row.run, row.cumulative_mse
        )
        .expect("string write");
    }
    write_atomic(path, &text)
}

/// Parses a trajectory file back; inverse of [`emit_trajectory`].
pub fn parse_trajectory(path: &Path) -> Result<Vec<TrajectoryRow>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == TRAJECTORY_HEADER => {}
        other => {
            return Err(CliError::Data(format!(
                "{}: unexpected header {other:?}",
                path.display()
            )))
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(CliError::Data(format!(
                "{}: line {}: expected 4 fields",
                path.display(),
                idx + 2
            )));
        }
        let parse_err = |what: &str| {
            CliError::Data(format!("{}: line {}: bad {what}", path.display(), idx + 2))
        };
        rows.push(TrajectoryRow {
            t: fields[0].parse().map_err(|_| parse_err("t"))?,
            algorithm: fields[1].to_string(),
            run: fields[2].parse().map_err(|_| parse_err("run"))?,
            cumulative_mse: fields[3].parse().map_err(|_| parse_err("cumulative_mse"))?,
        });
    }
    Ok(rows)
}

pub const WEIGHTS_HEADER: &str = "kernel_index,family,bandwidth,weight";

/// Writes the final combination weight of every kernel, one row per
/// dictionary entry.
pub fn emit_weights(specs: &[KernelSpec], weights: &[f64], path: &Path) -> Result<(), CliError> {
    if specs.len() != weights.len() {
        return Err(CliError::Internal(format!(
            "weight dump size mismatch: {} kernels vs {} weights",
            specs.len(),
            weights.len()
        )));
    }
    let mut text = String::new();
    text.push_str(WEIGHTS_HEADER);
    text.push('\n');
    for (j, (spec, w)) in specs.iter().zip(weights).enumerate() {
        writeln!(text, "{},{},{},{}", j, spec.family, spec.bandwidth, w).expect("string write");
    }
    write_atomic(path, &text)
}

/// Aggregated final MSE per (dataset, algorithm), scaled by 10³.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub dataset: String,
    pub algorithm: String,
    pub per_run_mse_x1000: Vec<f64>,
    pub mean_mse_x1000: f64,
    pub std_mse_x1000: f64,
}

impl ResultRow {
    pub fn from_runs(dataset: String, algorithm: String, per_run: Vec<f64>) -> Self {
        let n = per_run.len() as f64;
        let mean = per_run.iter().sum::<f64>() / n;
        let std = if per_run.len() > 1 {
            (per_run.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        ResultRow {
            dataset,
            algorithm,
            per_run_mse_x1000: per_run,
            mean_mse_x1000: mean,
            std_mse_x1000: std,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn get(&self, dataset: &str, algorithm: &str) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.dataset == dataset && r.algorithm == algorithm)
    }

    /// CSV with one row per (dataset, algorithm) in insertion order.
    pub fn write_csv(&self, path: &Path, num_runs: usize) -> Result<(), CliError> {
        let mut text = String::from("dataset,algorithm,mean_mse_x1000,std_mse_x1000");
        for run in 0..num_runs {
            write!(text, ",run_{run}").expect("string write");
        }
        text.push('\n');
        for row in &self.rows {
            write!(
                text,
                "{},{},{},{}",
                row.dataset, row.algorithm, row.mean_mse_x1000, row.std_mse_x1000
            )
            .expect("string write");
            for v in &row.per_run_mse_x1000 {
                write!(text, ",{v}").expect("string write");
            }
            text.push('\n');
        }
        write_atomic(path, &text)
    }

    /// Human-readable table.
    pub fn render(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "{:<16} {:<12} {:>14} {:>12}",
            "dataset", "algorithm", "mean mse x1e3", "std"
        )
        .expect("string write");
        for row in &self.rows {
            writeln!(
                out,
                "{:<16} {:<12} {:>14.4} {:>12.4}",
                row.dataset, row.algorithm, row.mean_mse_x1000, row.std_mse_x1000
            )
            .expect("string write");
        }
        out
    }
}

/// Per-cell wall-clock timings, kept out of the deterministic outputs.
#[derive(Debug, Clone)]
pub struct TimingRow {
    pub dataset: String,
    pub algorithm: String,
    pub run: usize,
    pub rounds: usize,
    pub seconds_total: f64,
}

pub fn emit_timings(rows: &[TimingRow], path: &Path) -> Result<(), CliError> {
    let mut text = String::from("dataset,algorithm,run,rounds,seconds_total,seconds_per_round\n");
    for row in rows {
        writeln!(
            text,
            "{},{},{},{},{:.6},{:.9}",
            row.dataset,
            row.algorithm,
            row.run,
            row.rounds,
            row.seconds_total,
            row.seconds_total / row.rounds.max(1) as f64
        )
        .expect("string write");
    }
    write_atomic(path, &text)
}

/// Writes through a temporary sibling and renames into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Data(format!("{}: {e}", parent.display())))?;
        }
    }
    let tmp = path.with_file_name(format!(
        "{}.tmp",
        path.file_name()
            .map(|s| s.to_string_lossy())
            .unwrap_or_default()
    ));
    std::fs::write(&tmp, contents)
        .map_err(|e| CliError::Data(format!("{}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(())
}
