//! Library side of the benchmark harness: configuration, the experiment
//! runner, and the output writers. The `vaw2` binary is a thin wrapper.

pub mod config;
pub mod emit;
pub mod runner;

use thiserror::Error;

/// Harness errors, partitioned by exit code: configuration problems exit
/// with 1, dataset/file problems with 2, violated internal invariants
/// with 3.
#[derive(Debug, Clone, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}
