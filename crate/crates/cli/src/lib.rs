//! Experiment driver behind the `slsim` binary.
//!
//! A run is described by an [`ExperimentConfig`], read from TOML (or from the
//! header of an earlier output) and adjusted by command-line flags. Results
//! are CSV tables whose first line is `#` followed by the resolved config as
//! JSON, so any output file can be fed back in with `--config` to rerun it.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod output;

pub use config::{Experiment, ExperimentConfig};
pub use experiments::{run_experiment, Report};
pub use output::{emit_benchmark, BenchmarkRow, Table};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Solver(#[from] stochastic_liouville::Error),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Process exit status for a run that ended in `error`.
pub fn exit_code(error: &CliError) -> u8 {
    match error {
        CliError::Config(_) => 2,
        CliError::Solver(_) | CliError::Io(_) => 1,
    }
}

/// Exit status when the run finished but statistical checks failed.
pub const EXIT_CHECKS_FAILED: u8 = 3;
