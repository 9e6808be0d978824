//! Parameter sweeps over the divisibility quantifiers and one-shot queries on
//! Choi files. The binary in `main.rs` is a thin clap layer over this crate.

pub mod experiments;
pub mod output;

use std::path::PathBuf;

pub use experiments::{
    grid, run_collisional, run_dephasing, run_dephasing_hd, run_query, run_unitary_mix, summarize, CollisionalRow,
    DephasingHdRow, DephasingRow, QueryOutcome, TimingRecord, TimingSummary,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] divisio::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("input {path}: {source}")]
    Input { path: PathBuf, source: divisio::Error },
    #[error("output error: {0}")]
    Output(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Exit status of the binary.
pub mod exit {
    pub const DIVISIBLE: i32 = 0;
    pub const NOT_DIVISIBLE: i32 = 1;
    pub const ERROR: i32 = 2;
}
