//! Experiment runner for `relaxkit`: builds the problem, runs every configured
//! solver over seeded ensembles and writes CSV traces and JSON bound reports.

use std::path::Path;

pub mod config;
pub mod experiments;
pub mod output;

pub use config::{ExperimentConfig, Flags};
pub use experiments::run_experiment;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] relaxkit::Error),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    /// 2 for configuration and I/O problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}
