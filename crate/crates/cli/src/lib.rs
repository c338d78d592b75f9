//! Experiment harness for `rank1-thermo`: JSON configs, named pipelines,
//! run manifests and run-to-run diffs.

pub mod config;
pub mod diff;
pub mod experiments;
pub mod report;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{ExperimentConfig, ExperimentName, Params};
pub use diff::{diff_runs, DiffEntry, DiffReport};
pub use experiments::{run_experiment, RunOutcome};
pub use report::{Assertion, Manifest, Summary};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("no manifest.json in {0}")]
    MissingManifest(PathBuf),
}

impl CliError {
    /// Process exit code: 2 for configuration problems, 3 for numeric and
    /// io failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::MissingManifest(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numeric(_) => "numeric",
            CliError::Io(_) => "io",
            CliError::MissingManifest(_) => "missing-manifest",
        }
    }

    /// Machine-readable error report.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        })
    }
}

pub(crate) fn numeric<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Numeric(e.to_string())
}

pub(crate) fn io<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Io(e.to_string())
}
