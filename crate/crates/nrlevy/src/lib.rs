//! Command-line harness for the `nrlevy-core` simulators: configuration
//! files, a thread-pool replica runner, experiment drivers and the CSV and
//! JSON artifacts they write.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod output;
pub mod runner;

use thiserror::Error;

pub use config::{ConfigFile, Experiment, ExperimentConfig};
pub use runner::PoolRunner;

/// Exit code of a run whose verdict passed, or that has no verdict.
pub const EXIT_PASS: i32 = 0;
/// Exit code of a usage, configuration or runtime error.
pub const EXIT_ERROR: i32 = 1;
/// Exit code of a completed run whose verdict failed.
pub const EXIT_VERDICT_FAIL: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("configuration error: {0}")]
    Inadmissible(String),
    #[error(transparent)]
    Core(#[from] nrlevy_core::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("thread pool error: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}
