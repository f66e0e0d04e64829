//! Expanding-window pseudo-out-of-sample experiment driver.
//!
//! For every origin `t` in the evaluation span and every grid cell the harness
//! builds features from data dated at or before `t`, retunes on schedule, fits
//! and forecasts the target dated `t + h`. Records go to an append-only
//! [`ForecastStore`]; a failing cell is recorded with its reason and the sweep
//! continues.

mod config;
mod grid;
mod run;
mod store;

pub use config::{ConfigDiff, ConfigError, ExperimentConfig, WindowMode, DEFAULT_TARGETS};
pub use grid::{derive_seed, fixed_featureset, grid, origins, tuning_date_for, tuning_dates, Cell};
pub use run::{execute, resume, run_poos, store_header, PreparedData, PreparedTarget, RunSummary};
pub use store::{read_csv_export, ForecastRecord, ForecastStore, RecordKey, StoreHeader, TuningRecord, STORE_FORMAT};

use thiserror::Error;

use crate::fredmd::TransformError;

/// Environment variable overriding the data path.
pub const ENV_DATA: &str = "MARXBENCH_DATA";
/// Environment variable overriding the worker count.
pub const ENV_WORKERS: &str = "MARXBENCH_WORKERS";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}: {msg}")]
    Corrupt { path: String, line: usize, msg: String },
    #[error("csv: {0}")]
    Csv(String),
    #[error("store was written with a different config:\n{}", diffs.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n"))]
    ConfigMismatch { diffs: Vec<ConfigDiff> },
    #[error("data does not cover the experiment: {0}")]
    DataSpan(String),
    #[error("target {0} is not in the data")]
    UnknownTarget(String),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error("worker pool: {0}")]
    Pool(String),
}
