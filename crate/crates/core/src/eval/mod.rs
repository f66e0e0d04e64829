//! Forecast evaluation: RMSE ratios, Diebold-Mariano tests, the model
//! confidence set, the fluctuation test, marginal contributions of feature
//! blocks, best-specification tables and cumulative squared errors.

mod best;
mod cumulative;
mod dm;
mod fluctuation;
mod loss;
mod marginal;
mod mcs;
mod report;
mod tables;

pub use best::{best_spec_table, BestSpec};
pub use cumulative::{cumulative_errors, episode_range, CumulativePath, RECESSION_STARTS};
pub use dm::{dm_test, hac_variance, significance_stars, DmResult};
pub use fluctuation::{gr_critical_value, gr_fluctuation, GrPath, GR_TABLE};
pub use loss::{rmse, LossPanel, SpecId};
pub use marginal::{marginal_effects, panel_hac_lags, MarginalEffect, R2Observation, R2Panel};
pub use mcs::{mcs, moving_block_indices, McsConfig, McsResult};
pub use report::{write_report, ReportConfig, ReportSummary};
pub use tables::{rmse_table, RmseCell, RmseTable, MCS_MARKER};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("no observations to evaluate")]
    Empty,
    #[error("series lengths differ: {0} vs {1}")]
    Misaligned(usize, usize),
    #[error("window {window} exceeds the {len} available observations")]
    WindowTooLong { window: usize, len: usize },
    #[error("window must be at least 2")]
    WindowTooShort,
    #[error("model confidence set needs at least two models, got {0}")]
    TooFewModels(usize),
    #[error("invalid setting: {0}")]
    Invalid(String),
    #[error("benchmark {0} has no forecasts")]
    MissingBenchmark(String),
    #[error("{0}")]
    Io(String),
}
