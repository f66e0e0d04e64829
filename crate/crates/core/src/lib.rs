//! Macroeconomic forecasting benchmark engine.
//!
//! The crate turns a FRED-MD style panel into feature blocks (factors, lags,
//! moving-average rotations, moving-average factors, levels), fits a set of
//! linear and tree-based forecasters in an expanding-window pseudo
//! out-of-sample loop, and evaluates the resulting forecasts.

pub mod date;
pub mod eval;
pub mod features;
pub mod fredmd;
pub mod harness;
pub mod linalg;
pub mod models;
pub mod panel;
pub mod selftest;
pub mod tuning;

pub use date::YearMonth;
pub use panel::Panel;
