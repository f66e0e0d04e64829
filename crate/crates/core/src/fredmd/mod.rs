//! FRED-MD style monthly panels.
//!
//! A vintage file carries the raw levels `H_t` of every series together with a
//! per-series transformation code (tcode). This module parses such files,
//! applies the tcodes to obtain the stationary panel `X_t`, and builds the
//! `h`-month-ahead forecast targets.

mod fetch;
mod parse;
pub mod synthetic;
mod target;
mod tcode;
mod validate;

#[cfg(feature = "http")]
pub use fetch::HttpTransport;
pub use fetch::{fetch_fredmd, vintage_url, FetchError, Transport, TransportError, BASE_URL, CURRENT_URL};
pub use parse::{parse_fredmd, read_table, ParseError, RawTable, TableRow};
pub use target::{build_target, resolve_mnemonic, TargetConvention, TargetError, TargetSeries, ALIASES, ANNUALIZE};
pub use tcode::{apply_tcode, stationarize, Tcode, TcodeError, TransformError};
pub use validate::{diagnose, Diagnostic, Diagnostics, Severity};

use nalgebra::DMatrix;

use crate::date::YearMonth;
use crate::panel::Panel;

/// Untransformed monthly levels plus transformation codes.
#[derive(Debug, Clone, PartialEq)]
pub struct RawPanel {
    pub dates: Vec<YearMonth>,
    /// T×K raw levels, `NaN` marks a missing cell.
    pub values: DMatrix<f64>,
    pub mnemonics: Vec<String>,
    pub tcodes: Vec<Tcode>,
}

impl RawPanel {
    pub fn n_periods(&self) -> usize {
        self.dates.len()
    }

    pub fn n_series(&self) -> usize {
        self.mnemonics.len()
    }

    pub fn column_index(&self, mnemonic: &str) -> Option<usize> {
        self.mnemonics.iter().position(|m| m == mnemonic)
    }

    pub fn series(&self, k: usize) -> Vec<f64> {
        self.values.column(k).iter().copied().collect()
    }

    pub fn as_panel(&self) -> Panel {
        Panel::new(self.dates.clone(), self.mnemonics.clone(), self.values.clone())
    }

    /// Rows dated at or before `through`.
    pub fn truncated(&self, through: YearMonth) -> RawPanel {
        let n = self.dates.iter().take_while(|d| **d <= through).count();
        RawPanel {
            dates: self.dates[..n].to_vec(),
            values: self.values.rows(0, n).into_owned(),
            mnemonics: self.mnemonics.clone(),
            tcodes: self.tcodes.clone(),
        }
    }

    pub fn first_date(&self) -> Option<YearMonth> {
        self.dates.first().copied()
    }

    pub fn last_date(&self) -> Option<YearMonth> {
        self.dates.last().copied()
    }
}

/// Panel after tcode application. Leading rows consumed by differencing are
/// `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryPanel {
    pub dates: Vec<YearMonth>,
    pub values: DMatrix<f64>,
    pub mnemonics: Vec<String>,
    pub tcodes: Vec<Tcode>,
}

impl StationaryPanel {
    pub fn as_panel(&self) -> Panel {
        Panel::new(self.dates.clone(), self.mnemonics.clone(), self.values.clone())
    }

    pub fn column_index(&self, mnemonic: &str) -> Option<usize> {
        self.mnemonics.iter().position(|m| m == mnemonic)
    }
}
