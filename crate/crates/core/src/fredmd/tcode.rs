use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{RawPanel, StationaryPanel};
use crate::date::YearMonth;
use crate::panel::MISSING;

/// FRED-MD stationarity transformation code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Tcode {
    /// `x`
    Level,
    /// `Δx`
    Diff,
    /// `Δ²x`
    Diff2,
    /// `log x`
    Log,
    /// `Δ log x`
    LogDiff,
    /// `Δ² log x`
    LogDiff2,
    /// `Δ(x_t / x_{t-1} - 1)`
    PctChangeDiff,
}

impl Tcode {
    pub fn from_code(code: u8) -> Option<Tcode> {
        Some(match code {
            1 => Tcode::Level,
            2 => Tcode::Diff,
            3 => Tcode::Diff2,
            4 => Tcode::Log,
            5 => Tcode::LogDiff,
            6 => Tcode::LogDiff2,
            7 => Tcode::PctChangeDiff,
            _ => return None,
        })
    }

    pub fn code(self) -> u8 {
        match self {
            Tcode::Level => 1,
            Tcode::Diff => 2,
            Tcode::Diff2 => 3,
            Tcode::Log => 4,
            Tcode::LogDiff => 5,
            Tcode::LogDiff2 => 6,
            Tcode::PctChangeDiff => 7,
        }
    }

    /// Codes 4..7 require strictly positive levels.
    pub fn requires_positive(self) -> bool {
        self.code() >= 4
    }

    /// Number of leading observations consumed.
    pub fn burn_in(self) -> usize {
        match self {
            Tcode::Level | Tcode::Log => 0,
            Tcode::Diff | Tcode::LogDiff => 1,
            Tcode::Diff2 | Tcode::LogDiff2 | Tcode::PctChangeDiff => 2,
        }
    }
}

impl TryFrom<u8> for Tcode {
    type Error = String;
    fn try_from(value: u8) -> Result<Self, Self::Error> {
        Tcode::from_code(value).ok_or_else(|| format!("tcode {value} outside 1..7"))
    }
}

impl From<Tcode> for u8 {
    fn from(value: Tcode) -> Self {
        value.code()
    }
}

impl fmt::Display for Tcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("non-positive value {value} at index {index} under log transformation")]
pub struct TcodeError {
    pub index: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("series {mnemonic}: non-positive value {value} at {date} under tcode {tcode}")]
pub struct TransformError {
    pub mnemonic: String,
    pub date: YearMonth,
    pub value: f64,
    pub tcode: Tcode,
}

/// Apply a transformation code to one series.
///
/// The output has the same length as the input. Leading positions consumed
/// by differencing, and any position depending on a missing input, are
/// `NaN`. Each output position `t` depends only on inputs `<= t`.
pub fn apply_tcode(series: &[f64], tcode: Tcode) -> Result<Vec<f64>, TcodeError> {
    if tcode.requires_positive() {
        if let Some((index, &value)) = series.iter().enumerate().find(|(_, v)| !v.is_nan() && **v <= 0.0) {
            return Err(TcodeError { index, value });
        }
    }
    let diff = |x: &[f64]| -> Vec<f64> {
        let mut out = vec![MISSING; x.len()];
        for t in 1..x.len() {
            out[t] = x[t] - x[t - 1];
        }
        out
    };
    let logged = || series.iter().map(|v| v.ln()).collect::<Vec<_>>();
    Ok(match tcode {
        Tcode::Level => series.to_vec(),
        Tcode::Diff => diff(series),
        Tcode::Diff2 => diff(&diff(series)),
        Tcode::Log => logged(),
        Tcode::LogDiff => diff(&logged()),
        Tcode::LogDiff2 => diff(&diff(&logged())),
        Tcode::PctChangeDiff => {
            let mut growth = vec![MISSING; series.len()];
            for t in 1..series.len() {
                growth[t] = series[t] / series[t - 1] - 1.0;
            }
            diff(&growth)
        }
    })
}

/// Apply every series' tcode.
pub fn stationarize(raw: &RawPanel) -> Result<StationaryPanel, TransformError> {
    let (t, k) = raw.values.shape();
    let mut values = DMatrix::from_element(t, k, MISSING);
    for j in 0..k {
        let series = raw.series(j);
        let out = apply_tcode(&series, raw.tcodes[j]).map_err(|e| TransformError {
            mnemonic: raw.mnemonics[j].clone(),
            date: raw.dates[e.index],
            value: e.value,
            tcode: raw.tcodes[j],
        })?;
        for (i, v) in out.into_iter().enumerate() {
            values[(i, j)] = v;
        }
    }
    Ok(StationaryPanel {
        dates: raw.dates.clone(),
        values,
        mnemonics: raw.mnemonics.clone(),
        tcodes: raw.tcodes.clone(),
    })
}
