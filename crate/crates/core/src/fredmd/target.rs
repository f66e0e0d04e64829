use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::date::YearMonth;
use crate::panel::MISSING;

/// Annualization factor for monthly log growth rates, in percent.
pub const ANNUALIZE: f64 = 1200.0;

/// How the `h`-period target is formed from raw levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetConvention {
    /// `(1200 / h) * (log raw_{t+h} - log raw_t)`
    Growth,
    /// `(1 / h) * (raw_{t+h} - raw_t)`
    Difference,
}

impl TargetConvention {
    /// Rates (the unemployment rate) are forecast in average differences,
    /// everything else in average annualized growth.
    pub fn for_mnemonic(mnemonic: &str) -> Self {
        match mnemonic {
            "UNRATE" => TargetConvention::Difference,
            _ => TargetConvention::Growth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TargetError {
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("series {variable} has {len} observations, too short for horizon {horizon}")]
    TooShort { variable: String, len: usize, horizon: usize },
    #[error("series {variable}: non-positive value {value} at {date} under growth convention")]
    NonPositive { variable: String, date: YearMonth, value: f64 },
    #[error("length mismatch: {dates} dates for {values} values")]
    Misaligned { dates: usize, values: usize },
}

/// `y_{t+h}` for one variable and horizon, aligned with the raw dates.
///
/// `values[i]` is the target dated `dates[i]`, i.e. the average over the `h`
/// months ending at `dates[i]`. The first `h` entries are missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSeries {
    pub variable: String,
    pub horizon: usize,
    pub convention: TargetConvention,
    pub dates: Vec<YearMonth>,
    pub values: Vec<f64>,
}

impl TargetSeries {
    pub fn value_at(&self, date: YearMonth) -> Option<f64> {
        let first = *self.dates.first()?;
        let i = date.months_since(first);
        if i < 0 {
            return None;
        }
        self.values.get(i as usize).copied().filter(|v| !v.is_nan())
    }
}

/// Build the `h`-month average growth (or difference) target.
pub fn build_target(
    variable: &str,
    dates: &[YearMonth],
    raw: &[f64],
    horizon: usize,
    convention: TargetConvention,
) -> Result<TargetSeries, TargetError> {
    if horizon == 0 {
        return Err(TargetError::ZeroHorizon);
    }
    if dates.len() != raw.len() {
        return Err(TargetError::Misaligned { dates: dates.len(), values: raw.len() });
    }
    if raw.len() <= horizon {
        return Err(TargetError::TooShort { variable: variable.to_string(), len: raw.len(), horizon });
    }
    let level: Vec<f64> = match convention {
        TargetConvention::Difference => raw.to_vec(),
        TargetConvention::Growth => raw
            .iter()
            .zip(dates)
            .map(|(&v, &date)| {
                if v <= 0.0 {
                    Err(TargetError::NonPositive { variable: variable.to_string(), date, value: v })
                } else {
                    Ok(v.ln())
                }
            })
            .collect::<Result<_, _>>()?,
    };
    let scale = match convention {
        TargetConvention::Growth => ANNUALIZE,
        TargetConvention::Difference => 1.0,
    } / horizon as f64;
    let mut values = vec![MISSING; raw.len()];
    for t in horizon..raw.len() {
        values[t] = scale * (level[t] - level[t - horizon]);
    }
    Ok(TargetSeries { variable: variable.to_string(), horizon, convention, dates: dates.to_vec(), values })
}

/// Common names for the benchmark targets and their FRED-MD mnemonics.
pub const ALIASES: &[(&str, &str)] = &[
    ("CPI", "CPIAUCSL"),
    ("EMP", "PAYEMS"),
    ("INCOME", "W875RX1"),
    ("CONS", "DPCERA3M086SBEA"),
    ("RETAIL", "RETAILx"),
    ("PPI", "WPSFD49207"),
    ("M2", "M2SL"),
];

/// Map a target name to a mnemonic present in `available`. Exact matches win
/// over aliases.
pub fn resolve_mnemonic(name: &str, available: &[String]) -> Option<String> {
    if available.iter().any(|m| m == name) {
        return Some(name.to_string());
    }
    ALIASES
        .iter()
        .find(|(alias, _)| alias.eq_ignore_ascii_case(name))
        .map(|(_, m)| m.to_string())
        .filter(|m| available.contains(m))
}
