//! Monthly calendar index.
//!
//! Every series in the benchmark is monthly, so dates are stored as a single
//! integer count of months. Arithmetic on [`YearMonth`] is exact and there is
//! no intramonth component.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed date `{0}`")]
pub struct DateError(pub String);

/// A calendar month, stored as `year * 12 + (month - 1)`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct YearMonth(i32);

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Option<Self> {
        if !(1..=12).contains(&month) {
            return None;
        }
        Some(YearMonth(year * 12 + month as i32 - 1))
    }

    pub fn year(self) -> i32 {
        self.0.div_euclid(12)
    }

    pub fn month(self) -> u32 {
        (self.0.rem_euclid(12) + 1) as u32
    }

    /// Shift by a signed number of months.
    pub fn offset(self, months: i32) -> Self {
        YearMonth(self.0 + months)
    }

    /// Signed number of months from `earlier` to `self`.
    pub fn months_since(self, earlier: YearMonth) -> i32 {
        self.0 - earlier.0
    }

    pub fn next(self) -> Self {
        self.offset(1)
    }

    /// Inclusive monthly range.
    pub fn range_inclusive(from: YearMonth, to: YearMonth) -> impl Iterator<Item = YearMonth> {
        (from.0..=to.0).map(YearMonth)
    }

    /// Parse a FRED-MD `M/D/YYYY` date. The day component is ignored.
    pub fn parse_fred(s: &str) -> Result<Self, DateError> {
        let err = || DateError(s.to_string());
        let mut parts = s.trim().split('/');
        let month: u32 = parts.next().ok_or_else(err)?.trim().parse().map_err(|_| err())?;
        let day: u32 = parts.next().ok_or_else(err)?.trim().parse().map_err(|_| err())?;
        let year: i32 = parts.next().ok_or_else(err)?.trim().parse().map_err(|_| err())?;
        if parts.next().is_some() || !(1..=31).contains(&day) || !(1000..=9999).contains(&year) {
            return Err(err());
        }
        YearMonth::new(year, month).ok_or_else(err)
    }
}

impl FromStr for YearMonth {
    type Err = DateError;

    /// Accepts `YYYY-MM`, `YYYYMmm` (e.g. `1960M01`) and FRED-style `M/D/YYYY`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.contains('/') {
            return YearMonth::parse_fred(s);
        }
        let err = || DateError(s.to_string());
        let (y, m) = s.split_once('-').or_else(|| s.split_once('M')).or_else(|| s.split_once('m')).ok_or_else(err)?;
        let year: i32 = y.parse().map_err(|_| err())?;
        let month: u32 = m.parse().map_err(|_| err())?;
        if !(1000..=9999).contains(&year) {
            return Err(err());
        }
        YearMonth::new(year, month).ok_or_else(err)
    }
}

impl TryFrom<String> for YearMonth {
    type Error = DateError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<YearMonth> for String {
    fn from(value: YearMonth) -> Self {
        value.to_string()
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year(), self.month())
    }
}

impl fmt::Debug for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_accepted_forms() {
        let a: YearMonth = "1960-01".parse().unwrap();
        let b: YearMonth = "1960M01".parse().unwrap();
        let c: YearMonth = "1/1/1960".parse().unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_eq!(a.year(), 1960);
        assert_eq!(a.month(), 1);
    }

    #[test]
    fn rejects_garbage() {
        assert!("1960-13".parse::<YearMonth>().is_err());
        assert!("13/1/1960".parse::<YearMonth>().is_err());
        assert!("abc".parse::<YearMonth>().is_err());
        assert!(YearMonth::parse_fred("1/1").is_err());
    }

    #[test]
    fn arithmetic_crosses_years() {
        let d = YearMonth::new(1999, 12).unwrap();
        assert_eq!(d.next(), YearMonth::new(2000, 1).unwrap());
        assert_eq!(d.offset(-12), YearMonth::new(1998, 12).unwrap());
        assert_eq!(YearMonth::new(1992, 1).unwrap().months_since(YearMonth::new(1990, 1).unwrap()), 24);
        assert_eq!(d.to_string(), "1999-12");
    }

    #[test]
    fn serde_round_trip_as_string() {
        let d = YearMonth::new(2017, 12).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(s, "\"2017-12\"");
        let back: YearMonth = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
    }
}
