use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{LossPanel, SpecId};
use crate::date::YearMonth;

/// Recession start dates used for the episode studies.
pub const RECESSION_STARTS: [(i32, u32); 3] = [(1990, 7), (2001, 3), (2007, 12)];

/// Running sum of squared errors of one specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativePath {
    pub spec: SpecId,
    pub dates: Vec<YearMonth>,
    pub values: Vec<f64>,
}

pub fn cumulative_errors(panel: &LossPanel) -> Vec<CumulativePath> {
    panel
        .specs
        .iter()
        .zip(&panel.errors)
        .map(|(spec, errors)| {
            let values = errors
                .iter()
                .scan(0.0, |acc, e| {
                    *acc += e * e;
                    Some(*acc)
                })
                .collect();
            CumulativePath { spec: *spec, dates: panel.dates.clone(), values }
        })
        .collect()
}

/// Indices of `dates` from 3 months before `event` to 24 months after it,
/// clipped to the sample. Empty when the episode lies outside `dates`.
pub fn episode_range(dates: &[YearMonth], event: YearMonth) -> Range<usize> {
    let (from, to) = (event.offset(-3), event.offset(24));
    let start = dates.partition_point(|d| *d < from);
    let end = dates.partition_point(|d| *d <= to);
    start..end.max(start)
}
