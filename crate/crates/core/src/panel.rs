//! Dated column panels shared by the data, feature and harness layers.
//!
//! Missing observations are stored as `NaN`. No other value is treated as
//! missing; in particular zero is always an observation.

use nalgebra::DMatrix;

use crate::date::YearMonth;

/// A T×K matrix of monthly observations with one name per column.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub dates: Vec<YearMonth>,
    pub names: Vec<String>,
    pub values: DMatrix<f64>,
}

/// Explicit missing-value sentinel.
pub const MISSING: f64 = f64::NAN;

pub fn is_missing(x: f64) -> bool {
    x.is_nan()
}

impl Panel {
    pub fn new(dates: Vec<YearMonth>, names: Vec<String>, values: DMatrix<f64>) -> Self {
        assert_eq!(dates.len(), values.nrows(), "one date per row");
        assert_eq!(names.len(), values.ncols(), "one name per column");
        Panel { dates, names, values }
    }

    pub fn n_periods(&self) -> usize {
        self.dates.len()
    }

    pub fn n_series(&self) -> usize {
        self.names.len()
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.values.column(k).iter().copied().collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn row_of(&self, date: YearMonth) -> Option<usize> {
        let first = *self.dates.first()?;
        let idx = date.months_since(first);
        (idx >= 0 && (idx as usize) < self.dates.len() && self.dates[idx as usize] == date).then_some(idx as usize)
    }

    /// Rows dated in `[from, through]`.
    pub fn slice_dates(&self, from: YearMonth, through: YearMonth) -> Panel {
        let rows: Vec<usize> =
            (0..self.n_periods()).filter(|&i| self.dates[i] >= from && self.dates[i] <= through).collect();
        self.select_rows(&rows)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Panel {
        let values = DMatrix::from_fn(rows.len(), self.n_series(), |i, j| self.values[(rows[i], j)]);
        Panel { dates: rows.iter().map(|&i| self.dates[i]).collect(), names: self.names.clone(), values }
    }

    pub fn select_columns(&self, cols: &[usize]) -> Panel {
        let values = DMatrix::from_fn(self.n_periods(), cols.len(), |i, j| self.values[(i, cols[j])]);
        Panel { dates: self.dates.clone(), names: cols.iter().map(|&j| self.names[j].clone()).collect(), values }
    }

    /// True when column `k` has no missing value.
    pub fn column_complete(&self, k: usize) -> bool {
        self.values.column(k).iter().all(|v| !is_missing(*v))
    }
}
