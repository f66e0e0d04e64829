use crate::date::YearMonth;

/// Whether a cell must be retuned at `origin`: never tuned, or at least
/// `interval_months` since the last tuning.
pub fn schedule(origin: YearMonth, last_tuned: Option<YearMonth>, interval_months: u32) -> bool {
    match last_tuned {
        None => true,
        Some(last) => origin.months_since(last) >= interval_months as i32,
    }
}
