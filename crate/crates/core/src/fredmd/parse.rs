use nalgebra::DMatrix;
use thiserror::Error;

use super::{RawPanel, Tcode};
use crate::date::YearMonth;
use crate::panel::MISSING;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("csv error at line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("file is empty")]
    Empty,
    #[error("missing transform row (expected `Transform:` on line 2)")]
    MissingTransformRow,
    #[error("duplicate mnemonic `{0}` in header")]
    DuplicateMnemonic(String),
    #[error("line {line}: expected {expected} fields, found {found}")]
    Ragged { line: usize, expected: usize, found: usize },
    #[error("line {line}: malformed date `{value}`")]
    MalformedDate { line: usize, value: String },
    #[error("series {mnemonic} (column {column}): invalid tcode `{value}`")]
    BadTcode { mnemonic: String, column: usize, value: String },
    #[error("line {line}, series {mnemonic}: unparseable cell `{value}`")]
    BadNumber { line: usize, mnemonic: String, value: String },
    #[error("line {line}: date {date} breaks the monthly sequence after {previous}")]
    DateSequence { line: usize, date: YearMonth, previous: YearMonth },
    #[error("series {mnemonic}: non-positive value {value} at {date} under tcode {tcode}")]
    Domain { mnemonic: String, date: YearMonth, value: f64, tcode: Tcode },
}

/// One data line as read from disk, before any interpretation.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    /// 1-based line number in the source file.
    pub line: usize,
    pub date: String,
    pub cells: Vec<String>,
}

/// Lightly structured view of a FRED-MD file: header, transform row and
/// data lines, with no numeric interpretation. Used by the strict parser and
/// by the diagnostics pass, which wants to see every problem at once.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub mnemonics: Vec<String>,
    pub transform: Vec<String>,
    pub rows: Vec<TableRow>,
}

fn is_transform_marker(s: &str) -> bool {
    s.trim().trim_end_matches(':').eq_ignore_ascii_case("transform")
}

/// Split a FRED-MD file into header, transform row and data lines.
///
/// Trailing all-empty lines (common in published vintages) are dropped.
pub fn read_table(bytes: &[u8]) -> Result<RawTable, ParseError> {
    let bytes = bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes);
    let mut reader =
        csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(bytes);
    let mut records = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| ParseError::Csv {
            line: e.position().map(|p| p.line() as usize).unwrap_or(i + 1),
            message: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(i + 1);
        let fields: Vec<String> = rec.iter().map(str::to_string).collect();
        records.push((line, fields));
    }
    while records.last().is_some_and(|(_, f)| f.iter().all(|c| c.is_empty())) {
        records.pop();
    }
    let mut iter = records.into_iter();
    let (_, header) = iter.next().ok_or(ParseError::Empty)?;
    let mnemonics: Vec<String> = header.into_iter().skip(1).collect();
    let (_, transform) = iter.next().ok_or(ParseError::MissingTransformRow)?;
    if !transform.first().is_some_and(|s| is_transform_marker(s)) {
        return Err(ParseError::MissingTransformRow);
    }
    let transform = transform.into_iter().skip(1).collect();
    let rows = iter
        .filter(|(_, f)| !f.iter().all(|c| c.is_empty()))
        .map(|(line, mut fields)| {
            let date = if fields.is_empty() { String::new() } else { fields.remove(0) };
            TableRow { line, date, cells: fields }
        })
        .collect();
    Ok(RawTable { mnemonics, transform, rows })
}

pub(crate) fn parse_tcode(s: &str) -> Option<Tcode> {
    let v: f64 = s.trim().parse().ok()?;
    if v.fract() != 0.0 || !(0.0..=255.0).contains(&v) {
        return None;
    }
    Tcode::from_code(v as u8)
}

pub(crate) fn parse_cell(s: &str) -> Option<f64> {
    let s = s.trim();
    if s.is_empty() || s.eq_ignore_ascii_case("na") || s.eq_ignore_ascii_case("nan") || s == "." {
        return Some(MISSING);
    }
    let v: f64 = s.parse().ok()?;
    v.is_finite().then_some(v)
}

/// Parse a FRED-MD vintage into a [`RawPanel`].
pub fn parse_fredmd(bytes: &[u8]) -> Result<RawPanel, ParseError> {
    let table = read_table(bytes)?;
    let k = table.mnemonics.len();
    for (i, m) in table.mnemonics.iter().enumerate() {
        if table.mnemonics[..i].contains(m) {
            return Err(ParseError::DuplicateMnemonic(m.clone()));
        }
    }
    if table.transform.len() != k {
        return Err(ParseError::Ragged { line: 2, expected: k + 1, found: table.transform.len() + 1 });
    }
    let tcodes = table
        .transform
        .iter()
        .enumerate()
        .map(|(j, s)| {
            parse_tcode(s).ok_or_else(|| ParseError::BadTcode {
                mnemonic: table.mnemonics[j].clone(),
                column: j + 1,
                value: s.clone(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let t = table.rows.len();
    let mut dates = Vec::with_capacity(t);
    let mut values = DMatrix::from_element(t, k, MISSING);
    for (i, row) in table.rows.iter().enumerate() {
        if row.cells.len() != k {
            return Err(ParseError::Ragged { line: row.line, expected: k + 1, found: row.cells.len() + 1 });
        }
        let date: YearMonth =
            row.date.parse().map_err(|_| ParseError::MalformedDate { line: row.line, value: row.date.clone() })?;
        if let Some(&previous) = dates.last() {
            if date != YearMonth::next(previous) {
                return Err(ParseError::DateSequence { line: row.line, date, previous });
            }
        }
        dates.push(date);
        for (j, cell) in row.cells.iter().enumerate() {
            let v = parse_cell(cell).ok_or_else(|| ParseError::BadNumber {
                line: row.line,
                mnemonic: table.mnemonics[j].clone(),
                value: cell.clone(),
            })?;
            if tcodes[j].requires_positive() && v <= 0.0 {
                return Err(ParseError::Domain {
                    mnemonic: table.mnemonics[j].clone(),
                    date,
                    value: v,
                    tcode: tcodes[j],
                });
            }
            values[(i, j)] = v;
        }
    }
    Ok(RawPanel { dates, values, mnemonics: table.mnemonics, tcodes })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "sasdate,A,B,C\nTransform:,5,1,2\n1/1/1960,1,2,3\n2/1/1960,2,,4\n3/1/1960,4,5,6\n,,,\n";

    #[test]
    fn reads_tcodes_from_transform_row() {
        let p = parse_fredmd(SMALL.as_bytes()).unwrap();
        assert_eq!(p.tcodes.iter().map(|t| t.code()).collect::<Vec<_>>(), vec![5, 1, 2]);
        assert_eq!(p.mnemonics, vec!["A", "B", "C"]);
        assert_eq!(p.n_periods(), 3);
        assert_eq!(p.dates[2], YearMonth::new(1960, 3).unwrap());
    }

    #[test]
    fn blank_cell_is_missing() {
        let p = parse_fredmd(SMALL.as_bytes()).unwrap();
        assert!(p.values[(1, 1)].is_nan());
        assert_eq!(p.values[(1, 2)], 4.0);
    }

    #[test]
    fn lowercase_marker_accepted() {
        let s = SMALL.replace("Transform:", "transform:");
        assert!(parse_fredmd(s.as_bytes()).is_ok());
    }

    #[test]
    fn bad_tcode_names_series() {
        let s = SMALL.replace("5,1,2", "5,9,2");
        match parse_fredmd(s.as_bytes()) {
            Err(ParseError::BadTcode { mnemonic, .. }) => assert_eq!(mnemonic, "B"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ragged_row_reports_line() {
        let s = SMALL.replace("3/1/1960,4,5,6", "3/1/1960,4,5");
        match parse_fredmd(s.as_bytes()) {
            Err(ParseError::Ragged { line, .. }) => assert_eq!(line, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_date_rejected() {
        let s = SMALL.replace("2/1/1960", "2/x/1960");
        assert!(matches!(parse_fredmd(s.as_bytes()), Err(ParseError::MalformedDate { line: 4, .. })));
    }

    #[test]
    fn date_gap_rejected() {
        let s = SMALL.replace("3/1/1960", "5/1/1960");
        assert!(matches!(parse_fredmd(s.as_bytes()), Err(ParseError::DateSequence { .. })));
    }

    #[test]
    fn non_positive_log_series_rejected() {
        let s = SMALL.replace("2/1/1960,2,", "2/1/1960,-2,");
        assert!(matches!(parse_fredmd(s.as_bytes()), Err(ParseError::Domain { .. })));
    }

    #[test]
    fn missing_transform_row() {
        let s = "sasdate,A\n1/1/1960,1\n";
        assert_eq!(parse_fredmd(s.as_bytes()), Err(ParseError::MissingTransformRow));
    }
}
