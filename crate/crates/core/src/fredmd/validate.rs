use std::fmt;

use serde::Serialize;

use super::parse::{parse_cell, parse_tcode, RawTable};
use crate::date::YearMonth;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub line: Option<usize>,
    pub mnemonic: Option<String>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{tag}:")?;
        if let Some(line) = self.line {
            write!(f, " line {line}:")?;
        }
        if let Some(m) = &self.mnemonic {
            write!(f, " {m}:")?;
        }
        write!(f, " {}", self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub items: Vec<Diagnostic>,
}

impl Diagnostics {
    pub fn errors(&self) -> usize {
        self.items.iter().filter(|d| d.severity == Severity::Error).count()
    }

    pub fn warnings(&self) -> usize {
        self.items.iter().filter(|d| d.severity == Severity::Warning).count()
    }

    /// 0 when clean, 1 with warnings only, 2 with any error.
    pub fn exit_code(&self) -> i32 {
        if self.errors() > 0 {
            2
        } else if self.warnings() > 0 {
            1
        } else {
            0
        }
    }

    fn push(&mut self, severity: Severity, line: Option<usize>, mnemonic: Option<&str>, message: String) {
        self.items.push(Diagnostic { severity, line, mnemonic: mnemonic.map(str::to_string), message });
    }
}

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.items {
            writeln!(f, "{d}")?;
        }
        write!(f, "{} errors, {} warnings", self.errors(), self.warnings())
    }
}

/// Collect every structural, domain and coverage problem in a table.
///
/// Unlike the strict parser this never stops at the first problem.
pub fn diagnose(table: &RawTable) -> Diagnostics {
    use Severity::*;
    let mut out = Diagnostics::default();
    let k = table.mnemonics.len();
    for (i, m) in table.mnemonics.iter().enumerate() {
        if table.mnemonics[..i].contains(m) {
            out.push(Error, Some(1), Some(m), "duplicate mnemonic".into());
        }
    }
    if table.transform.len() != k {
        out.push(Error, Some(2), None, format!("transform row has {} codes for {k} series", table.transform.len()));
    }
    let tcodes: Vec<_> = (0..k)
        .map(|j| {
            let raw = table.transform.get(j).map(String::as_str).unwrap_or("");
            let code = parse_tcode(raw);
            if code.is_none() {
                out.push(Error, Some(2), Some(&table.mnemonics[j]), format!("tcode `{raw}` outside 1..7"));
            }
            code
        })
        .collect();

    let mut dates: Vec<Option<YearMonth>> = Vec::with_capacity(table.rows.len());
    let mut previous: Option<YearMonth> = None;
    for row in &table.rows {
        if row.cells.len() != k {
            out.push(Error, Some(row.line), None, format!("expected {} fields, found {}", k + 1, row.cells.len() + 1));
        }
        let date = row.date.parse::<YearMonth>().ok();
        match (date, previous) {
            (None, _) => out.push(Error, Some(row.line), None, format!("malformed date `{}`", row.date)),
            (Some(d), Some(p)) if d <= p => {
                out.push(Error, Some(row.line), None, format!("date {d} not after {p}"));
            }
            (Some(d), Some(p)) if d != p.next() => {
                out.push(Error, Some(row.line), None, format!("date gap: {} to {} missing", p.next(), d.offset(-1)));
            }
            _ => {}
        }
        if date.is_some() {
            previous = date;
        }
        dates.push(date);
    }

    let label = |i: usize| dates[i].map(|d| d.to_string()).unwrap_or_else(|| format!("line {}", table.rows[i].line));
    for j in 0..k {
        let mnemonic = table.mnemonics[j].as_str();
        let mut observed = Vec::with_capacity(table.rows.len());
        for row in &table.rows {
            let cell = row.cells.get(j).map(String::as_str).unwrap_or("");
            match parse_cell(cell) {
                None => {
                    out.push(Error, Some(row.line), Some(mnemonic), format!("unparseable cell `{cell}`"));
                    observed.push(false);
                }
                Some(v) if v.is_nan() => observed.push(false),
                Some(v) => {
                    if let Some(tc) = tcodes[j] {
                        if tc.requires_positive() && v <= 0.0 {
                            out.push(
                                Error,
                                Some(row.line),
                                Some(mnemonic),
                                format!("domain violation: value {v} under tcode {tc} requires logs"),
                            );
                        }
                    }
                    observed.push(true);
                }
            }
        }
        let Some(first) = observed.iter().position(|&o| o) else {
            out.push(Warning, None, Some(mnemonic), "no observations".into());
            continue;
        };
        let last = observed.iter().rposition(|&o| o).unwrap();
        if first > 0 {
            out.push(
                Warning,
                None,
                Some(mnemonic),
                format!("missing {first} leading cells, first observed {}", label(first)),
            );
        }
        if last + 1 < observed.len() {
            out.push(
                Warning,
                None,
                Some(mnemonic),
                format!("missing {} trailing cells after {}", observed.len() - last - 1, label(last)),
            );
        }
        let mut i = first;
        while i <= last {
            if observed[i] {
                i += 1;
                continue;
            }
            let gap_start = i;
            while !observed[i] {
                i += 1;
            }
            out.push(Warning, None, Some(mnemonic), format!("gap from {} to {}", label(gap_start), label(i - 1)));
        }
    }
    out
}
