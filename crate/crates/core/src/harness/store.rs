//! Append-only forecast log.
//!
//! The file is JSON lines. The first line is a [`StoreHeader`]; every other
//! line is a forecast or tuning record. Appends are flushed line by line so an
//! interrupted run leaves at most one truncated trailing line, which `open`
//! discards. [`ForecastStore::compact`] rewrites the file with one line per
//! key in sorted order, reusing the original bytes of every kept line.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Cell, HarnessError};
use crate::date::YearMonth;
use crate::features::BlockSet;
use crate::models::ModelFamily;
use crate::tuning::{ParamSet, TuningMethod};

pub const STORE_FORMAT: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreHeader {
    pub format: u32,
    pub config_hash: String,
    /// Result-relevant config settings, for mismatch reports.
    pub config: serde_json::Value,
    pub code_version: String,
    pub seed: u64,
}

/// Key of one forecast record.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RecordKey {
    pub target: String,
    pub horizon: usize,
    pub model: ModelFamily,
    pub featureset: BlockSet,
    pub origin: YearMonth,
}

impl RecordKey {
    pub fn new(cell: &Cell, origin: YearMonth) -> Self {
        RecordKey {
            target: cell.target.clone(),
            horizon: cell.horizon,
            model: cell.model,
            featureset: cell.featureset,
            origin,
        }
    }

    pub fn cell(&self) -> Cell {
        Cell { target: self.target.clone(), horizon: self.horizon, model: self.model, featureset: self.featureset }
    }
}

/// Forecast of the target dated `origin + horizon`, made with data through
/// `origin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRecord {
    pub target: String,
    pub horizon: usize,
    pub model: ModelFamily,
    pub featureset: BlockSet,
    pub origin: YearMonth,
    pub forecast: Option<f64>,
    /// Realized target, present when its date is in the data.
    pub realized: Option<f64>,
    /// First and last feature dates of the training sample.
    pub train_start: Option<YearMonth>,
    pub train_end: Option<YearMonth>,
    pub n_train: usize,
    pub tuning_id: Option<String>,
    pub seed: u64,
    /// Latest date read while building features, tuning and fitting.
    pub max_read: Option<YearMonth>,
    /// Latest date read to attach the realized value.
    pub max_realized: Option<YearMonth>,
    pub error: Option<String>,
}

impl ForecastRecord {
    pub fn key(&self) -> RecordKey {
        RecordKey {
            target: self.target.clone(),
            horizon: self.horizon,
            model: self.model,
            featureset: self.featureset,
            origin: self.origin,
        }
    }

    pub fn failed(key: &RecordKey, seed: u64, error: String) -> Self {
        ForecastRecord {
            target: key.target.clone(),
            horizon: key.horizon,
            model: key.model,
            featureset: key.featureset,
            origin: key.origin,
            forecast: None,
            realized: None,
            train_start: None,
            train_end: None,
            n_train: 0,
            tuning_id: None,
            seed,
            max_read: None,
            max_realized: None,
            error: Some(error),
        }
    }

    pub fn is_success(&self) -> bool {
        self.error.is_none() && self.forecast.is_some()
    }
}

/// Outcome of one hyperparameter search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningRecord {
    pub id: String,
    pub target: String,
    pub horizon: usize,
    pub model: ModelFamily,
    pub featureset: BlockSet,
    /// Window end of the search.
    pub date: YearMonth,
    pub seed: u64,
    pub method: Option<TuningMethod>,
    pub chosen: Option<ParamSet>,
    pub score: Option<f64>,
    pub evaluated: usize,
    /// Choice of the first-stage search, for two-stage protocols.
    pub pilot: Option<ParamSet>,
    pub error: Option<String>,
}

impl TuningRecord {
    pub fn id_for(cell: &Cell, date: YearMonth) -> String {
        format!("{cell}/{date}")
    }

    pub fn is_success(&self) -> bool {
        self.error.is_none() && self.chosen.is_some()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Line {
    Header(StoreHeader),
    Forecast(ForecastRecord),
    Tuning(TuningRecord),
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum LineRef<'a> {
    Header(&'a StoreHeader),
    Forecast(&'a ForecastRecord),
    Tuning(&'a TuningRecord),
}

fn encode(line: LineRef<'_>) -> String {
    serde_json::to_string(&line).expect("store lines serialize")
}

/// A record together with the exact line it was read from or written as.
#[derive(Debug, Clone)]
struct Stored<T> {
    record: T,
    line: String,
}

#[derive(Debug)]
pub struct ForecastStore {
    path: PathBuf,
    header: StoreHeader,
    header_line: String,
    forecasts: BTreeMap<RecordKey, Stored<ForecastRecord>>,
    tunings: BTreeMap<String, Stored<TuningRecord>>,
    writer: BufWriter<File>,
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.display().to_string(), source }
}

impl ForecastStore {
    /// Start a new store at `path`. Fails if the file exists.
    pub fn create(path: &Path, header: StoreHeader) -> Result<Self, HarnessError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        let file = OpenOptions::new().write(true).create_new(true).open(path).map_err(io_err(path))?;
        let mut writer = BufWriter::new(file);
        let header_line = encode(LineRef::Header(&header));
        writeln!(writer, "{header_line}").and_then(|_| writer.flush()).map_err(io_err(path))?;
        Ok(ForecastStore {
            path: path.to_path_buf(),
            header,
            header_line,
            forecasts: BTreeMap::new(),
            tunings: BTreeMap::new(),
            writer,
        })
    }

    /// Reopen an existing store for appending.
    pub fn open(path: &Path) -> Result<Self, HarnessError> {
        let file = File::open(path).map_err(io_err(path))?;
        let mut lines: Vec<String> = Vec::new();
        for line in BufReader::new(file).lines() {
            lines.push(line.map_err(io_err(path))?);
        }
        let corrupt = |n: usize, msg: String| HarnessError::Corrupt { path: path.display().to_string(), line: n, msg };
        let (header, header_line) = match lines.first().map(|l| (serde_json::from_str::<Line>(l), l)) {
            Some((Ok(Line::Header(h)), l)) => (h, l.clone()),
            Some((Ok(_), _)) => return Err(corrupt(1, "first line is not a header".into())),
            Some((Err(e), _)) => return Err(corrupt(1, e.to_string())),
            None => return Err(corrupt(1, "empty file".into())),
        };
        if header.format != STORE_FORMAT {
            return Err(corrupt(1, format!("store format {} is not supported", header.format)));
        }
        let mut forecasts = BTreeMap::new();
        let mut tunings = BTreeMap::new();
        let last = lines.len() - 1;
        for (i, line) in lines.iter().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<Line>(line) {
                Ok(Line::Forecast(r)) => {
                    let stored = Stored { line: line.clone(), record: r };
                    insert(&mut forecasts, stored.record.key(), stored, ForecastRecord::is_success);
                }
                Ok(Line::Tuning(r)) => {
                    let stored = Stored { line: line.clone(), record: r };
                    insert(&mut tunings, stored.record.id.clone(), stored, TuningRecord::is_success);
                }
                Ok(Line::Header(_)) => return Err(corrupt(i + 1, "second header".into())),
                Err(e) if i == last => {
                    log::warn!("{}: dropping truncated last line: {e}", path.display())
                }
                Err(e) => return Err(corrupt(i + 1, e.to_string())),
            }
        }
        let file = OpenOptions::new().append(true).open(path).map_err(io_err(path))?;
        let mut store = ForecastStore {
            path: path.to_path_buf(),
            header,
            header_line,
            forecasts,
            tunings,
            writer: BufWriter::new(file),
        };
        // Make sure appends start on a fresh line after a truncated tail.
        let text_ends_cleanly = std::fs::read(path).map_err(io_err(path))?.last() == Some(&b'\n');
        if !text_ends_cleanly {
            store.compact()?;
        }
        Ok(store)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn header(&self) -> &StoreHeader {
        &self.header
    }

    /// True when a successful forecast exists for `key`.
    pub fn has_success(&self, key: &RecordKey) -> bool {
        self.forecasts.get(key).is_some_and(|s| s.record.is_success())
    }

    pub fn forecast(&self, key: &RecordKey) -> Option<&ForecastRecord> {
        self.forecasts.get(key).map(|s| &s.record)
    }

    pub fn tuning(&self, id: &str) -> Option<&TuningRecord> {
        self.tunings.get(id).map(|s| &s.record)
    }

    /// Forecast records in key order.
    pub fn forecasts(&self) -> impl Iterator<Item = &ForecastRecord> {
        self.forecasts.values().map(|s| &s.record)
    }

    pub fn tunings(&self) -> impl Iterator<Item = &TuningRecord> {
        self.tunings.values().map(|s| &s.record)
    }

    pub fn n_success(&self) -> usize {
        self.forecasts().filter(|r| r.is_success()).count()
    }

    pub fn n_failed(&self) -> usize {
        self.forecasts().filter(|r| !r.is_success()).count()
    }

    fn append_line(&mut self, line: &str) -> Result<(), HarnessError> {
        writeln!(self.writer, "{line}").and_then(|_| self.writer.flush()).map_err(io_err(&self.path))
    }

    /// Append a forecast. A failure never overwrites an earlier success.
    pub fn append_forecast(&mut self, record: ForecastRecord) -> Result<(), HarnessError> {
        let line = encode(LineRef::Forecast(&record));
        self.append_line(&line)?;
        insert(&mut self.forecasts, record.key(), Stored { record, line }, ForecastRecord::is_success);
        Ok(())
    }

    pub fn append_tuning(&mut self, record: TuningRecord) -> Result<(), HarnessError> {
        let line = encode(LineRef::Tuning(&record));
        self.append_line(&line)?;
        insert(&mut self.tunings, record.id.clone(), Stored { record, line }, TuningRecord::is_success);
        Ok(())
    }

    /// Rewrite the file as header, tuning lines and forecast lines, one per
    /// key in key order.
    pub fn compact(&mut self) -> Result<(), HarnessError> {
        self.writer.flush().map_err(io_err(&self.path))?;
        let tmp = self.path.with_extension("compacting");
        {
            let mut w = BufWriter::new(File::create(&tmp).map_err(io_err(&tmp))?);
            let lines = std::iter::once(&self.header_line)
                .chain(self.tunings.values().map(|s| &s.line))
                .chain(self.forecasts.values().map(|s| &s.line));
            for line in lines {
                writeln!(w, "{line}").map_err(io_err(&tmp))?;
            }
            w.flush().map_err(io_err(&tmp))?;
        }
        std::fs::rename(&tmp, &self.path).map_err(io_err(&self.path))?;
        let file = OpenOptions::new().append(true).open(&self.path).map_err(io_err(&self.path))?;
        self.writer = BufWriter::new(file);
        Ok(())
    }

    /// Successful forecasts as `target,h,model,featureset,origin,forecast,realized`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| HarnessError::Csv(e.to_string());
        w.write_record(["target", "h", "model", "featureset", "origin", "forecast", "realized"]).map_err(csv_err)?;
        for r in self.forecasts().filter(|r| r.is_success()) {
            w.write_record([
                r.target.clone(),
                r.horizon.to_string(),
                r.model.to_string(),
                r.featureset.to_string(),
                r.origin.to_string(),
                r.forecast.map(|v| v.to_string()).unwrap_or_default(),
                r.realized.map(|v| v.to_string()).unwrap_or_default(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| HarnessError::Csv(e.to_string()))
    }

    pub fn export_csv(&self, path: &Path) -> Result<(), HarnessError> {
        let file = File::create(path).map_err(io_err(path))?;
        self.write_csv(BufWriter::new(file))
    }
}

/// Insert `new` under `key` unless it is a failure replacing a success.
fn insert<K: Ord, T>(map: &mut BTreeMap<K, Stored<T>>, key: K, new: Stored<T>, ok: fn(&T) -> bool) {
    match map.get(&key) {
        Some(old) if ok(&old.record) && !ok(&new.record) => {}
        _ => {
            map.insert(key, new);
        }
    }
}

/// Read forecast records from a CSV export.
pub fn read_csv_export(path: &Path) -> Result<Vec<ForecastRecord>, HarnessError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| HarnessError::Csv(e.to_string()))?;
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| HarnessError::Csv(e.to_string()))?;
        let field = |i: usize| row.get(i).unwrap_or("").to_string();
        let bad = |what: &str| HarnessError::Csv(format!("bad {what} in row {:?}", row));
        let num = |s: String| {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse::<f64>().map(Some)
            }
        };
        out.push(ForecastRecord {
            target: field(0),
            horizon: field(1).parse().map_err(|_| bad("h"))?,
            model: field(2).parse().map_err(|_| bad("model"))?,
            featureset: field(3).parse().map_err(|_| bad("featureset"))?,
            origin: field(4).parse().map_err(|_| bad("origin"))?,
            forecast: num(field(5)).map_err(|_| bad("forecast"))?,
            realized: num(field(6)).map_err(|_| bad("realized"))?,
            train_start: None,
            train_end: None,
            n_train: 0,
            tuning_id: None,
            seed: 0,
            max_read: None,
            max_realized: None,
            error: None,
        });
    }
    Ok(out)
}
