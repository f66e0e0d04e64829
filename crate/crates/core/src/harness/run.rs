use std::cell::Cell as StdCell;
use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{
    derive_seed, grid, origins, tuning_date_for, tuning_dates, Cell, ExperimentConfig, ForecastRecord, ForecastStore,
    HarnessError, RecordKey, StoreHeader, TuningRecord, STORE_FORMAT,
};
use crate::date::YearMonth;
use crate::features::{
    assemble_feature_matrix, build_blocks, lag_block, BlockCollection, BlockKind, BlockSet, ColumnKind, ColumnLabel,
    FeatureError,
};
use crate::fredmd::{
    build_target, resolve_mnemonic, stationarize, RawPanel, StationaryPanel, TargetConvention, TargetSeries, Tcode,
};
use crate::models::{fit, Hyperparams, ModelFamily, ModelSpec};
use crate::panel::Panel;
use crate::tuning::{hyperparams_for, order_columns, tune_model, ParamSet};

/// Forecast targets of one variable.
#[derive(Debug, Clone)]
pub struct PreparedTarget {
    pub mnemonic: String,
    /// One-month target, the source of the own-lag block.
    pub y1: TargetSeries,
    pub by_horizon: BTreeMap<usize, TargetSeries>,
}

/// Raw and stationary panels plus every target series, computed once per
/// run. All transforms are causal, so a value dated `t` depends on raw data
/// dated at or before `t` only.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub raw: RawPanel,
    pub stationary: StationaryPanel,
    x: Panel,
    levels: Panel,
    burn_in: usize,
    targets: BTreeMap<String, Result<PreparedTarget, String>>,
}

impl PreparedData {
    pub fn new(raw: RawPanel, cfg: &ExperimentConfig) -> Result<Self, HarnessError> {
        let (first, last) = match (raw.first_date(), raw.last_date()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(HarnessError::DataSpan("empty panel".into())),
        };
        if first > cfg.train_start {
            return Err(HarnessError::DataSpan(format!("data start {first} is after train_start {}", cfg.train_start)));
        }
        if last < cfg.poos_end {
            return Err(HarnessError::DataSpan(format!("data end {last} is before poos_end {}", cfg.poos_end)));
        }
        let stationary = stationarize(&raw)?;
        let mut targets = BTreeMap::new();
        for name in &cfg.targets {
            let mnemonic =
                resolve_mnemonic(name, &raw.mnemonics).ok_or_else(|| HarnessError::UnknownTarget(name.clone()))?;
            let k = raw.column_index(&mnemonic).expect("resolved mnemonic");
            let series = raw.series(k);
            let convention = TargetConvention::for_mnemonic(&mnemonic);
            let prepared = (|| {
                let y1 = build_target(&mnemonic, &raw.dates, &series, 1, convention).map_err(|e| e.to_string())?;
                let mut by_horizon = BTreeMap::new();
                for &h in &cfg.horizons {
                    let y = build_target(&mnemonic, &raw.dates, &series, h, convention).map_err(|e| e.to_string())?;
                    by_horizon.insert(h, y);
                }
                Ok(PreparedTarget { mnemonic: mnemonic.clone(), y1, by_horizon })
            })();
            targets.insert(name.clone(), prepared);
        }
        let burn_in = raw.tcodes.iter().map(|t| t.burn_in()).max().unwrap_or(0);
        Ok(PreparedData { x: stationary.as_panel(), levels: raw.as_panel(), raw, stationary, burn_in, targets })
    }

    pub fn target(&self, name: &str) -> Option<&Result<PreparedTarget, String>> {
        self.targets.get(name)
    }
}

/// Records the latest dates read on behalf of one cell.
#[derive(Debug, Default)]
struct Audit {
    max_read: StdCell<Option<YearMonth>>,
    max_realized: StdCell<Option<YearMonth>>,
}

impl Audit {
    fn read(&self, date: YearMonth) {
        self.max_read.set(self.max_read.get().max(Some(date)));
    }

    fn realized(&self, date: YearMonth) {
        self.max_realized.set(self.max_realized.get().max(Some(date)));
    }

    /// Features, tuning and fits may read up to `origin`; only the realized
    /// value may look `h` months further.
    fn check(&self, origin: YearMonth, horizon: usize) -> Result<(), String> {
        if let Some(d) = self.max_read.get().filter(|d| *d > origin) {
            return Err(format!("look-ahead: read {d} for origin {origin}"));
        }
        let limit = origin.offset(horizon as i32);
        if let Some(d) = self.max_realized.get().filter(|d| *d > limit) {
            return Err(format!("look-ahead: realized read {d} beyond {limit}"));
        }
        Ok(())
    }
}

/// The only door to [`PreparedData`] while forecasting: every access goes
/// through an [`Audit`].
struct AuditedData<'a> {
    data: &'a PreparedData,
    audit: &'a Audit,
}

impl AuditedData<'_> {
    /// Stationary and raw windows over `[from, through]`.
    fn window(&self, from: YearMonth, through: YearMonth) -> (Panel, Panel) {
        self.audit.read(through);
        (self.data.x.slice_dates(from, through), self.data.levels.slice_dates(from, through))
    }

    fn target_value(&self, y: &TargetSeries, date: YearMonth) -> Option<f64> {
        self.audit.read(date);
        y.value_at(date)
    }

    fn realized_value(&self, y: &TargetSeries, date: YearMonth) -> Option<f64> {
        self.audit.realized(date);
        y.value_at(date)
    }
}

/// Everything built once per window end and shared by the cells.
struct WindowContext {
    end: YearMonth,
    dates: Vec<YearMonth>,
    blocks: BlockCollection,
    block_errors: BTreeMap<BlockKind, String>,
    own_lags: BTreeMap<String, Result<crate::features::FeatureBlock, String>>,
    max_read: Option<YearMonth>,
}

impl WindowContext {
    fn build(cfg: &ExperimentConfig, data: &PreparedData, end: YearMonth, cells: &[&Cell]) -> Self {
        let audit = Audit::default();
        let view = AuditedData { data, audit: &audit };
        let start = cfg.train_start.offset(data.burn_in as i32);
        let (x_all, levels_all) = view.window(start, end);
        let keep: Vec<usize> = (0..x_all.n_series())
            .filter(|&j| {
                let col = x_all.values.column(j);
                if !x_all.column_complete(j) || !levels_all.column_complete(j) {
                    return false;
                }
                let n = col.len().max(1) as f64;
                let mean = col.sum() / n;
                col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() > 0.0
            })
            .collect();
        let x = x_all.select_columns(&keep);
        let levels = levels_all.select_columns(&keep);
        let tcodes: Vec<Tcode> = keep.iter().map(|&j| data.raw.tcodes[j]).collect();

        let needed: BTreeSet<BlockKind> = cells.iter().flat_map(|c| c.featureset.kinds()).collect();
        let mut blocks = BlockCollection::default();
        let mut block_errors = BTreeMap::new();
        for kind in needed {
            match build_blocks(&cfg.features, &x, &levels, &tcodes, BlockSet::of(&[kind])) {
                Ok(mut built) => blocks.blocks.append(&mut built.blocks),
                Err(e) => {
                    block_errors.insert(kind, e.to_string());
                }
            }
        }

        let mut own_lags = BTreeMap::new();
        for target in cells.iter().map(|c| &c.target).collect::<BTreeSet<_>>() {
            let block = match data.target(target) {
                Some(Ok(t)) => {
                    let values: Vec<f64> =
                        x.dates.iter().map(|d| view.target_value(&t.y1, *d).unwrap_or(f64::NAN)).collect();
                    let panel = Panel::new(
                        x.dates.clone(),
                        vec![t.mnemonic.clone()],
                        DMatrix::from_column_slice(values.len(), 1, &values),
                    );
                    Ok(lag_block(&panel, cfg.features.y_lags, ColumnKind::OwnLag))
                }
                Some(Err(e)) => Err(e.clone()),
                None => Err(format!("target {target} was not prepared")),
            };
            own_lags.insert(target.clone(), block);
        }
        WindowContext { end, dates: x.dates, blocks, block_errors, own_lags, max_read: audit.max_read.get() }
    }
}

/// Training sample and prediction row of one cell at one window end.
struct Design {
    labels: Vec<ColumnLabel>,
    x_train: DMatrix<f64>,
    y_train: Vec<f64>,
    x_pred: Vec<f64>,
    first: YearMonth,
    last: YearMonth,
}

impl Design {
    fn columns(&self, cols: &[usize]) -> (Vec<String>, DMatrix<f64>, Vec<f64>) {
        let names = cols.iter().map(|&j| self.labels[j].to_string()).collect();
        let x = DMatrix::from_fn(self.x_train.nrows(), cols.len(), |i, j| self.x_train[(i, cols[j])]);
        let row = cols.iter().map(|&j| self.x_pred[j]).collect();
        (names, x, row)
    }
}

fn build_design(ctx: &WindowContext, data: &PreparedData, cell: &Cell, audit: &Audit) -> Result<Design, String> {
    if let Some(d) = ctx.max_read {
        audit.read(d);
    }
    let view = AuditedData { data, audit };
    for kind in cell.featureset.kinds() {
        if let Some(e) = ctx.block_errors.get(&kind) {
            return Err(format!("{kind} block: {e}"));
        }
    }
    let own = ctx.own_lags.get(&cell.target).ok_or("own lags missing")?.as_ref().map_err(|e| e.clone())?;
    let target = match data.target(&cell.target) {
        Some(Ok(t)) => t,
        _ => return Err(format!("target {} unavailable", cell.target)),
    };
    let y = target.by_horizon.get(&cell.horizon).ok_or("horizon not prepared")?;
    let fm = assemble_feature_matrix(&cell.target, cell.featureset, own, &ctx.blocks).map_err(|e| e.to_string())?;
    let pred = ctx.dates.len().checked_sub(1).filter(|&i| ctx.dates[i] == ctx.end).ok_or("window ends early")?;
    if !fm.row_complete(pred) {
        return Err(format!("feature row at {} is incomplete", ctx.end));
    }
    let mut rows = Vec::new();
    let mut y_train = Vec::new();
    for (i, &tau) in ctx.dates.iter().enumerate() {
        let dated = tau.offset(cell.horizon as i32);
        if dated > ctx.end || !fm.row_complete(i) {
            continue;
        }
        if let Some(v) = view.target_value(y, dated) {
            rows.push(i);
            y_train.push(v);
        }
    }
    if rows.len() < 2 {
        return Err(FeatureError::NoCompleteRows.to_string());
    }
    Ok(Design {
        x_train: fm.select_rows(&rows),
        x_pred: fm.row(pred),
        first: ctx.dates[rows[0]],
        last: ctx.dates[*rows.last().expect("non-empty")],
        labels: fm.labels,
        y_train,
    })
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into())
}

fn guarded<T>(f: impl FnOnce() -> Result<T, String>) -> Result<T, String> {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| Err(format!("panic: {}", panic_message(p))))
}

fn tune_cell(cfg: &ExperimentConfig, data: &PreparedData, ctx: &WindowContext, cell: &Cell) -> TuningRecord {
    let seed = derive_seed(cfg.seed, cell, ctx.end);
    let mut record = TuningRecord {
        id: TuningRecord::id_for(cell, ctx.end),
        target: cell.target.clone(),
        horizon: cell.horizon,
        model: cell.model,
        featureset: cell.featureset,
        date: ctx.end,
        seed,
        method: None,
        chosen: None,
        score: None,
        evaluated: 0,
        pilot: None,
        error: None,
    };
    let started = Instant::now();
    let outcome = guarded(|| {
        let audit = Audit::default();
        let design = build_design(ctx, data, cell, &audit)?;
        let result = tune_model(cell.model, &design.x_train, &design.y_train, &design.labels, &cfg.tuning, seed)
            .map_err(|e| e.to_string())?;
        audit.check(ctx.end, cell.horizon)?;
        Ok(result)
    });
    match outcome {
        Ok(result) => {
            record.method = Some(result.method);
            record.score = Some(result.score);
            record.evaluated = result.evaluations.len();
            record.pilot = result.pilot.map(|p| p.chosen);
            record.chosen = Some(result.chosen);
        }
        Err(e) => record.error = Some(e),
    }
    log::info!(
        "tune cell={cell} date={} id={} secs={:.3} chosen={} error={}",
        ctx.end,
        record.id,
        started.elapsed().as_secs_f64(),
        record.chosen.as_ref().map(ParamSet::to_string).unwrap_or_default(),
        record.error.as_deref().unwrap_or("-"),
    );
    record
}

fn forecast_cell(
    cfg: &ExperimentConfig,
    data: &PreparedData,
    ctx: &WindowContext,
    cell: &Cell,
    tuning: Result<&TuningRecord, String>,
) -> ForecastRecord {
    let origin = ctx.end;
    let key = RecordKey::new(cell, origin);
    let seed = derive_seed(cfg.seed, cell, origin);
    let started = Instant::now();
    let audit = Audit::default();
    let outcome = guarded(|| {
        let tuning = tuning?;
        let chosen = match (&tuning.chosen, &tuning.error) {
            (Some(c), None) => c,
            (_, e) => return Err(format!("tuning {} failed: {}", tuning.id, e.as_deref().unwrap_or("no choice"))),
        };
        let design = build_design(ctx, data, cell, &audit)?;
        let (cols, params): (Vec<usize>, Hyperparams) = match cell.model {
            ModelFamily::Ar | ModelFamily::Fm => {
                let order = chosen.get("order").ok_or("tuning chose no order")? as usize;
                (order_columns(&design.labels, order), Hyperparams::Ols)
            }
            family => {
                let p = design.labels.len();
                ((0..p).collect(), hyperparams_for(family, chosen, p, &cfg.tuning).map_err(|e| e.to_string())?)
            }
        };
        let (names, x, row) = design.columns(&cols);
        let spec = ModelSpec { family: cell.model, params, seed };
        let model = fit(&spec, &names, &x, &design.y_train).map_err(|e| e.to_string())?;
        let forecast = model.predict_row(&names, &row).map_err(|e| e.to_string())?;
        if !forecast.is_finite() {
            return Err(format!("non-finite forecast {forecast}"));
        }
        let y = &data.target(&cell.target).and_then(|t| t.as_ref().ok()).ok_or("target unavailable")?.by_horizon
            [&cell.horizon];
        let realized = AuditedData { data, audit: &audit }.realized_value(y, origin.offset(cell.horizon as i32));
        audit.check(origin, cell.horizon)?;
        Ok((forecast, realized, design, tuning.id.clone()))
    });
    let record = match outcome {
        Ok((forecast, realized, design, tuning_id)) => ForecastRecord {
            target: cell.target.clone(),
            horizon: cell.horizon,
            model: cell.model,
            featureset: cell.featureset,
            origin,
            forecast: Some(forecast),
            realized,
            train_start: Some(design.first),
            train_end: Some(design.last),
            n_train: design.y_train.len(),
            tuning_id: Some(tuning_id),
            seed,
            max_read: audit.max_read.get(),
            max_realized: audit.max_realized.get(),
            error: None,
        },
        Err(e) => ForecastRecord::failed(&key, seed, e),
    };
    log::info!(
        "forecast cell={cell} origin={origin} tuning={} n_train={} secs={:.3} error={}",
        record.tuning_id.as_deref().unwrap_or("-"),
        record.n_train,
        started.elapsed().as_secs_f64(),
        record.error.as_deref().unwrap_or("-"),
    );
    record
}

/// Counts of one invocation of the harness.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunSummary {
    /// Origins times grid cells.
    pub expected: usize,
    /// Successful records in the store after the run.
    pub succeeded: usize,
    /// Keys whose latest record is a failure.
    pub failed: usize,
    /// Forecast records written by this invocation.
    pub computed: usize,
    pub tunings_computed: usize,
    pub cancelled: bool,
}

impl RunSummary {
    pub fn completion(&self) -> f64 {
        if self.expected == 0 {
            1.0
        } else {
            self.succeeded as f64 / self.expected as f64
        }
    }
}

pub fn store_header(cfg: &ExperimentConfig) -> StoreHeader {
    StoreHeader {
        format: STORE_FORMAT,
        config_hash: cfg.hash(),
        config: cfg.hashed_json(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
    }
}

/// Run the whole experiment into a new store at `path`.
pub fn run_poos(
    cfg: &ExperimentConfig,
    data: &PreparedData,
    path: &Path,
    cancel: &AtomicBool,
) -> Result<(ForecastStore, RunSummary), HarnessError> {
    cfg.validate()?;
    let mut store = ForecastStore::create(path, store_header(cfg))?;
    let summary = execute(cfg, data, &mut store, cancel)?;
    Ok((store, summary))
}

/// Compute the keys missing from the store at `path`. Refuses a store
/// written under a different config.
pub fn resume(
    cfg: &ExperimentConfig,
    data: &PreparedData,
    path: &Path,
    cancel: &AtomicBool,
) -> Result<(ForecastStore, RunSummary), HarnessError> {
    cfg.validate()?;
    let mut store = ForecastStore::open(path)?;
    if store.header().config_hash != cfg.hash() {
        let mut diffs = cfg.diff_against(&store.header().config);
        if diffs.is_empty() {
            diffs.push(super::ConfigDiff {
                key: "config_hash".into(),
                stored: Some(store.header().config_hash.clone()),
                requested: Some(cfg.hash()),
            });
        }
        return Err(HarnessError::ConfigMismatch { diffs });
    }
    let summary = execute(cfg, data, &mut store, cancel)?;
    Ok((store, summary))
}

/// Fill every key of the grid that has no successful record, then compact.
pub fn execute(
    cfg: &ExperimentConfig,
    data: &PreparedData,
    store: &mut ForecastStore,
    cancel: &AtomicBool,
) -> Result<RunSummary, HarnessError> {
    let cells = grid(cfg);
    let origin_list = origins(cfg);
    let dates = tuning_dates(cfg);
    let mut summary = RunSummary { expected: cells.len() * origin_list.len(), ..RunSummary::default() };

    let mut todo: BTreeMap<YearMonth, Vec<&Cell>> = BTreeMap::new();
    for &origin in &origin_list {
        for cell in &cells {
            if !store.has_success(&RecordKey::new(cell, origin)) {
                todo.entry(origin).or_default().push(cell);
            }
        }
    }
    let mut tune_todo: BTreeMap<YearMonth, BTreeSet<&Cell>> = BTreeMap::new();
    for (&origin, cells) in &todo {
        let date = tuning_date_for(&dates, origin).expect("first origin is a tuning date");
        for cell in cells {
            let ok = store.tuning(&TuningRecord::id_for(cell, date)).is_some_and(TuningRecord::is_success);
            if !ok {
                tune_todo.entry(date).or_default().insert(cell);
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    let shared = Mutex::new(&mut *store);
    let write_error: Mutex<Option<HarnessError>> = Mutex::new(None);
    let record_err = |e: HarnessError| {
        write_error.lock().expect("error slot").get_or_insert(e);
    };

    pool.install(|| {
        let tuned: usize = tune_todo
            .par_iter()
            .map(|(&date, cells)| {
                if cancel.load(Ordering::SeqCst) {
                    return 0;
                }
                let cells: Vec<&Cell> = cells.iter().copied().collect();
                let ctx = WindowContext::build(cfg, data, date, &cells);
                cells
                    .par_iter()
                    .map(|cell| {
                        if cancel.load(Ordering::SeqCst) {
                            return 0;
                        }
                        let record = tune_cell(cfg, data, &ctx, cell);
                        if let Err(e) = shared.lock().expect("store lock").append_tuning(record) {
                            record_err(e);
                        }
                        1
                    })
                    .sum::<usize>()
            })
            .sum();
        summary.tunings_computed = tuned;
    });
    if let Some(e) = write_error.lock().expect("error slot").take() {
        return Err(e);
    }

    pool.install(|| {
        let computed: usize = todo
            .par_iter()
            .map(|(&origin, cells)| {
                if cancel.load(Ordering::SeqCst) {
                    return 0;
                }
                let ctx = WindowContext::build(cfg, data, origin, cells);
                let date = tuning_date_for(&dates, origin).expect("first origin is a tuning date");
                cells
                    .par_iter()
                    .map(|cell| {
                        if cancel.load(Ordering::SeqCst) {
                            return 0;
                        }
                        let id = TuningRecord::id_for(cell, date);
                        let tuning = shared.lock().expect("store lock").tuning(&id).cloned();
                        let tuning = tuning.ok_or_else(|| format!("tuning {id} missing"));
                        let record = forecast_cell(cfg, data, &ctx, cell, tuning.as_ref().map_err(|e| e.clone()));
                        if let Err(e) = shared.lock().expect("store lock").append_forecast(record) {
                            record_err(e);
                        }
                        1
                    })
                    .sum::<usize>()
            })
            .sum();
        summary.computed = computed;
    });
    if let Some(e) = write_error.lock().expect("error slot").take() {
        return Err(e);
    }

    summary.cancelled = cancel.load(Ordering::SeqCst);
    store.compact()?;
    let keys: BTreeSet<RecordKey> =
        origin_list.iter().flat_map(|&o| cells.iter().map(move |c| RecordKey::new(c, o))).collect();
    summary.succeeded = keys.iter().filter(|k| store.has_success(k)).count();
    summary.failed = keys.iter().filter(|k| store.forecast(k).is_some_and(|r| !r.is_success())).count();
    Ok(summary)
}
