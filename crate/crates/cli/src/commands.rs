use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use anyhow::{bail, Context, Result};

use marxbench_core::eval::{write_report, McsConfig, ReportConfig, SpecId};
use marxbench_core::fredmd::synthetic::{generate, SyntheticConfig};
use marxbench_core::fredmd::{diagnose, parse_fredmd, read_table, RawPanel};
use marxbench_core::harness::{
    grid, origins, resume, run_poos, tuning_dates, ExperimentConfig, ForecastStore, PreparedData, RunSummary,
};
use marxbench_core::selftest::run_selftest;

use crate::args::{Command, FetchArgs, ReportArgs, RunArgs, ValidateArgs};

/// Exit code when fewer cells than `min_completion` succeeded.
const EXIT_INCOMPLETE: u8 = 3;
/// Exit code after Ctrl-C.
const EXIT_CANCELLED: u8 = 130;

pub const STORE_FILE: &str = "forecasts.jsonl";
pub const EXPORT_FILE: &str = "forecasts.csv";

pub fn dispatch(command: Command) -> Result<u8> {
    match command {
        Command::Fetch(a) => fetch(&a),
        Command::Validate(a) => validate(&a),
        Command::Run(a) => run(&a, false),
        Command::Resume(a) => run(&a, true),
        Command::Report(a) => report(&a),
        Command::Selftest => selftest(),
    }
}

#[cfg(feature = "http")]
fn fetch(args: &FetchArgs) -> Result<u8> {
    use marxbench_core::fredmd::{fetch_fredmd, vintage_url, HttpTransport};
    let url = vintage_url(args.vintage);
    let transport = HttpTransport::new()?;
    let bytes = fetch_fredmd(&transport, &url, &args.cache)?;
    let name = url.rsplit('/').next().unwrap_or("current.csv");
    println!("{} ({} bytes)", args.cache.join(name).display(), bytes.len());
    Ok(0)
}

#[cfg(not(feature = "http"))]
fn fetch(_: &FetchArgs) -> Result<u8> {
    bail!("this build has no HTTP support; rebuild with the `http` feature or download the file manually")
}

fn validate(args: &ValidateArgs) -> Result<u8> {
    let bytes = std::fs::read(&args.data).with_context(|| format!("cannot read {}", args.data.display()))?;
    let table =
        read_table(&bytes).with_context(|| format!("{} is not a readable FRED-MD table", args.data.display()))?;
    let diagnostics = diagnose(&table);
    println!("{diagnostics}");
    Ok(diagnostics.exit_code() as u8)
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(t) = &args.targets {
        cfg.targets = t.clone();
    }
    if let Some(h) = &args.horizons {
        cfg.horizons = h.clone();
    }
    if let Some(m) = &args.models {
        cfg.models = m.clone();
    }
    if let Some(f) = &args.featuresets {
        cfg.featuresets = f.clone();
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_data(args: &RunArgs, cfg: &ExperimentConfig) -> Result<RawPanel> {
    if args.synthetic {
        let end = cfg.poos_end.offset(*cfg.horizons.iter().max().unwrap_or(&1) as i32);
        log::info!("using the synthetic panel through {end}");
        return Ok(generate(&SyntheticConfig { end, late_series: false, ..Default::default() }));
    }
    let path = args
        .data
        .clone()
        .or_else(|| cfg.data.as_ref().map(PathBuf::from))
        .context("no data: pass --data, set MARXBENCH_DATA or the config's `data` key, or use --synthetic")?;
    let bytes = std::fs::read(&path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_fredmd(&bytes).with_context(|| format!("cannot parse {}", path.display()))
}

fn dry_run(cfg: &ExperimentConfig) {
    let cells = grid(cfg);
    let n_origins = origins(cfg).len();
    let n_tunings = tuning_dates(cfg).len();
    for c in &cells {
        println!("{c}");
    }
    println!(
        "{} cells x {} origins = {} forecasts; {} tuning dates, {} tuning searches",
        cells.len(),
        n_origins,
        cells.len() * n_origins,
        n_tunings,
        cells.len() * n_tunings
    );
}

fn run(args: &RunArgs, resuming: bool) -> Result<u8> {
    let cfg = load_config(args)?;
    if args.dry_run {
        dry_run(&cfg);
        return Ok(0);
    }
    let benchmark: SpecId = args.benchmark.parse()?;
    let raw = load_data(args, &cfg)?;
    let data = PreparedData::new(raw, &cfg)?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
    let store_path = args.out.join(STORE_FILE);

    let cancel = Arc::new(AtomicBool::new(false));
    let flag = Arc::clone(&cancel);
    ctrlc::set_handler(move || {
        eprintln!("interrupt: finishing cells in flight, then flushing the store");
        flag.store(true, Ordering::SeqCst);
    })
    .context("cannot install the Ctrl-C handler")?;

    let (store, summary) = if resuming {
        resume(&cfg, &data, &store_path, &cancel)?
    } else {
        if store_path.exists() {
            bail!("{} already exists; use `resume` or a new --out", store_path.display());
        }
        run_poos(&cfg, &data, &store_path, &cancel)?
    };
    store.export_csv(&args.out.join(EXPORT_FILE))?;
    print_summary(&summary, &store_path);
    if summary.cancelled {
        return Ok(EXIT_CANCELLED);
    }
    if !args.no_report {
        let cfg_report = ReportConfig { benchmark, ..Default::default() };
        let records: Vec<_> = store.forecasts().cloned().collect();
        match write_report(&records, store.header(), &cfg_report, &args.out.join("report")) {
            Ok(r) => println!("report: {} files in {}", r.files.len(), args.out.join("report").display()),
            Err(e) => log::warn!("report skipped: {e}"),
        }
    }
    Ok(if summary.completion() + 1e-12 >= cfg.min_completion { 0 } else { EXIT_INCOMPLETE })
}

fn print_summary(s: &RunSummary, path: &Path) {
    println!(
        "{}: {}/{} forecasts succeeded ({:.1}%), {} failed; {} computed now, {} tunings",
        path.display(),
        s.succeeded,
        s.expected,
        100.0 * s.completion(),
        s.failed,
        s.computed,
        s.tunings_computed
    );
}

fn report(args: &ReportArgs) -> Result<u8> {
    let path = if args.store.is_dir() { args.store.join(STORE_FILE) } else { args.store.clone() };
    let store = ForecastStore::open(&path)?;
    let out = args.out.clone().unwrap_or_else(|| path.parent().unwrap_or(Path::new(".")).join("report"));
    let cfg = ReportConfig {
        benchmark: args.benchmark.parse()?,
        mcs: McsConfig { alpha: args.mcs_alpha, reps: args.mcs_reps, ..Default::default() },
        harvey: args.harvey,
        gr_window: args.gr_window,
    };
    let records: Vec<_> = store.forecasts().cloned().collect();
    let summary = write_report(&records, store.header(), &cfg, &out)?;
    for w in &summary.warnings {
        log::warn!("{w}");
    }
    println!("report: {} files for {} target/horizon pairs in {}", summary.files.len(), summary.cells, out.display());
    Ok(0)
}

fn selftest() -> Result<u8> {
    let results = run_selftest();
    let mut failed = 0;
    for r in &results {
        let tag = if r.passed { "ok  " } else { "FAIL" };
        println!("{tag} {} ({}; {:.2}s)", r.name, r.detail, r.seconds);
        failed += usize::from(!r.passed);
    }
    println!("{} checks, {failed} failed", results.len());
    Ok(u8::from(failed > 0))
}
