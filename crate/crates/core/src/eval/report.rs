use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    best_spec_table, cumulative_errors, episode_range, gr_fluctuation, marginal_effects, rmse, rmse_table, EvalError,
    LossPanel, McsConfig, R2Panel, SpecId, RECESSION_STARTS,
};
use crate::date::YearMonth;
use crate::features::BlockKind;
use crate::harness::{ForecastRecord, StoreHeader};

/// Settings of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub benchmark: SpecId,
    pub mcs: McsConfig,
    /// Harvey-Leybourne-Newbold correction of the Diebold-Mariano test.
    pub harvey: bool,
    /// Fluctuation-test window in months; shortened to 30% of the sample when
    /// the sample is too short.
    pub gr_window: usize,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            benchmark: "FM".parse().expect("FM is a specification"),
            mcs: McsConfig::default(),
            harvey: false,
            gr_window: 136,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub files: Vec<PathBuf>,
    pub cells: usize,
    pub warnings: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config_hash: &'a str,
    code_version: &'a str,
    seed: u64,
    store_format: u32,
    report_version: &'a str,
    report: &'a ReportConfig,
    forecasts: usize,
    files: Vec<String>,
    warnings: &'a [String],
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.10}")).unwrap_or_default()
}

/// Writes every table and figure-data CSV for `records` into `dir`, plus a
/// `manifest.json` stamped from `header`. Output depends only on the inputs.
pub fn write_report(
    records: &[ForecastRecord],
    header: &StoreHeader,
    cfg: &ReportConfig,
    dir: &Path,
) -> Result<ReportSummary, EvalError> {
    let io = |e: std::io::Error| EvalError::Io(format!("{}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    let mut files: Vec<(String, String)> = Vec::new();
    let mut warnings = Vec::new();

    let table = rmse_table(records, cfg.benchmark, Some(&cfg.mcs), header.seed, cfg.harvey)?;
    files.push(("rmse.csv".into(), table.to_csv()));
    files.push(("rmse.txt".into(), table.to_text()));

    let mut best = String::from("target,h,label,rmse,F,X,MARX,MAF,Level\n");
    for b in best_spec_table(&table) {
        let _ = write!(best, "{},{},\"{}\",{:.10}", b.target, b.horizon, b.label(), b.rmse);
        for k in BlockKind::ALL {
            let _ = write!(best, ",{}", b.uses(k) as u8);
        }
        best.push('\n');
    }
    files.push(("best_specs.csv".into(), best));

    let r2 = R2Panel::from_records(records)?;
    for f in BlockKind::ALL {
        let mut out = String::from("feature,target,h,alpha,se,lower,upper,n_obs,n_specs,unidentified\n");
        for e in marginal_effects(&r2, f) {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                f,
                e.target.as_deref().unwrap_or("ALL"),
                e.horizon.map(|h| h.to_string()).unwrap_or_else(|| "ALL".into()),
                opt(e.alpha),
                opt(e.se),
                opt(e.lower),
                opt(e.upper),
                e.n_obs,
                e.n_specs,
                e.unidentified as u8
            );
        }
        files.push((format!("marginal_{}.csv", f.name().to_lowercase()), out));
    }

    let mut gr = String::from("target,h,spec,benchmark,window,mu,critical_value,date,statistic\n");
    let mut cumulative = String::from("target,h,spec,date,cum_sq_error\n");
    let mut episodes = String::from("target,h,event,spec,n,episode_rmse,episode_ratio,full_ratio\n");
    let pairs: BTreeSet<(&str, usize)> =
        records.iter().filter(|r| r.is_success()).map(|r| (r.target.as_str(), r.horizon)).collect();
    for &(target, h) in &pairs {
        let panel = LossPanel::from_records(records, target, h)?;
        let b = panel.index_of(cfg.benchmark).ok_or_else(|| EvalError::MissingBenchmark(cfg.benchmark.to_string()))?;
        let t = panel.dates.len();
        let window = if cfg.gr_window <= t {
            cfg.gr_window
        } else {
            let w = ((0.3 * t as f64).round() as usize).max(2);
            warnings.push(format!("{target} h={h}: {t} dates, fluctuation window shortened to {w}"));
            w
        };
        for s in (0..panel.specs.len()).filter(|&s| s != b) {
            if window > t {
                break;
            }
            let path = gr_fluctuation(&panel.loss_differential(s, b), window, h)?;
            for (c, stat) in path.centers.iter().zip(&path.statistics) {
                let _ = writeln!(
                    gr,
                    "{target},{h},{},{},{window},{:.6},{},{},{}",
                    panel.specs[s],
                    cfg.benchmark,
                    path.mu,
                    path.critical_value,
                    panel.dates[*c],
                    opt(*stat)
                );
            }
        }
        for p in cumulative_errors(&panel) {
            for (d, v) in p.dates.iter().zip(&p.values) {
                let _ = writeln!(cumulative, "{target},{h},{},{d},{v:.10}", p.spec);
            }
        }
        let full_bench = panel.rmse(b)?;
        for (y, m) in RECESSION_STARTS {
            let event = YearMonth::new(y, m).expect("valid date");
            let range = episode_range(&panel.dates, event);
            if range.is_empty() {
                continue;
            }
            let bench = rmse(&panel.errors[b][range.clone()])?;
            for s in 0..panel.specs.len() {
                let e = rmse(&panel.errors[s][range.clone()])?;
                let _ = writeln!(
                    episodes,
                    "{target},{h},{event},{},{},{e:.10},{:.10},{:.10}",
                    panel.specs[s],
                    range.len(),
                    e / bench,
                    panel.rmse(s)? / full_bench
                );
            }
        }
    }
    files.push(("gr_paths.csv".into(), gr));
    files.push(("cumulative_errors.csv".into(), cumulative));
    files.push(("episodes.csv".into(), episodes));

    let mut written = Vec::new();
    for (name, body) in &files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(io)?;
        written.push(path);
    }
    let manifest = Manifest {
        config_hash: &header.config_hash,
        code_version: &header.code_version,
        seed: header.seed,
        store_format: header.format,
        report_version: env!("CARGO_PKG_VERSION"),
        report: cfg,
        forecasts: records.iter().filter(|r| r.is_success()).count(),
        files: files.iter().map(|f| f.0.clone()).collect(),
        warnings: &warnings,
    };
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| EvalError::Io(e.to_string()))?;
    fs::write(&path, json + "\n").map_err(io)?;
    written.push(path);
    Ok(ReportSummary { files: written, cells: pairs.len(), warnings })
}
