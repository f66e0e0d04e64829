use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{dm_test, mcs, significance_stars, EvalError, LossPanel, McsConfig, SpecId};
use crate::harness::ForecastRecord;

/// Suffix marking members of the model confidence set.
pub const MCS_MARKER: &str = "†";

/// One specification's accuracy for one `(target, horizon)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseCell {
    pub target: String,
    pub horizon: usize,
    pub spec: SpecId,
    /// Common dates the statistics use.
    pub n: usize,
    pub rmse: f64,
    /// RMSE over the benchmark's RMSE.
    pub ratio: f64,
    /// Diebold-Mariano test against the benchmark; positive means larger
    /// losses than the benchmark. `None` for the benchmark itself and for
    /// identical forecasts.
    pub dm_statistic: Option<f64>,
    pub dm_p_value: Option<f64>,
    pub in_mcs: bool,
    pub mcs_p_value: Option<f64>,
}

impl RmseCell {
    /// `0.934**†`: ratio, significance stars, confidence-set marker.
    pub fn display(&self) -> String {
        format!("{:.3}{}{}", self.ratio, significance_stars(self.dm_p_value), if self.in_mcs { MCS_MARKER } else { "" })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseTable {
    pub benchmark: SpecId,
    pub rows: Vec<RmseCell>,
}

impl RmseTable {
    /// Distinct `(target, horizon)` pairs in row order.
    pub fn cells(&self) -> Vec<(String, usize)> {
        let mut seen = BTreeSet::new();
        self.rows
            .iter()
            .filter(|r| seen.insert((r.target.clone(), r.horizon)))
            .map(|r| (r.target.clone(), r.horizon))
            .collect()
    }

    pub fn get(&self, target: &str, horizon: usize, spec: SpecId) -> Option<&RmseCell> {
        self.rows.iter().find(|r| r.target == target && r.horizon == horizon && r.spec == spec)
    }

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.10}")).unwrap_or_default();
        let mut out = String::from("target,h,spec,benchmark,n,rmse,ratio,dm_stat,dm_p,stars,in_mcs,mcs_p\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:.10},{:.10},{},{},{},{},{}",
                r.target,
                r.horizon,
                r.spec,
                self.benchmark,
                r.n,
                r.rmse,
                r.ratio,
                opt(r.dm_statistic),
                opt(r.dm_p_value),
                significance_stars(r.dm_p_value),
                r.in_mcs as u8,
                opt(r.mcs_p_value)
            );
        }
        out
    }

    /// One block per target: specifications down, horizons across.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "RMSE relative to {}; *** ** * = DM 1% 5% 10%; {} = in model confidence set\n",
            self.benchmark, MCS_MARKER
        );
        let targets: Vec<String> = {
            let mut seen = BTreeSet::new();
            self.rows.iter().filter(|r| seen.insert(r.target.clone())).map(|r| r.target.clone()).collect()
        };
        for target in targets {
            let horizons: BTreeSet<usize> =
                self.rows.iter().filter(|r| r.target == target).map(|r| r.horizon).collect();
            let mut specs: Vec<SpecId> = Vec::new();
            for r in self.rows.iter().filter(|r| r.target == target) {
                if !specs.contains(&r.spec) {
                    specs.push(r.spec);
                }
            }
            let width = specs.iter().map(|s| s.to_string().len()).max().unwrap_or(4).max(target.len());
            let _ = write!(out, "\n{target:<width$}");
            for h in &horizons {
                let _ = write!(out, " {:>10}", format!("h={h}"));
            }
            out.push('\n');
            for s in &specs {
                let _ = write!(out, "{:<width$}", s.to_string());
                for &h in &horizons {
                    let cell = self.get(&target, h, *s).map(|c| c.display()).unwrap_or_else(|| "-".into());
                    let _ = write!(out, " {cell:>10}");
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Seed of the confidence-set bootstrap for one `(target, horizon)`.
pub(crate) fn cell_seed(seed: u64, target: &str, horizon: usize) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(target.as_bytes());
    hasher.update([0]);
    hasher.update((horizon as u64).to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// RMSE, ratio against `benchmark`, Diebold-Mariano test against the
/// benchmark and confidence-set membership for every specification of every
/// `(target, horizon)` in `records`. Each pair is evaluated on the dates
/// where all its specifications succeeded. `mcs_cfg = None` skips the
/// confidence set.
pub fn rmse_table(
    records: &[ForecastRecord],
    benchmark: SpecId,
    mcs_cfg: Option<&McsConfig>,
    seed: u64,
    harvey: bool,
) -> Result<RmseTable, EvalError> {
    let pairs: BTreeSet<(&str, usize)> =
        records.iter().filter(|r| r.is_success()).map(|r| (r.target.as_str(), r.horizon)).collect();
    if pairs.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut rows = Vec::new();
    for (target, h) in pairs {
        let panel = LossPanel::from_records(records, target, h)?;
        let b = panel
            .index_of(benchmark)
            .ok_or_else(|| EvalError::MissingBenchmark(format!("{benchmark} for {target} h={h}")))?;
        let bench_rmse = panel.rmse(b)?;
        let membership = match mcs_cfg {
            Some(cfg) if panel.specs.len() >= 2 => {
                let losses: Vec<Vec<f64>> = (0..panel.specs.len()).map(|s| panel.squared(s)).collect();
                let res = mcs(&losses, cfg, cell_seed(seed, target, h))?;
                let members = res.members(cfg.alpha);
                Some((res.p_values, members))
            }
            _ => None,
        };
        let mut order: Vec<usize> = (0..panel.specs.len()).filter(|&s| s != b).collect();
        order.insert(0, b);
        for s in order {
            let rmse = panel.rmse(s)?;
            let dm = if s == b { None } else { Some(dm_test(&panel.loss_differential(s, b), h, harvey)?) };
            rows.push(RmseCell {
                target: target.to_string(),
                horizon: h,
                spec: panel.specs[s],
                n: panel.dates.len(),
                rmse,
                ratio: if s == b { 1.0 } else { rmse / bench_rmse },
                dm_statistic: dm.and_then(|d| d.statistic),
                dm_p_value: dm.and_then(|d| d.p_value),
                in_mcs: membership.as_ref().is_some_and(|(_, m)| m.contains(&s)),
                mcs_p_value: membership.as_ref().map(|(p, _)| p[s]),
            });
        }
    }
    Ok(RmseTable { benchmark, rows })
}
