use serde::{Deserialize, Serialize};

use super::{RmseTable, SpecId};
use crate::features::BlockKind;

/// Lowest-RMSE specifications of one `(target, horizon)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestSpec {
    pub target: String,
    pub horizon: usize,
    /// Every specification attaining the minimum; more than one on ties.
    pub winners: Vec<SpecId>,
    pub rmse: f64,
}

impl BestSpec {
    /// `EN with F`, `RF with F, X, MARX`, or `AR`; ties joined by ` / `.
    pub fn label(&self) -> String {
        self.winners.iter().map(|s| spec_label(*s)).collect::<Vec<_>>().join(" / ")
    }

    /// Whether some winner uses block `kind`.
    pub fn uses(&self, kind: BlockKind) -> bool {
        self.winners.iter().any(|s| s.featureset.contains(kind))
    }
}

fn spec_label(s: SpecId) -> String {
    if s.featureset.is_empty() {
        return s.model.to_string();
    }
    let blocks: Vec<&str> = s.featureset.kinds().map(|k| k.name()).collect();
    format!("{} with {}", s.model, blocks.join(", "))
}

/// Minimal-RMSE specification per `(target, horizon)` of `table`, in table
/// order. RMSEs within a relative `1e-12` of the minimum count as ties.
pub fn best_spec_table(table: &RmseTable) -> Vec<BestSpec> {
    let mut out: Vec<BestSpec> = Vec::new();
    for (target, h) in table.cells() {
        let rows: Vec<_> = table.rows.iter().filter(|r| r.target == target && r.horizon == h).collect();
        let min = rows.iter().map(|r| r.rmse).fold(f64::INFINITY, f64::min);
        let winners = rows.iter().filter(|r| r.rmse <= min * (1.0 + 1e-12)).map(|r| r.spec).collect();
        out.push(BestSpec { target, horizon: h, winners, rmse: min });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::RmseCell;

    fn cell(target: &str, h: usize, spec: &str, rmse: f64) -> RmseCell {
        RmseCell {
            target: target.into(),
            horizon: h,
            spec: spec.parse().unwrap(),
            n: 10,
            rmse,
            ratio: rmse,
            dm_statistic: None,
            dm_p_value: None,
            in_mcs: false,
            mcs_p_value: None,
        }
    }

    fn table(rows: Vec<RmseCell>) -> RmseTable {
        RmseTable { benchmark: "FM".parse().unwrap(), rows }
    }

    #[test]
    fn planted_winner_is_found() {
        let t = table(vec![
            cell("CPI", 12, "FM", 1.0),
            cell("CPI", 12, "EN/F", 0.8),
            cell("CPI", 12, "RF/F-X", 0.9),
            cell("CPI", 1, "FM", 1.0),
            cell("CPI", 1, "RF/F-X", 1.1),
        ]);
        let best = best_spec_table(&t);
        assert_eq!(best.len(), 2);
        let h12 = best.iter().find(|b| b.horizon == 12).unwrap();
        assert_eq!(h12.label(), "EN with F");
        assert!(h12.uses(BlockKind::F) && !h12.uses(BlockKind::X));
        assert_eq!(best.iter().find(|b| b.horizon == 1).unwrap().label(), "FM with F");
    }

    #[test]
    fn ties_list_every_winner() {
        let t = table(vec![cell("A", 1, "RF/F-MARX", 0.5), cell("A", 1, "BT/X", 0.5), cell("A", 1, "AR", 0.7)]);
        let best = best_spec_table(&t);
        assert_eq!(best[0].winners.len(), 2);
        assert_eq!(best[0].label(), "RF with F, MARX / BT with X");
    }

    #[test]
    fn single_model_grid_wins_everywhere() {
        let t = table(vec![cell("A", 1, "AR", 0.5), cell("B", 3, "AR", 0.7)]);
        assert!(best_spec_table(&t).iter().all(|b| b.label() == "AR"));
    }
}
