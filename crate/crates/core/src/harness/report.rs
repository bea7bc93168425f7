use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::sweep::{SweepRow, SweepTable};

pub const SUMMARY_HEADER: &str =
    "geometry,compact,chi,trials,best_infidelity,median_infidelity,success_rate,mean_iterations,mean_wall_ms";

/// Aggregate of one (geometry, compact, chi) group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub geometry: String,
    pub compact: bool,
    pub chi: usize,
    /// Rows in the group, including failed ones.
    pub trials: usize,
    pub best: f64,
    /// Lower median of the final infidelities.
    pub median: f64,
    /// Fraction of all rows in the group with final infidelity below the threshold.
    pub success_rate: f64,
    pub mean_iterations: f64,
    pub mean_wall_ms: f64,
}

/// Lower median of a non-empty slice; `None` when empty.
pub fn lower_median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(v[(v.len() - 1) / 2])
}

/// Groups rows by (geometry, compact, chi) in order of first appearance and
/// summarizes each. Failed rows count as trials but not as successes; groups
/// with no finite infidelity are omitted with a warning.
pub fn report(table: &SweepTable, threshold: f64) -> Vec<GroupSummary> {
    type Key = (String, bool, usize);
    let mut groups: Vec<(Key, Vec<&SweepRow>)> = Vec::new();
    for row in &table.rows {
        let key = (row.geometry.clone(), row.compact, row.chi);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, rows)) => rows.push(row),
            None => groups.push((key, vec![row])),
        }
    }

    let mut out = Vec::with_capacity(groups.len());
    for ((geometry, compact, chi), rows) in groups {
        let finite: Vec<&SweepRow> = rows.iter().copied().filter(|r| r.final_infidelity.is_finite()).collect();
        let infidelities: Vec<f64> = finite.iter().map(|r| r.final_infidelity).collect();
        let Some(median) = lower_median(&infidelities) else {
            log::warn!("group {geometry} compact={compact} chi={chi} has no valid rows; omitted");
            continue;
        };
        let best = infidelities.iter().copied().fold(f64::INFINITY, f64::min);
        let successes = infidelities.iter().filter(|&&i| i < threshold).count();
        let m = finite.len() as f64;
        out.push(GroupSummary {
            geometry,
            compact,
            chi,
            trials: rows.len(),
            best,
            median,
            success_rate: successes as f64 / rows.len() as f64,
            mean_iterations: finite.iter().map(|r| r.iterations as f64).sum::<f64>() / m,
            mean_wall_ms: finite.iter().map(|r| r.wall_ms).sum::<f64>() / m,
        });
    }
    out
}

pub fn summary_csv(groups: &[GroupSummary]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for g in groups {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            g.geometry,
            g.compact,
            g.chi,
            g.trials,
            g.best,
            g.median,
            g.success_rate,
            g.mean_iterations,
            g.mean_wall_ms
        );
    }
    out
}

/// Fixed-width table for terminals.
pub fn summary_table(groups: &[GroupSummary]) -> String {
    let mut out = format!(
        "{:<12} {:>7} {:>5} {:>6} {:>11} {:>11} {:>8} {:>9} {:>10}\n",
        "geometry", "compact", "chi", "trials", "best", "median", "success", "mean_iter", "mean_ms"
    );
    for g in groups {
        let _ = writeln!(
            out,
            "{:<12} {:>7} {:>5} {:>6} {:>11.3e} {:>11.3e} {:>8.3} {:>9.1} {:>10.1}",
            g.geometry,
            g.compact,
            g.chi,
            g.trials,
            g.best,
            g.median,
            g.success_rate,
            g.mean_iterations,
            g.mean_wall_ms
        );
    }
    out
}
