use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, GeometryEntry};
use crate::error::{Error, Result};
use crate::geometry::GeometrySpec;
use crate::optimizer::run_trial;
use crate::rng::{derive_seed, hash_str};
use crate::surrogate::TargetState;

pub const CSV_HEADER: &str = "geometry,compact,n,chi,trial,seed,final_infidelity,iterations,wall_ms,\
largest_tensor,total_elems,diameter,converged_reason";

/// Reason recorded for a cell whose trial returned an error.
pub const FAILED: &str = "Failed";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub geometry: String,
    pub compact: bool,
    pub n: usize,
    pub chi: usize,
    pub trial: usize,
    pub seed: u64,
    pub final_infidelity: f64,
    pub iterations: usize,
    pub wall_ms: f64,
    pub largest_tensor: usize,
    pub total_elems: usize,
    pub diameter: usize,
    pub converged_reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cell {
    pub geometry: GeometryEntry,
    pub chi: usize,
    pub trial: usize,
}

/// Per-trial seed, a pure function of the base seed and the cell.
pub fn cell_seed(base: u64, cell: &Cell) -> u64 {
    derive_seed(
        base,
        &[
            hash_str(&cell.geometry.family.to_string()),
            cell.geometry.compact as u64,
            cell.chi as u64,
            cell.trial as u64,
        ],
    )
}

/// Cells in canonical order: geometry, then chi, then trial.
pub fn cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for &geometry in &cfg.geometries {
        for &chi in &cfg.chi_values {
            for trial in 0..cfg.trials_per_cell {
                out.push(Cell { geometry, chi, trial });
            }
        }
    }
    out
}

fn run_cell(cfg: &ExperimentConfig, target: &TargetState, cell: &Cell) -> SweepRow {
    let seed = cell_seed(cfg.base_seed, cell);
    let spec = GeometrySpec { family: cell.geometry.family, n: cfg.n, chi: cell.chi, p: cfg.p };
    let mut row = SweepRow {
        geometry: cell.geometry.family.to_string(),
        compact: cell.geometry.compact,
        n: cfg.n,
        chi: cell.chi,
        trial: cell.trial,
        seed,
        final_infidelity: f64::NAN,
        iterations: 0,
        wall_ms: 0.0,
        largest_tensor: 0,
        total_elems: 0,
        diameter: 0,
        converged_reason: FAILED.to_string(),
    };
    match run_trial(target, &spec, cell.geometry.compact, seed, &cfg.optim) {
        Ok(r) => {
            row.final_infidelity = r.final_infidelity;
            row.iterations = r.iterations_used;
            row.wall_ms = if cfg.record_wall_time { r.wall_time_ms } else { 0.0 };
            row.largest_tensor = r.metrics.largest_tensor;
            row.total_elems = r.metrics.total_elems;
            row.diameter = r.metrics.diameter;
            row.converged_reason = r.converged.to_string();
        }
        Err(e) => log::warn!("cell {} chi={} trial={} failed: {e}", row.geometry, row.chi, row.trial),
    }
    row
}

/// Runs every cell of `cfg` against a single target and returns rows in
/// canonical cell order, independent of the worker count.
pub fn sweep(cfg: &ExperimentConfig) -> Result<SweepTable> {
    cfg.validate()?;
    let target = cfg.target.generate(cfg.n, cfg.p)?;
    sweep_with_target(cfg, &target, cfg.effective_workers())
}

pub fn sweep_with_target(cfg: &ExperimentConfig, target: &TargetState, workers: usize) -> Result<SweepTable> {
    let cells = cells(cfg);
    let rows = run_cells(cfg, target, &cells, workers)?;
    Ok(SweepTable { rows })
}

#[cfg(feature = "parallel")]
fn run_cells(cfg: &ExperimentConfig, target: &TargetState, cells: &[Cell], workers: usize) -> Result<Vec<SweepRow>> {
    use rayon::prelude::*;
    if workers <= 1 {
        return Ok(cells.iter().map(|c| run_cell(cfg, target, c)).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    // `collect` on an indexed parallel iterator preserves input order.
    Ok(pool.install(|| cells.par_iter().map(|c| run_cell(cfg, target, c)).collect()))
}

#[cfg(not(feature = "parallel"))]
fn run_cells(cfg: &ExperimentConfig, target: &TargetState, cells: &[Cell], _workers: usize) -> Result<Vec<SweepRow>> {
    Ok(cells.iter().map(|c| run_cell(cfg, target, c)).collect())
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(128 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{:.16e},{},{:.16e},{},{},{},{}",
                r.geometry,
                r.compact,
                r.n,
                r.chi,
                r.trial,
                r.seed,
                r.final_infidelity,
                r.iterations,
                r.wall_ms,
                r.largest_tensor,
                r.total_elems,
                r.diameter,
                r.converged_reason
            );
        }
        out
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.rows {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        if header.join(",") != CSV_HEADER {
            return Err(Error::Format(format!("unexpected CSV header: {}", header.join(","))));
        }
        let rows = reader.deserialize().collect::<std::result::Result<Vec<SweepRow>, _>>()?;
        Ok(Self { rows })
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }

    /// Writes the CSV to `csv_path` and the JSONL mirror to `jsonl_path`.
    pub fn save(&self, csv_path: &Path, jsonl_path: &Path) -> Result<()> {
        std::fs::File::create(csv_path)?.write_all(self.to_csv().as_bytes())?;
        std::fs::File::create(jsonl_path)?.write_all(self.to_jsonl()?.as_bytes())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Family;
    use crate::harness::config::TargetConfig;
    use crate::optimizer::OptimConfig;

    fn small_cfg() -> ExperimentConfig {
        ExperimentConfig {
            n: 5,
            p: 2,
            target: TargetConfig::FullRandom { seed: 11 },
            geometries: vec![
                GeometryEntry { family: Family::Mps, compact: false },
                GeometryEntry { family: Family::Antenna, compact: true },
            ],
            chi_values: vec![2],
            trials_per_cell: 3,
            success_threshold: 1e-3,
            base_seed: 9,
            optim: OptimConfig { max_iters: 20, ..OptimConfig::default() },
            workers: 1,
            record_wall_time: false,
        }
    }

    #[test]
    fn one_row_per_trial_with_distinct_seeds() {
        let table = sweep(&small_cfg()).unwrap();
        assert_eq!(table.rows.len(), 6);
        let mut seeds: Vec<u64> = table.rows.iter().map(|r| r.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 6);
        assert_eq!(table.rows[0].geometry, "mps");
        assert_eq!(table.rows[3].geometry, "antenna");
        assert!(table.rows.iter().all(|r| r.wall_ms == 0.0));
    }

    #[test]
    fn csv_round_trip() {
        let table = sweep(&small_cfg()).unwrap();
        let csv = table.to_csv();
        assert!(csv.starts_with(CSV_HEADER));
        assert!(!csv.contains('\r'));
        let back = SweepTable::from_csv(&csv).unwrap();
        assert_eq!(back.to_csv(), csv);
        assert_eq!(table.to_jsonl().unwrap().lines().count(), 6);
    }

    #[test]
    fn failed_cells_are_recorded() {
        let cfg = small_cfg();
        // A target of the wrong size makes every trial fail.
        let wrong = TargetState::full_random(4, 2, 0).unwrap();
        let table = sweep_with_target(&cfg, &wrong, 1).unwrap();
        assert_eq!(table.rows.len(), 6);
        assert!(table.rows.iter().all(|r| r.converged_reason == FAILED && r.final_infidelity.is_nan()));
        let back = SweepTable::from_csv(&table.to_csv()).unwrap();
        assert!(back.rows[0].final_infidelity.is_nan());
    }

    #[test]
    fn rejects_foreign_header() {
        assert!(SweepTable::from_csv("a,b\n1,2\n").is_err());
    }
}
