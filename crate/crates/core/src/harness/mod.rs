//! Experiment sweeps over (geometry, chi, trial) cells, their aggregation,
//! and the command-line front end.

#[cfg(feature = "cli")]
pub mod cli;
pub mod config;
pub mod report;
pub mod sweep;

pub use config::{ExperimentConfig, GeometryEntry, TargetConfig, WORKERS_ENV};
pub use report::{lower_median, report, summary_csv, summary_table, GroupSummary};
pub use sweep::{cell_seed, cells, sweep, sweep_with_target, Cell, SweepRow, SweepTable, CSV_HEADER};
