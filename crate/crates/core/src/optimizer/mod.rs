//! L-BFGS minimization and single-trial orchestration.

mod lbfgs;
mod trial;

pub use lbfgs::{minimize, Minimization, OptimConfig, StopReason};
pub use trial::{initial_network, run_trial, GeometryMetrics, HistoryPoint, TrialResult};
