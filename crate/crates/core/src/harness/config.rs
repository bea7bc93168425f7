//! Experiment configuration (JSON).
//!
//! ```json
//! {
//!   "n": 10,
//!   "target": { "kind": "full_random", "seed": 7 },
//!   "geometries": [ { "family": "mps" }, { "family": "balanced", "compact": true } ],
//!   "chi_values": [4, 8, 16, 32],
//!   "trials_per_cell": 10,
//!   "base_seed": 1,
//!   "optim": { "max_iters": 1000 },
//!   "workers": 4
//! }
//! ```
//!
//! A hidden-network target is `{ "kind": "hidden_tn", "spec": {"family": "mps", "n": 10, "chi": 4}, "seed": 7 }`.
//! Omitted fields take the defaults in [`ExperimentConfig`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Family, GeometrySpec};
use crate::optimizer::OptimConfig;
use crate::surrogate::TargetState;

pub const WORKERS_ENV: &str = "TNGEO_WORKERS";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetConfig {
    FullRandom { seed: u64 },
    HiddenTn { spec: GeometrySpec, seed: u64 },
}

impl TargetConfig {
    pub fn generate(&self, n: usize, p: usize) -> Result<TargetState> {
        match self {
            TargetConfig::FullRandom { seed } => TargetState::full_random(n, p, *seed),
            TargetConfig::HiddenTn { spec, seed } => {
                if spec.n != n || spec.p != p {
                    return Err(Error::Config(format!("target spec ({spec}) does not match n={n} p={p}")));
                }
                TargetState::hidden_tn(spec, *seed)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeometryEntry {
    pub family: Family,
    #[serde(default)]
    pub compact: bool,
}

fn default_p() -> usize {
    2
}
fn default_threshold() -> f64 {
    1e-3
}
fn default_workers() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    #[serde(default = "default_p")]
    pub p: usize,
    pub target: TargetConfig,
    pub geometries: Vec<GeometryEntry>,
    pub chi_values: Vec<usize>,
    pub trials_per_cell: usize,
    #[serde(default = "default_threshold")]
    pub success_threshold: f64,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub optim: OptimConfig,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Write measured wall times into the results. Off by default so that
    /// repeated sweeps produce byte-identical files.
    #[serde(default)]
    pub record_wall_time: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials_per_cell == 0 {
            return Err(Error::Config("trials_per_cell must be at least 1".into()));
        }
        if self.geometries.is_empty() || self.chi_values.is_empty() {
            return Err(Error::Config("need at least one geometry and one chi value".into()));
        }
        if !self.chi_values.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config("chi_values must be strictly ascending".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if !(self.success_threshold > 0.0) {
            return Err(Error::Config("success_threshold must be positive".into()));
        }
        for g in &self.geometries {
            if g.compact && !g.family.is_tree() {
                return Err(Error::Config(format!("{} has loops and cannot be compacted", g.family)));
            }
            for &chi in &self.chi_values {
                GeometrySpec { family: g.family, n: self.n, chi, p: self.p }.validate()?;
            }
        }
        self.optim.validate()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("malformed config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Worker count after applying the `TNGEO_WORKERS` override.
    pub fn effective_workers(&self) -> usize {
        std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse().ok()).filter(|&w| w > 0).unwrap_or(self.workers)
    }
}
