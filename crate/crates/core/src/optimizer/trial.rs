use serde::{Deserialize, Serialize};

use super::lbfgs::{minimize, OptimConfig, StopReason};
use crate::compactify::compactify;
use crate::engine::{evaluate, loss_and_grad};
use crate::error::{Error, Result};
use crate::geometry::{build, diameter, sizes, GeometrySpec, Network};
use crate::surrogate::TargetState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeometryMetrics {
    pub diameter: usize,
    pub largest_tensor: usize,
    pub total_elems: usize,
    pub chi: usize,
}

impl GeometryMetrics {
    pub fn of(net: &Network, chi: usize) -> Result<Self> {
        let s = sizes(net);
        Ok(Self { diameter: diameter(net)?, largest_tensor: s.largest_tensor, total_elems: s.total_elems, chi })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryPoint {
    pub loss: f64,
    pub infidelity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub final_infidelity: f64,
    pub iterations_used: usize,
    pub wall_time_ms: f64,
    pub converged: StopReason,
    /// Start point plus one entry per accepted step.
    pub history: Vec<HistoryPoint>,
    pub seed: u64,
    pub metrics: GeometryMetrics,
    pub diagnostic: Option<String>,
}

impl TrialResult {
    /// History as `iteration,loss,infidelity` CSV.
    pub fn history_csv(&self) -> String {
        let mut out = String::from("iteration,loss,infidelity\n");
        for (i, h) in self.history.iter().enumerate() {
            out.push_str(&format!("{i},{:.16e},{:.16e}\n", h.loss, h.infidelity));
        }
        out
    }
}

/// Infidelity recovered from a loss value: `F = exp(1 - sqrt(L))` on `F ≤ 1`.
fn infidelity_from_loss(loss: f64) -> f64 {
    1.0 - (1.0 - loss.sqrt()).exp()
}

#[cfg(not(target_arch = "wasm32"))]
struct Stopwatch(std::time::Instant);

#[cfg(not(target_arch = "wasm32"))]
impl Stopwatch {
    fn start() -> Self {
        Self(std::time::Instant::now())
    }
    fn elapsed_ms(&self) -> f64 {
        self.0.elapsed().as_secs_f64() * 1e3
    }
}

#[cfg(target_arch = "wasm32")]
struct Stopwatch;

#[cfg(target_arch = "wasm32")]
impl Stopwatch {
    fn start() -> Self {
        Self
    }
    fn elapsed_ms(&self) -> f64 {
        0.0
    }
}

/// The initial network of a trial: built, optionally compacted, and with its
/// overall sign chosen so that the starting overlap with the target is
/// non-negative.
pub fn initial_network(target: &TargetState, spec: &GeometrySpec, compact: bool, seed: u64) -> Result<Network> {
    if target.n() != spec.n || target.p() != spec.p {
        return Err(Error::DimensionMismatch(format!(
            "target has n={} p={}, spec asks for n={} p={}",
            target.n(),
            target.p(),
            spec.n,
            spec.p
        )));
    }
    let mut net = build(spec, seed)?;
    if compact {
        net = compactify(&net, spec.chi)?;
    }
    // The loss is flat wherever F <= 0, so start on the positive side.
    if evaluate(target, &net)?.fidelity < 0.0 {
        let first = net.node_ids()[0];
        net.scale_node(first, -1.0)?;
    }
    Ok(net)
}

/// Trains one network against `target` and reports the outcome.
pub fn run_trial(
    target: &TargetState,
    spec: &GeometrySpec,
    compact: bool,
    seed: u64,
    cfg: &OptimConfig,
) -> Result<TrialResult> {
    cfg.validate()?;
    let clock = Stopwatch::start();
    let mut net = initial_network(target, spec, compact, seed)?;
    let metrics = GeometryMetrics::of(&net, spec.chi)?;

    let mut work = net.clone();
    let objective = |x: &[f64]| -> (f64, Vec<f64>) {
        let eval = work.set_params(x).and_then(|_| loss_and_grad(target, &work));
        match eval {
            Ok(r) => {
                let mut g = Vec::with_capacity(x.len());
                for t in r.grads.values() {
                    g.extend_from_slice(t.data());
                }
                (r.loss, g)
            }
            Err(_) => (f64::NAN, vec![f64::NAN; x.len()]),
        }
    };
    let result = minimize(objective, net.params(), cfg);

    net.set_params(&result.x)?;
    let final_infidelity = evaluate(target, &net)?.infidelity;
    let mut history: Vec<HistoryPoint> =
        result.trace.iter().map(|&loss| HistoryPoint { loss, infidelity: infidelity_from_loss(loss) }).collect();
    if let Some(last) = history.last_mut() {
        last.infidelity = final_infidelity;
    }
    Ok(TrialResult {
        final_infidelity,
        iterations_used: result.iterations,
        wall_time_ms: clock.elapsed_ms(),
        converged: result.reason,
        history,
        seed,
        metrics,
        diagnostic: result.diagnostic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Family;

    #[test]
    fn loss_inversion() {
        for f in [1.0, 0.5, 1e-3, 0.999_999] {
            let loss = crate::engine::loss_of_fidelity(f);
            assert!((infidelity_from_loss(loss) - (1.0 - f)).abs() < 1e-12);
        }
    }

    #[test]
    fn product_target_is_learned_by_chi_one_mps() {
        let spec = GeometrySpec::new(Family::Mps, 6, 1);
        let target = TargetState::hidden_tn(&spec, 42).unwrap();
        let r = run_trial(&target, &spec, false, 7, &OptimConfig::default()).unwrap();
        assert!(r.final_infidelity <= 1e-8, "I = {}", r.final_infidelity);
        assert_eq!(r.history.len(), r.iterations_used + 1);
    }

    #[test]
    fn trials_are_deterministic() {
        let spec = GeometrySpec::new(Family::Antenna, 6, 4);
        let target = TargetState::full_random(6, 2, 1).unwrap();
        let cfg = OptimConfig { max_iters: 50, ..OptimConfig::default() };
        let a = run_trial(&target, &spec, false, 3, &cfg).unwrap();
        let b = run_trial(&target, &spec, false, 3, &cfg).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.final_infidelity.to_bits(), b.final_infidelity.to_bits());
    }

    #[test]
    fn mismatched_target_is_rejected() {
        let target = TargetState::full_random(5, 2, 1).unwrap();
        let spec = GeometrySpec::new(Family::Mps, 6, 2);
        assert!(run_trial(&target, &spec, false, 0, &OptimConfig::default()).is_err());
    }

    #[test]
    fn starting_overlap_is_non_negative() {
        let target = TargetState::full_random(6, 2, 2).unwrap();
        for seed in 0..10 {
            let spec = GeometrySpec::new(Family::Balanced, 6, 2);
            let net = initial_network(&target, &spec, false, seed).unwrap();
            assert!(evaluate(&target, &net).unwrap().fidelity >= 0.0);
        }
    }
}
