use serde::Serialize;
use tngeo::compactify::compactify;
use tngeo::geometry::{build, diameter, sizes};
use tngeo::optimizer::{run_trial, OptimConfig};
use tngeo::tensor::{bipartition_singular_values, DEFAULT_RANK_TOL};
use tngeo::{Family, GeometrySpec, Network, TargetState};

/// Keeps dense states small enough for an interactive page.
pub const MAX_SITES: usize = 12;

type Res<T> = Result<T, String>;

fn spec(family: &str, n: usize, chi: usize) -> Res<GeometrySpec> {
    let family: Family = family.parse().map_err(|e: tngeo::Error| e.to_string())?;
    if n > MAX_SITES {
        return Err(format!("the demo is limited to n <= {MAX_SITES}"));
    }
    let spec = GeometrySpec::new(family, n, chi);
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

#[derive(Serialize)]
struct NodeView {
    id: usize,
    sites: Vec<usize>,
    elems: usize,
}

#[derive(Serialize)]
struct BondView {
    a: usize,
    b: usize,
    dim: usize,
}

#[derive(Serialize)]
struct NetworkView {
    nodes: Vec<NodeView>,
    bonds: Vec<BondView>,
    diameter: usize,
    largest_tensor: usize,
    total_elems: usize,
}

impl NetworkView {
    fn of(net: &Network) -> Res<Self> {
        let s = sizes(net);
        Ok(Self {
            nodes: net.nodes().iter().map(|(&id, t)| NodeView { id, sites: net.sites_of(id), elems: t.len() }).collect(),
            bonds: net.bonds().iter().map(|b| BondView { a: b.a, b: b.b, dim: b.index.dim }).collect(),
            diameter: diameter(net).map_err(|e| e.to_string())?,
            largest_tensor: s.largest_tensor,
            total_elems: s.total_elems,
        })
    }
}

#[derive(Serialize)]
struct InspectView {
    spec: String,
    regular: NetworkView,
    compacted: Option<NetworkView>,
}

pub fn inspect(family: &str, n: usize, chi: usize) -> Res<String> {
    let spec = spec(family, n, chi)?;
    let net = build(&spec, 0).map_err(|e| e.to_string())?;
    let compacted = if net.is_tree() {
        Some(NetworkView::of(&compactify(&net, chi).map_err(|e| e.to_string())?)?)
    } else {
        None
    };
    let view = InspectView { spec: spec.to_string(), regular: NetworkView::of(&net)?, compacted };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

pub struct TrainRequest {
    pub family: String,
    pub n: usize,
    pub chi: usize,
    pub compact: bool,
    /// `random`, or the family of a hidden network.
    pub target: String,
    pub target_chi: usize,
    pub seed: u64,
    pub max_iters: usize,
}

/// Target seed for a page seed. Offset from the network seed so that a
/// hidden target of the trained geometry is not the starting point itself.
fn target_seed(seed: u64) -> u64 {
    seed.wrapping_add(1)
}

fn target(kind: &str, n: usize, chi: usize, seed: u64) -> Res<TargetState> {
    let seed = target_seed(seed);
    if kind == "random" {
        if n > MAX_SITES {
            return Err(format!("the demo is limited to n <= {MAX_SITES}"));
        }
        TargetState::full_random(n, 2, seed).map_err(|e| e.to_string())
    } else {
        TargetState::hidden_tn(&spec(kind, n, chi)?, seed).map_err(|e| e.to_string())
    }
}

#[derive(Serialize)]
struct TrainView {
    final_infidelity: f64,
    iterations: usize,
    stop_reason: String,
    largest_tensor: usize,
    total_elems: usize,
    diameter: usize,
    infidelity: Vec<f64>,
}

pub fn train(req: &TrainRequest) -> Res<String> {
    let spec = spec(&req.family, req.n, req.chi)?;
    if req.compact && !spec.family.is_tree() {
        return Err(format!("{} has loops and cannot be compacted", spec.family));
    }
    let target = target(&req.target, req.n, req.target_chi, req.seed)?;
    let cfg = OptimConfig { max_iters: req.max_iters, ..OptimConfig::default() };
    let r = run_trial(&target, &spec, req.compact, req.seed, &cfg).map_err(|e| e.to_string())?;
    let view = TrainView {
        final_infidelity: r.final_infidelity,
        iterations: r.iterations_used,
        stop_reason: r.converged.to_string(),
        largest_tensor: r.metrics.largest_tensor,
        total_elems: r.metrics.total_elems,
        diameter: r.metrics.diameter,
        infidelity: r.history.iter().map(|h| h.infidelity).collect(),
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct CutView {
    left_sites: usize,
    rank: usize,
    singular_values: Vec<f64>,
}

/// For each cut `0..k | k..n` of a target (`random` or a hidden network of
/// the named family), the numerical rank and singular values. Uses the same
/// target as [`train`] for the same seed.
pub fn rank_profile(kind: &str, n: usize, chi: usize, seed: u64) -> Res<String> {
    let t = target(kind, n, chi, seed)?;
    let mut cuts = Vec::new();
    for k in 1..n {
        let left: Vec<u64> = (0..k as u64).collect();
        let sv = bipartition_singular_values(t.state(), &left).map_err(|e| e.to_string())?;
        let top = sv.first().copied().unwrap_or(0.0);
        let rank = sv.iter().filter(|&&s| s > DEFAULT_RANK_TOL * top).count();
        cuts.push(CutView { left_sites: k, rank, singular_values: sv });
    }
    serde_json::to_string(&cuts).map_err(|e| e.to_string())
}
