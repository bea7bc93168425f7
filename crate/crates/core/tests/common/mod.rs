#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use tngeo::engine::evaluate;
use tngeo::geometry::NodeId;
use tngeo::rng::Gaussian;
use tngeo::tensor::{random_gaussian, Index};
use tngeo::{Family, Network, TargetState, Tensor};

pub const TREE_FAMILIES: [Family; 6] = [
    Family::Mps,
    Family::Antenna,
    Family::Balanced,
    Family::Star { beam: 1 },
    Family::Star { beam: 2 },
    Family::Dense,
];

pub const ALL_FAMILIES: [Family; 7] = [
    Family::Mps,
    Family::Antenna,
    Family::Balanced,
    Family::Star { beam: 1 },
    Family::Star { beam: 2 },
    Family::Peps { grid: None },
    Family::Dense,
];

/// Random tensor over bond-kind indices with the given (id, dim) pairs.
pub fn random_tensor(axes: &[(usize, usize)], seed: u64) -> Tensor {
    let shape = axes.iter().map(|&(id, dim)| Index::bond(id, dim)).collect();
    random_gaussian(shape, &mut Gaussian::new(seed)).unwrap()
}

/// Sites on the side of `bond` that contains `from`, found by a breadth-first
/// walk that never crosses `bond`.
pub fn sites_beyond(net: &Network, bond: usize, from: NodeId) -> BTreeSet<usize> {
    let cut = net.bonds()[bond].index.id;
    let mut seen = BTreeSet::from([from]);
    let mut queue = VecDeque::from([from]);
    while let Some(v) = queue.pop_front() {
        for (w, idx) in net.neighbors(v) {
            if idx.id != cut && seen.insert(w) {
                queue.push_back(w);
            }
        }
    }
    seen.iter().flat_map(|&v| net.sites_of(v)).collect()
}

/// Central finite-difference gradient of the loss with respect to all parameters.
pub fn finite_difference(target: &TargetState, net: &Network, h: f64) -> Vec<f64> {
    let x0 = net.params();
    let mut work = net.clone();
    let mut loss_at = |x: &[f64]| {
        work.set_params(x).unwrap();
        evaluate(target, &work).unwrap().loss
    };
    let mut g = Vec::with_capacity(x0.len());
    let mut x = x0.clone();
    for i in 0..x0.len() {
        x[i] = x0[i] + h;
        let up = loss_at(&x);
        x[i] = x0[i] - h;
        let down = loss_at(&x);
        x[i] = x0[i];
        g.push((up - down) / (2.0 * h));
    }
    g
}

/// Largest violation of `|a - b| <= max(rel * |b|, floor)`, as a multiple of the allowance.
pub fn worst_mismatch(analytic: &[f64], reference: &[f64], rel: f64, floor: f64) -> f64 {
    analytic
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b).abs() / (rel * b.abs()).max(floor))
        .fold(0.0, f64::max)
}

pub fn is_monotone(trace: &[f64], slack: f64) -> bool {
    trace.windows(2).all(|w| w[1] <= w[0] + slack)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    tngeo::linalg::dot2(a, b)
}

/// Central finite differences with step `h`, evaluated without cancellation.
///
/// The network state is affine in any single entry, so along entry `i` it
/// is exactly `ψ0 + t·D` with `D` the network contracted with that entry's
/// basis tensor. The quotient `(L(+h) - L(-h)) / 2h` is then rewritten with
/// `ln_1p` so rounding in `ψ0` cancels instead of dominating at small `h`.
pub fn finite_difference_stable(target: &TargetState, net: &Network, h: f64) -> Vec<f64> {
    let s = target.state();
    let order = s.ids();
    let psi0 = tngeo::engine::to_dense(net).unwrap().permute(&order).unwrap();
    let a = dot(s.data(), psi0.data());
    let c = dot(psi0.data(), psi0.data());
    let mut g = Vec::new();
    for (&v, t) in net.nodes() {
        for j in 0..t.len() {
            let mut basis = Tensor::zeros(t.indices().to_vec()).unwrap();
            basis.data_mut()[j] = 1.0;
            let mut probe = net.clone();
            probe.replace_node(v, basis).unwrap();
            let d = tngeo::engine::to_dense(&probe).unwrap().permute(&order).unwrap();
            let b = dot(s.data(), d.data());
            let cd = dot(psi0.data(), d.data());
            let e = dot(d.data(), d.data());
            // u = ln F at t = ±h.
            let u = |t: f64| (a + t * b).ln() - 0.5 * (c + 2.0 * t * cd + t * t * e).ln();
            let du = (2.0 * h * b / (a - h * b)).ln_1p() - 0.5 * (4.0 * h * cd / (c - 2.0 * h * cd + h * h * e)).ln_1p();
            g.push(du * (u(h) + u(-h) - 2.0) / (2.0 * h));
        }
    }
    g
}
