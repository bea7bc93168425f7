//! Contraction, fidelity, loss and exact gradients.
//!
//! The model state is `ψ = contract(network)`. Against a unit-norm target `s`
//! the fidelity is the signed overlap `F = ⟨s, ψ⟩ / ‖ψ‖`, the infidelity is
//! `1 - F` and the training loss is `(ln F - 1)²`.
//!
//! Gradients come from environment tensors: the environment of node `i`
//! against a vector `w` is `w` contracted with every node except `i`, so
//! `⟨env_i(w), T_i⟩ = ⟨w, ψ⟩`. Since `F` is linear in `s` and homogeneous of
//! degree zero in `ψ`, one environment pass with
//! `w = s/ν - (F/ν²)·ψ` yields `dF/dT_i` for every node at once.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::geometry::{Network, NodeId};
use crate::surrogate::TargetState;
use crate::tensor::{contract, contracted_len, inner, Index, Tensor};

/// Largest dense state (in entries) any operation will materialize.
pub const DEFAULT_MAX_DENSE: usize = 1 << 24;

/// Fidelity floor inside the logarithm.
pub const FIDELITY_FLOOR: f64 = 1e-300;

/// Pairwise contraction schedule. Each step `(keep, absorb)` contracts the
/// current tensor of `absorb` into that of `keep`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContractionPlan {
    pub steps: Vec<(NodeId, NodeId)>,
    /// Largest tensor alive at any point, inputs included.
    pub peak_elems: u128,
}

fn volume(ixs: &[Index]) -> u128 {
    ixs.iter().map(|i| i.dim as u128).product()
}

/// Index set of `contract(a, b)`.
fn merged_indices(a: &[Index], b: &[Index]) -> Vec<Index> {
    let mut out: Vec<Index> = a.iter().filter(|i| !b.iter().any(|j| j.id == i.id)).copied().collect();
    out.extend(b.iter().filter(|j| !a.iter().any(|i| i.id == j.id)));
    out
}

/// Trees: eliminate the smallest-id leaf into its neighbour until only the
/// largest-id node is left. Loopy networks: greedily contract the adjacent
/// pair with the smallest result, ties broken by the smallest id pair.
pub fn plan(net: &Network) -> Result<ContractionPlan> {
    if !net.is_connected() {
        return Err(Error::Disconnected);
    }
    let mut shapes: BTreeMap<NodeId, Vec<Index>> =
        net.nodes().iter().map(|(&v, t)| (v, t.indices().to_vec())).collect();
    let mut adj: BTreeMap<NodeId, BTreeSet<NodeId>> = net.node_ids().into_iter().map(|v| (v, BTreeSet::new())).collect();
    for b in net.bonds() {
        adj.get_mut(&b.a).unwrap().insert(b.b);
        adj.get_mut(&b.b).unwrap().insert(b.a);
    }
    let mut peak = shapes.values().map(|s| volume(s)).max().unwrap_or(1);
    let mut steps = Vec::new();
    let tree = net.is_tree();
    let root = net.node_ids().into_iter().max();

    while shapes.len() > 1 {
        let (keep, absorb) = if tree {
            let leaf = *adj
                .iter()
                .find(|(&v, nb)| Some(v) != root && nb.len() == 1)
                .map(|(v, _)| v)
                .expect("a tree with two or more nodes has a non-root leaf");
            (*adj[&leaf].iter().next().unwrap(), leaf)
        } else {
            let mut best: Option<(u128, NodeId, NodeId)> = None;
            for (&a, nb) in &adj {
                for &b in nb.iter().filter(|&&b| b > a) {
                    let cost = contracted_len(&shapes[&a], &shapes[&b]);
                    if best.is_none_or(|(c, _, _)| cost < c) {
                        best = Some((cost, a, b));
                    }
                }
            }
            let (_, a, b) = best.expect("connected network has an adjacent pair");
            (a, b)
        };
        let merged = merged_indices(&shapes[&keep], &shapes[&absorb]);
        peak = peak.max(volume(&merged));
        shapes.remove(&absorb);
        shapes.insert(keep, merged);
        let absorbed_nb = adj.remove(&absorb).unwrap();
        for w in absorbed_nb {
            let set = adj.get_mut(&w).unwrap();
            set.remove(&absorb);
            if w != keep {
                set.insert(keep);
                adj.get_mut(&keep).unwrap().insert(w);
            }
        }
        steps.push((keep, absorb));
    }
    Ok(ContractionPlan { steps, peak_elems: peak })
}

/// Runs `plan` and returns the dense state with physical indices in site order.
pub fn execute(net: &Network, plan: &ContractionPlan) -> Result<Tensor> {
    let mut live: BTreeMap<NodeId, Tensor> = net.nodes().clone();
    for &(keep, absorb) in &plan.steps {
        let b = live.remove(&absorb).ok_or(Error::NoSuchNode(absorb))?;
        let a = live.get(&keep).ok_or(Error::NoSuchNode(keep))?;
        let c = contract(a, &b)?;
        live.insert(keep, c);
    }
    if live.len() != 1 {
        return Err(Error::Disconnected);
    }
    let t = live.into_values().next().unwrap();
    let order: Vec<u64> = net.physical_indices().iter().map(|i| i.id).collect();
    t.permute(&order)
}

pub fn check_dense_limit(net: &Network, limit: usize) -> Result<()> {
    let elems = (net.phys_dim() as u128).saturating_pow(net.n_sites() as u32);
    if elems > limit as u128 {
        return Err(Error::TargetTooLarge { elems, limit });
    }
    Ok(())
}

pub fn to_dense(net: &Network) -> Result<Tensor> {
    to_dense_limited(net, DEFAULT_MAX_DENSE)
}

pub fn to_dense_limited(net: &Network, limit: usize) -> Result<Tensor> {
    check_dense_limit(net, limit)?;
    execute(net, &plan(net)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossReport {
    pub fidelity: f64,
    pub infidelity: f64,
    pub loss: f64,
    /// `dL/dT_i`, laid out like each node tensor. Empty from [`evaluate`].
    pub grads: BTreeMap<NodeId, Tensor>,
}

pub fn loss_of_fidelity(f: f64) -> f64 {
    (f.max(FIDELITY_FLOOR).ln() - 1.0).powi(2)
}

/// `dL/dF`; zero where the floor is active.
pub fn dloss_dfidelity(f: f64) -> f64 {
    if f > FIDELITY_FLOOR {
        2.0 * (f.ln() - 1.0) / f
    } else {
        0.0
    }
}

fn check_compatible(target: &TargetState, net: &Network) -> Result<()> {
    if target.n() != net.n_sites() || target.p() != net.phys_dim() {
        return Err(Error::DimensionMismatch(format!(
            "target has n={} p={}, network has n={} p={}",
            target.n(),
            target.p(),
            net.n_sites(),
            net.phys_dim()
        )));
    }
    Ok(())
}

/// Fidelity, infidelity and loss of `net` against `target`.
pub fn evaluate(target: &TargetState, net: &Network) -> Result<LossReport> {
    check_compatible(target, net)?;
    let psi = to_dense(net)?;
    let (f, _) = fidelity_of(target.state(), &psi)?;
    Ok(LossReport { fidelity: f, infidelity: 1.0 - f, loss: loss_of_fidelity(f), grads: BTreeMap::new() })
}

/// `(F, ‖ψ‖)` for a unit-norm target.
fn fidelity_of(s: &Tensor, psi: &Tensor) -> Result<(f64, f64)> {
    let nu = psi.norm();
    if nu == 0.0 || !nu.is_finite() {
        return Err(Error::DegenerateState);
    }
    Ok((inner(s, psi)? / nu, nu))
}

/// Value and gradient of the loss.
pub fn loss_and_grad(target: &TargetState, net: &Network) -> Result<LossReport> {
    check_compatible(target, net)?;
    let s = target.state();
    let psi = to_dense(net)?;
    let (f, nu) = fidelity_of(s, &psi)?;
    let dl_df = dloss_dfidelity(f);

    // w = s/ν - (F/ν²) ψ, laid out like the target.
    let psi = psi.permute(&s.ids())?;
    let data: Vec<f64> = s.data().iter().zip(psi.data()).map(|(a, b)| a / nu - f / (nu * nu) * b).collect();
    let w = Tensor::new(s.indices().to_vec(), data)?;

    let mut grads = environments(&w, net)?;
    for g in grads.values_mut() {
        g.scale(dl_df);
    }
    Ok(LossReport { fidelity: f, infidelity: 1.0 - f, loss: loss_of_fidelity(f), grads })
}

fn check_vec(vec: &Tensor, net: &Network) -> Result<()> {
    let phys = net.physical_indices();
    let ok = vec.rank() == phys.len() && phys.iter().all(|p| vec.index(p.id).is_some_and(|i| i.dim == p.dim));
    if ok {
        Ok(())
    } else {
        Err(Error::DimensionMismatch("vector must carry exactly the network's physical indices".into()))
    }
}

/// `vec` contracted with every node tensor except `node`, laid out like `node`.
///
/// Nodes are absorbed greedily, each time picking the one that keeps the
/// running tensor smallest (ties by node id).
pub fn environment(vec: &Tensor, net: &Network, node: NodeId) -> Result<Tensor> {
    let target = net.node(node)?;
    check_vec(vec, net)?;
    let mut remaining: BTreeSet<NodeId> = net.node_ids().into_iter().filter(|&v| v != node).collect();
    let mut cur = vec.clone();
    while !remaining.is_empty() {
        let next = *remaining
            .iter()
            .min_by_key(|&&v| contracted_len(cur.indices(), net.nodes()[&v].indices()))
            .unwrap();
        remaining.remove(&next);
        cur = contract(&cur, &net.nodes()[&next])?;
    }
    cur.permute(&target.ids())
}

/// Environments of every node against `vec`.
///
/// Trees use one upward pass (subtree tensors) and one downward pass
/// (complements) from a fixed root. Loopy networks fall back to
/// [`environment`] per node.
pub fn environments(vec: &Tensor, net: &Network) -> Result<BTreeMap<NodeId, Tensor>> {
    check_vec(vec, net)?;
    if !net.is_tree() {
        return net.node_ids().into_iter().map(|v| environment(vec, net, v).map(|e| (v, e))).collect();
    }
    let root = *net.nodes().keys().next_back().unwrap();
    let mut parent: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    let mut children: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    let mut order = vec![root];
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        let mut kids: Vec<NodeId> = net.neighbors(v).into_iter().map(|(w, _)| w).filter(|w| parent.get(&v) != Some(w)).collect();
        kids.sort_unstable();
        for &c in &kids {
            parent.insert(c, v);
            order.push(c);
            queue.push_back(c);
        }
        children.insert(v, kids);
    }

    // Upward pass: subtree tensor of v keeps its subtree's sites and the bond to its parent.
    let mut subtree: BTreeMap<NodeId, Tensor> = BTreeMap::new();
    for &v in order.iter().rev() {
        let mut acc = net.nodes()[&v].clone();
        for c in &children[&v] {
            acc = contract(&acc, &subtree[c])?;
        }
        subtree.insert(v, acc);
    }

    // Downward pass: `above[v]` is vec contracted with everything outside v's subtree.
    let mut above: BTreeMap<NodeId, Tensor> = BTreeMap::from([(root, vec.clone())]);
    let mut envs = BTreeMap::new();
    for &v in &order {
        let top = above.remove(&v).expect("parent processed before child");
        let kids = &children[&v];
        let mut env = top.clone();
        for c in kids {
            env = contract(&env, &subtree[c])?;
        }
        envs.insert(v, env.permute(&net.nodes()[&v].ids())?);
        if kids.is_empty() {
            continue;
        }
        // Siblings first: each swaps sites for one bond, so the running tensor
        // never outgrows `top` before the node itself is absorbed.
        for &c in kids {
            let mut acc = top.clone();
            for &sib in kids.iter().filter(|&&s| s != c) {
                acc = contract(&acc, &subtree[&sib])?;
            }
            above.insert(c, contract(&acc, &net.nodes()[&v])?);
        }
    }
    Ok(envs)
}
