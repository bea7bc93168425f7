//! Lossless "compact" variants of tree networks.
//!
//! A leaf whose only bond is smaller than `chi` carries no more information
//! than its neighbour can absorb, so it is contracted into that neighbour.
//! Repeating this collapses every branch up to the first bond of size `chi`;
//! if no bond reaches `chi` the whole tree becomes one dense tensor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{sizes, Network, NodeId};
use crate::tensor::{contract, Tensor};

/// Physical indices by site, then virtual indices by id.
fn canonical(t: Tensor) -> Result<Tensor> {
    let mut ixs = t.indices().to_vec();
    ixs.sort_by_key(|i| (!i.is_physical(), i.id));
    let order: Vec<u64> = ixs.iter().map(|i| i.id).collect();
    t.permute(&order)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum LeafOrder {
    Ascending,
    #[cfg_attr(not(test), allow(dead_code))]
    Descending,
}

pub fn compactify(net: &Network, chi: usize) -> Result<Network> {
    compactify_ordered(net, chi, LeafOrder::Ascending)
}

fn compactify_ordered(net: &Network, chi: usize, order: LeafOrder) -> Result<Network> {
    if !net.is_tree() {
        return Err(Error::NotATree);
    }
    let mut nodes = net.nodes().clone();
    let mut bonds = net.bonds().to_vec();
    loop {
        let degree = |v: NodeId| bonds.iter().filter(|b| b.touches(v)).count();
        let mut candidates = nodes.keys().copied().filter(|&v| {
            degree(v) == 1 && bonds.iter().find(|b| b.touches(v)).is_some_and(|b| b.index.dim < chi)
        });
        let leaf = match order {
            LeafOrder::Ascending => candidates.next(),
            LeafOrder::Descending => candidates.next_back(),
        };
        let Some(leaf) = leaf else { break };
        let pos = bonds.iter().position(|b| b.touches(leaf)).unwrap();
        let bond = bonds.remove(pos);
        let host = bond.other(leaf);
        let leaf_t = nodes.remove(&leaf).unwrap();
        let merged = canonical(contract(&nodes[&host], &leaf_t)?)?;
        nodes.insert(host, merged);
    }
    Network::from_parts(net.phys_dim(), nodes, bonds)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompactionSummary {
    pub nodes_removed: usize,
    pub total_elems_before: usize,
    pub total_elems_after: usize,
}

pub fn compaction_summary(before: &Network, after: &Network) -> CompactionSummary {
    CompactionSummary {
        nodes_removed: before.num_nodes() - after.num_nodes(),
        total_elems_before: sizes(before).total_elems,
        total_elems_after: sizes(after).total_elems,
    }
}
