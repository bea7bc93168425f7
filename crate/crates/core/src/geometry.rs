//! Ansatz geometries and the [`Network`] type.
//!
//! Each node tensor stores its physical indices first (ascending site), then
//! its virtual indices (ascending bond id). Constructions:
//!
//! ```text
//! MPS        0 - 1 - 2 - 3 - 4 - 5
//!
//! Antenna    0 - 1 - 2          backbone of ceil(n/2) nodes,
//!            |   |   |          one pendant leaf per backbone node
//!            3   4   5          until every site is placed
//!
//! Balanced   complete ternary tree in breadth-first order,
//!            parent(i) = (i - 1) / 3
//!
//! Star(k)    centre 0 with chains ("beams") of up to k nodes,
//!            filled beam by beam: Star(2), n = 5 is 2-1-0-3-4
//!
//! PEPS(r,c)  r x c grid, node (i, j) = i * c + j, every bond = chi
//!
//! Dense      one node carrying every site
//! ```
//!
//! Tree bonds get `min(p^|A|, p^|B|, chi)` where `A | B` is the site
//! bipartition the bond separates.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, Gaussian};
use crate::tensor::{random_gaussian, Index, Tensor};

pub type NodeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Family {
    Mps,
    Antenna,
    Balanced,
    /// Centre node with beams of length `beam`.
    Star { beam: usize },
    /// `grid = None` picks rows as the largest divisor of n not above sqrt(n).
    Peps { grid: Option<(usize, usize)> },
    Dense,
}

impl Family {
    pub fn is_tree(&self) -> bool {
        !matches!(self, Family::Peps { .. })
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Mps => write!(f, "mps"),
            Family::Antenna => write!(f, "antenna"),
            Family::Balanced => write!(f, "balanced"),
            Family::Star { beam } => write!(f, "star{beam}"),
            Family::Peps { grid: None } => write!(f, "peps"),
            Family::Peps { grid: Some((r, c)) } => write!(f, "peps{r}x{c}"),
            Family::Dense => write!(f, "dense"),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let bad = || Error::InvalidSpec(format!("unknown geometry family '{s}'"));
        match s.as_str() {
            "mps" => return Ok(Family::Mps),
            "antenna" => return Ok(Family::Antenna),
            "balanced" => return Ok(Family::Balanced),
            "dense" => return Ok(Family::Dense),
            "peps" => return Ok(Family::Peps { grid: None }),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("star") {
            let beam: usize = rest.trim_start_matches([':', '_']).parse().map_err(|_| bad())?;
            return Ok(Family::Star { beam });
        }
        if let Some(rest) = s.strip_prefix("peps") {
            let rest = rest.trim_start_matches([':', '_']);
            let (r, c) = rest.split_once('x').ok_or_else(bad)?;
            let r = r.parse().map_err(|_| bad())?;
            let c = c.parse().map_err(|_| bad())?;
            return Ok(Family::Peps { grid: Some((r, c)) });
        }
        Err(bad())
    }
}

impl TryFrom<String> for Family {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Family> for String {
    fn from(f: Family) -> String {
        f.to_string()
    }
}

fn default_p() -> usize {
    2
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GeometrySpec {
    pub family: Family,
    pub n: usize,
    pub chi: usize,
    #[serde(default = "default_p")]
    pub p: usize,
}

impl GeometrySpec {
    pub fn new(family: Family, n: usize, chi: usize) -> Self {
        Self { family, n, chi, p: 2 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidSpec("n must be at least 1".into()));
        }
        if self.chi == 0 {
            return Err(Error::InvalidSpec("chi must be at least 1".into()));
        }
        if self.p < 2 {
            return Err(Error::InvalidSpec("physical dimension must be at least 2".into()));
        }
        match self.family {
            Family::Star { beam: 0 } => Err(Error::InvalidSpec("star beam length must be at least 1".into())),
            Family::Peps { grid: Some((r, c)) } if r * c != self.n || r == 0 => Err(Error::InvalidSpec(
                format!("PEPS grid {r}x{c} does not hold {} sites", self.n),
            )),
            _ => Ok(()),
        }
    }

    /// Grid used for PEPS specs.
    pub fn peps_grid(&self) -> Option<(usize, usize)> {
        match self.family {
            Family::Peps { grid: Some(g) } => Some(g),
            Family::Peps { grid: None } => Some(default_grid(self.n)),
            _ => None,
        }
    }

    /// Largest Schmidt rank any bipartition of `n` sites can need.
    pub fn schmidt_bound(&self) -> usize {
        saturating_pow(self.p, self.n / 2)
    }
}

impl fmt::Display for GeometrySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} n={} chi={} p={}", self.family, self.n, self.chi, self.p)
    }
}

fn default_grid(n: usize) -> (usize, usize) {
    let rows = (1..=n).filter(|r| n.is_multiple_of(*r) && r * r <= n).max().unwrap_or(1);
    (rows, n / rows)
}

pub(crate) fn saturating_pow(base: usize, exp: usize) -> usize {
    base.checked_pow(exp as u32).unwrap_or(usize::MAX)
}

/// Bare connectivity of a geometry: which sites live on which node, and edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    pub node_sites: Vec<Vec<usize>>,
    pub edges: Vec<(NodeId, NodeId)>,
}

impl Layout {
    pub fn of(spec: &GeometrySpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.n;
        let singles = |count: usize| (0..count).map(|s| vec![s]).collect::<Vec<_>>();
        let layout = match spec.family {
            Family::Mps => Layout { node_sites: singles(n), edges: (1..n).map(|i| (i - 1, i)).collect() },
            Family::Antenna => {
                let backbone = n.div_ceil(2);
                let mut edges: Vec<_> = (1..backbone).map(|i| (i - 1, i)).collect();
                edges.extend((0..n - backbone).map(|j| (j, backbone + j)));
                Layout { node_sites: singles(n), edges }
            }
            Family::Balanced => Layout { node_sites: singles(n), edges: (1..n).map(|i| ((i - 1) / 3, i)).collect() },
            Family::Star { beam } => {
                let edges = (1..n).map(|i| if (i - 1) % beam == 0 { (0, i) } else { (i - 1, i) }).collect();
                Layout { node_sites: singles(n), edges }
            }
            Family::Peps { .. } => {
                let (rows, cols) = spec.peps_grid().expect("peps spec has a grid");
                let mut edges = Vec::new();
                for i in 0..rows {
                    for j in 0..cols {
                        let v = i * cols + j;
                        if j + 1 < cols {
                            edges.push((v, v + 1));
                        }
                        if i + 1 < rows {
                            edges.push((v, v + cols));
                        }
                    }
                }
                Layout { node_sites: singles(n), edges }
            }
            Family::Dense => Layout { node_sites: vec![(0..n).collect()], edges: Vec::new() },
        };
        Ok(layout)
    }

    pub fn num_nodes(&self) -> usize {
        self.node_sites.len()
    }

    fn adjacency(&self) -> Vec<Vec<(NodeId, usize)>> {
        let mut adj = vec![Vec::new(); self.num_nodes()];
        for (e, &(a, b)) in self.edges.iter().enumerate() {
            adj[a].push((b, e));
            adj[b].push((a, e));
        }
        adj
    }

    /// Sites reachable from `start` without crossing `cut`, or `None` when the
    /// other end of `cut` is reachable too (the edge lies on a cycle).
    fn side_of_cut(&self, cut: usize, start: NodeId) -> Option<Vec<usize>> {
        let (a, b) = self.edges[cut];
        let other = if start == a { b } else { a };
        let adj = self.adjacency();
        let mut seen = vec![false; self.num_nodes()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        let mut sites = Vec::new();
        while let Some(v) = queue.pop_front() {
            if v == other {
                return None;
            }
            sites.extend(&self.node_sites[v]);
            for &(w, e) in &adj[v] {
                if e != cut && !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        Some(sites)
    }

    /// Sites on the first endpoint's side of tree edge `edge`.
    pub fn cut_sites(&self, edge: usize) -> Result<Vec<usize>> {
        let (a, _) = *self.edges.get(edge).ok_or(Error::NotATreeBond(edge))?;
        self.side_of_cut(edge, a).ok_or(Error::NotATreeBond(edge))
    }
}

/// Bond dimension a tree edge needs for a faithful encoding, capped at `chi`.
pub fn tree_cap(layout: &Layout, edge: usize, chi: usize, p: usize) -> Result<usize> {
    let total: usize = layout.node_sites.iter().map(Vec::len).sum();
    let a = layout.cut_sites(edge)?.len();
    Ok(saturating_pow(p, a).min(saturating_pow(p, total - a)).min(chi))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bond {
    pub a: NodeId,
    pub b: NodeId,
    pub index: Index,
}

impl Bond {
    pub fn other(&self, v: NodeId) -> NodeId {
        if v == self.a {
            self.b
        } else {
            self.a
        }
    }

    pub fn touches(&self, v: NodeId) -> bool {
        self.a == v || self.b == v
    }
}

/// A tensor network over `n` sites of dimension `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    p: usize,
    nodes: BTreeMap<NodeId, Tensor>,
    bonds: Vec<Bond>,
    sites: Vec<(NodeId, Index)>,
}

impl Network {
    /// Assembles a network, checking that every bond sits on exactly its two
    /// nodes and every site on exactly one.
    pub fn from_parts(p: usize, nodes: BTreeMap<NodeId, Tensor>, bonds: Vec<Bond>) -> Result<Self> {
        let mut sites: Vec<Option<(NodeId, Index)>> = Vec::new();
        for (&v, t) in &nodes {
            for ix in t.indices() {
                if let Some(s) = ix.site() {
                    if ix.dim != p {
                        return Err(Error::InvalidSpec(format!("site {s} has dim {} != p", ix.dim)));
                    }
                    if sites.len() <= s {
                        sites.resize(s + 1, None);
                    }
                    if sites[s].is_some() {
                        return Err(Error::InvalidSpec(format!("site {s} appears twice")));
                    }
                    sites[s] = Some((v, *ix));
                } else {
                    let holders: Vec<&Bond> = bonds.iter().filter(|b| b.index.id == ix.id).collect();
                    if holders.len() != 1 || !holders[0].touches(v) {
                        return Err(Error::InvalidSpec(format!("virtual index {} on node {v} is not a listed bond", ix.id)));
                    }
                }
            }
        }
        for b in &bonds {
            for v in [b.a, b.b] {
                let ok = nodes.get(&v).and_then(|t| t.index(b.index.id)).is_some_and(|ix| ix.dim == b.index.dim);
                if !ok {
                    return Err(Error::InvalidSpec(format!("bond {} missing from node {v}", b.index.id)));
                }
            }
        }
        let sites = sites
            .into_iter()
            .enumerate()
            .map(|(s, x)| x.ok_or_else(|| Error::InvalidSpec(format!("site {s} is not placed"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { p, nodes, bonds, sites })
    }

    pub fn phys_dim(&self) -> usize {
        self.p
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn nodes(&self) -> &BTreeMap<NodeId, Tensor> {
        &self.nodes
    }

    pub fn node(&self, v: NodeId) -> Result<&Tensor> {
        self.nodes.get(&v).ok_or(Error::NoSuchNode(v))
    }

    pub fn node_ids(&self) -> Vec<NodeId> {
        self.nodes.keys().copied().collect()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    /// `site -> (node, physical index)`.
    pub fn site_map(&self) -> &[(NodeId, Index)] {
        &self.sites
    }

    pub fn physical_indices(&self) -> Vec<Index> {
        self.sites.iter().map(|&(_, ix)| ix).collect()
    }

    pub fn neighbors(&self, v: NodeId) -> Vec<(NodeId, Index)> {
        self.bonds.iter().filter(|b| b.touches(v)).map(|b| (b.other(v), b.index)).collect()
    }

    pub fn virtual_degree(&self, v: NodeId) -> usize {
        self.bonds.iter().filter(|b| b.touches(v)).count()
    }

    /// Sites carried by node `v`, ascending.
    pub fn sites_of(&self, v: NodeId) -> Vec<usize> {
        self.nodes.get(&v).map(|t| t.indices().iter().filter_map(Index::site).collect()).unwrap_or_default()
    }

    pub fn is_connected(&self) -> bool {
        let Some(&start) = self.nodes.keys().next() else { return true };
        let mut seen = BTreeMap::new();
        let mut queue = VecDeque::from([start]);
        seen.insert(start, ());
        while let Some(v) = queue.pop_front() {
            for (w, _) in self.neighbors(v) {
                if seen.insert(w, ()).is_none() {
                    queue.push_back(w);
                }
            }
        }
        seen.len() == self.nodes.len()
    }

    pub fn is_tree(&self) -> bool {
        self.bonds.len() + 1 == self.nodes.len() && self.is_connected()
    }

    pub fn replace_node(&mut self, v: NodeId, t: Tensor) -> Result<()> {
        let old = self.nodes.get(&v).ok_or(Error::NoSuchNode(v))?;
        if old.indices() != t.indices() {
            return Err(Error::DimensionMismatch(format!("replacement for node {v} changes its indices")));
        }
        self.nodes.insert(v, t);
        Ok(())
    }

    pub fn num_params(&self) -> usize {
        self.nodes.values().map(Tensor::len).sum()
    }

    /// All entries, ascending node id, row-major within each tensor.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for t in self.nodes.values() {
            out.extend_from_slice(t.data());
        }
        out
    }

    pub fn set_params(&mut self, x: &[f64]) -> Result<()> {
        if x.len() != self.num_params() {
            return Err(Error::DimensionMismatch(format!("{} parameters for {} entries", x.len(), self.num_params())));
        }
        let mut offset = 0;
        for t in self.nodes.values_mut() {
            let len = t.len();
            t.data_mut().copy_from_slice(&x[offset..offset + len]);
            offset += len;
        }
        Ok(())
    }

    pub fn scale_node(&mut self, v: NodeId, alpha: f64) -> Result<()> {
        self.nodes.get_mut(&v).ok_or(Error::NoSuchNode(v))?.scale(alpha);
        Ok(())
    }

    pub(crate) fn nodes_mut(&mut self) -> &mut BTreeMap<NodeId, Tensor> {
        &mut self.nodes
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.bonds.iter().map(|b| b.index.dim).collect()
    }
}

/// Builds `spec` with random tensors and rescales them so the state has norm 1.
pub fn build(spec: &GeometrySpec, seed: u64) -> Result<Network> {
    let mut net = build_unnormalized(spec, seed)?;
    let norm = engine::to_dense(&net)?.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::DegenerateState);
    }
    let per_node = norm.powf(-1.0 / net.num_nodes() as f64);
    for t in net.nodes_mut().values_mut() {
        t.scale(per_node);
    }
    Ok(net)
}

/// As [`build`] but without the norm rescale (no dense contraction needed).
pub fn build_unnormalized(spec: &GeometrySpec, seed: u64) -> Result<Network> {
    let layout = Layout::of(spec)?;
    let tree = spec.family.is_tree();
    let mut bonds = Vec::with_capacity(layout.edges.len());
    for (e, &(a, b)) in layout.edges.iter().enumerate() {
        let dim = if tree { tree_cap(&layout, e, spec.chi, spec.p)? } else { spec.chi };
        bonds.push(Bond { a, b, index: Index::bond(e, dim) });
    }
    let mut nodes = BTreeMap::new();
    for (v, sites) in layout.node_sites.iter().enumerate() {
        let mut shape: Vec<Index> = sites.iter().map(|&s| Index::physical(s, spec.p)).collect();
        shape.extend(bonds.iter().filter(|b| b.touches(v)).map(|b| b.index));
        let mut rng = Gaussian::new(derive_seed(seed, &[v as u64]));
        nodes.insert(v, random_gaussian(shape, &mut rng)?);
    }
    Network::from_parts(spec.p, nodes, bonds)
}

/// Longest shortest path between any two nodes, in bond hops.
pub fn diameter(net: &Network) -> Result<usize> {
    let ids = net.node_ids();
    let pos: BTreeMap<NodeId, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let adj: Vec<Vec<usize>> = ids.iter().map(|&v| net.neighbors(v).iter().map(|(w, _)| pos[w]).collect()).collect();
    let mut best = 0;
    for start in 0..ids.len() {
        let mut dist = vec![usize::MAX; ids.len()];
        dist[start] = 0;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        if dist.contains(&usize::MAX) {
            return Err(Error::Disconnected);
        }
        best = best.max(dist.into_iter().max().unwrap_or(0));
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sizes {
    pub largest_tensor: usize,
    pub total_elems: usize,
}

pub fn sizes(net: &Network) -> Sizes {
    Sizes {
        largest_tensor: net.nodes().values().map(Tensor::len).max().unwrap_or(0),
        total_elems: net.num_params(),
    }
}
