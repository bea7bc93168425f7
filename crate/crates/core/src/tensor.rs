//! Dense real tensors whose axes carry labeled indices.
//!
//! Axes are identified by [`Index::id`], never by position: two tensors
//! contract over exactly the ids they share. Data is row-major with respect to
//! the tensor's own index order.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::Gaussian;

/// Offset separating virtual-bond ids from physical-site ids.
pub const VIRTUAL_BASE: u64 = 1 << 32;

/// Default relative cutoff used by [`numerical_rank`].
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IndexKind {
    Physical { site: usize },
    Virtual { bond: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Index {
    pub id: u64,
    pub dim: usize,
    pub kind: IndexKind,
}

impl Index {
    /// The physical leg of `site`. Its id is the site number, so every
    /// network and target over the same sites agree on physical ids.
    pub fn physical(site: usize, dim: usize) -> Self {
        assert!(dim >= 1);
        Self { id: site as u64, dim, kind: IndexKind::Physical { site } }
    }

    pub fn bond(bond: usize, dim: usize) -> Self {
        assert!(dim >= 1);
        Self { id: VIRTUAL_BASE + bond as u64, dim, kind: IndexKind::Virtual { bond } }
    }

    pub fn is_physical(&self) -> bool {
        matches!(self.kind, IndexKind::Physical { .. })
    }

    pub fn site(&self) -> Option<usize> {
        match self.kind {
            IndexKind::Physical { site } => Some(site),
            IndexKind::Virtual { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    indices: Vec<Index>,
    data: Vec<f64>,
}

fn elem_count(indices: &[Index]) -> usize {
    indices.iter().map(|i| i.dim).product()
}

impl Tensor {
    pub fn new(indices: Vec<Index>, data: Vec<f64>) -> Result<Self> {
        let mut seen = HashSet::new();
        for ix in &indices {
            if ix.dim == 0 {
                return Err(Error::DimensionMismatch(format!("index {} has dimension 0", ix.id)));
            }
            if !seen.insert(ix.id) {
                return Err(Error::DimensionMismatch(format!("index id {} repeated", ix.id)));
            }
        }
        let expected = elem_count(&indices);
        if data.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "data length {} does not match shape volume {expected}",
                data.len()
            )));
        }
        Ok(Self { indices, data })
    }

    pub fn zeros(indices: Vec<Index>) -> Result<Self> {
        let n = elem_count(&indices);
        Self::new(indices, vec![0.0; n])
    }

    pub fn scalar(value: f64) -> Self {
        Self { indices: Vec::new(), data: vec![value] }
    }

    pub fn indices(&self) -> &[Index] {
        &self.indices
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn ids(&self) -> Vec<u64> {
        self.indices.iter().map(|i| i.id).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.indices.iter().map(|i| i.dim).collect()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.indices.len()
    }

    pub fn position(&self, id: u64) -> Option<usize> {
        self.indices.iter().position(|i| i.id == id)
    }

    pub fn index(&self, id: u64) -> Option<&Index> {
        self.indices.iter().find(|i| i.id == id)
    }

    /// Value of a rank-0 tensor.
    pub fn scalar_value(&self) -> Option<f64> {
        self.indices.is_empty().then(|| self.data[0])
    }

    pub fn norm(&self) -> f64 {
        crate::linalg::dot2(&self.data, &self.data).sqrt()
    }

    pub fn scale(&mut self, alpha: f64) {
        for x in &mut self.data {
            *x *= alpha;
        }
    }

    pub fn scaled(mut self, alpha: f64) -> Self {
        self.scale(alpha);
        self
    }

    /// `self += alpha * other`, with `other` re-laid-out to `self`'s order.
    pub fn axpy(&mut self, alpha: f64, other: &Tensor) -> Result<()> {
        let other = other.permute(&self.ids())?;
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += alpha * y;
        }
        Ok(())
    }

    /// Re-lays the data so that the axes follow `order` (a list of ids).
    pub fn permute(&self, order: &[u64]) -> Result<Tensor> {
        if order.len() != self.indices.len() {
            return Err(Error::InvalidPermutation(format!(
                "expected {} ids, got {}",
                self.indices.len(),
                order.len()
            )));
        }
        let mut perm = Vec::with_capacity(order.len());
        for &id in order {
            let p = self
                .position(id)
                .ok_or_else(|| Error::InvalidPermutation(format!("id {id} not on tensor")))?;
            if perm.contains(&p) {
                return Err(Error::InvalidPermutation(format!("id {id} repeated")));
            }
            perm.push(p);
        }
        if perm.iter().enumerate().all(|(i, &p)| i == p) {
            return Ok(self.clone());
        }
        let indices: Vec<Index> = perm.iter().map(|&p| self.indices[p]).collect();
        let data = permute_data(&self.data, &self.dims(), &perm);
        Ok(Tensor { indices, data })
    }
}

/// Row-major strides for `dims`.
fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Output axis `k` is input axis `perm[k]`.
fn permute_data(data: &[f64], dims: &[usize], perm: &[usize]) -> Vec<f64> {
    let in_strides = strides(dims);
    let out_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let src_strides: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
    let rank = perm.len();
    let mut out = Vec::with_capacity(data.len());
    if rank == 0 {
        out.extend_from_slice(data);
        return out;
    }
    // Odometer over all but the last output axis; last axis is an inner strided loop.
    let last_dim = out_dims[rank - 1];
    let last_stride = src_strides[rank - 1];
    let mut counter = vec![0usize; rank - 1];
    let mut base = 0usize;
    loop {
        for j in 0..last_dim {
            out.push(data[base + j * last_stride]);
        }
        let mut axis = rank - 1;
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            counter[axis] += 1;
            base += src_strides[axis];
            if counter[axis] < out_dims[axis] {
                break;
            }
            base -= src_strides[axis] * out_dims[axis];
            counter[axis] = 0;
        }
    }
}

/// Sums over every index id shared by `a` and `b`.
///
/// The result carries `a`'s free indices followed by `b`'s, each in their
/// original order. With no shared ids this is the outer product.
pub fn contract(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let mut shared = Vec::new();
    for ia in &a.indices {
        if let Some(ib) = b.index(ia.id) {
            if ib.dim != ia.dim {
                return Err(Error::DimensionMismatch(format!(
                    "index {} has dim {} on one side and {} on the other",
                    ia.id, ia.dim, ib.dim
                )));
            }
            shared.push(*ia);
        }
    }
    let is_shared = |ix: &Index| shared.iter().any(|s| s.id == ix.id);
    let free_a: Vec<Index> = a.indices.iter().filter(|i| !is_shared(i)).copied().collect();
    let free_b: Vec<Index> = b.indices.iter().filter(|i| !is_shared(i)).copied().collect();

    let order_a: Vec<u64> = free_a.iter().chain(&shared).map(|i| i.id).collect();
    let order_b: Vec<u64> = shared.iter().chain(&free_b).map(|i| i.id).collect();
    let pa = a.permute(&order_a)?;
    let pb = b.permute(&order_b)?;

    let m = elem_count(&free_a);
    let k = elem_count(&shared);
    let n = elem_count(&free_b);
    let data = linalg::matmul(&pa.data, &pb.data, m, k, n);
    let mut indices = free_a;
    indices.extend(free_b);
    Ok(Tensor { indices, data })
}

/// Element count of `contract(a, b)` without performing it.
pub fn contracted_len(a: &[Index], b: &[Index]) -> u128 {
    let shared = |ix: &Index, other: &[Index]| other.iter().any(|o| o.id == ix.id);
    let fa: u128 = a.iter().filter(|i| !shared(i, b)).map(|i| i.dim as u128).product();
    let fb: u128 = b.iter().filter(|i| !shared(i, a)).map(|i| i.dim as u128).product();
    fa * fb
}

/// Full contraction of two tensors over identical index sets.
pub fn inner(a: &Tensor, b: &Tensor) -> Result<f64> {
    let same_set = a.indices.len() == b.indices.len()
        && a.indices.iter().all(|ia| b.index(ia.id).is_some_and(|ib| ib.dim == ia.dim));
    if !same_set {
        return Err(Error::DimensionMismatch("inner product needs identical index sets".into()));
    }
    let pb = b.permute(&a.ids())?;
    Ok(crate::linalg::dot2(&a.data, &pb.data))
}

/// I.i.d. standard normal entries.
pub fn random_gaussian(shape: Vec<Index>, rng: &mut Gaussian) -> Result<Tensor> {
    let mut t = Tensor::zeros(shape)?;
    rng.fill(&mut t.data);
    Ok(t)
}

/// Singular values of the matricization `left_ids × (remaining ids)`.
pub fn bipartition_singular_values(t: &Tensor, left_ids: &[u64]) -> Result<Vec<f64>> {
    let mut left = Vec::new();
    for &id in left_ids {
        if t.position(id).is_none() {
            return Err(Error::InvalidBipartition(format!("id {id} not on tensor")));
        }
        if !left.contains(&id) {
            left.push(id);
        }
    }
    if left.is_empty() || left.len() >= t.rank() {
        return Err(Error::InvalidBipartition("left side must be a nonempty proper subset".into()));
    }
    let right: Vec<u64> = t.ids().into_iter().filter(|id| !left.contains(id)).collect();
    let rows: usize = left.iter().map(|&id| t.index(id).unwrap().dim).product();
    let cols = t.len() / rows;
    let order: Vec<u64> = left.iter().chain(&right).copied().collect();
    let p = t.permute(&order)?;
    Ok(linalg::singular_values(&p.data, rows, cols))
}

/// Number of singular values above `tol` times the largest one.
pub fn numerical_rank(t: &Tensor, left_ids: &[u64], tol: f64) -> Result<usize> {
    let sv = bipartition_singular_values(t, left_ids)?;
    let max = sv.first().copied().unwrap_or(0.0);
    if max == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&s| s > tol * max).count())
}
