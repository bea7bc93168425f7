//! Target states: dense unit vectors, either i.i.d. Gaussian or the
//! contraction of a random network of chosen geometry (which hides its
//! generating structure in a flat vector).
//!
//! On disk a target is a 16-byte header followed by `p^n` little-endian
//! `f64`s, with provenance in a JSON sidecar at `<path>.json`:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "TNGT"
//! 4       2     version (u16 LE) = 1
//! 6       2     n (u16 LE)
//! 8       2     p (u16 LE)
//! 10      6     zero padding
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::{self, DEFAULT_MAX_DENSE};
use crate::error::{Error, Result};
use crate::geometry::{build, GeometrySpec, Network};
use crate::rng::Gaussian;
use crate::tensor::{random_gaussian, Index, Tensor};

pub const MAGIC: &[u8; 4] = b"TNGT";
pub const FORMAT_VERSION: u16 = 1;
const HEADER_LEN: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "snake_case")]
pub enum Scenario {
    FullRandom,
    HiddenTn { spec: GeometrySpec },
    /// Built from an explicit vector or network.
    Supplied,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(flatten)]
    pub scenario: Scenario,
    pub seed: u64,
    pub chi_target: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TargetState {
    state: Tensor,
    provenance: Provenance,
    p: usize,
}

fn dense_len(n: usize, p: usize, limit: usize) -> Result<usize> {
    let elems = (p as u128).saturating_pow(n as u32);
    if elems > limit as u128 {
        return Err(Error::TargetTooLarge { elems, limit });
    }
    Ok(elems as usize)
}

fn physical_shape(n: usize, p: usize) -> Vec<Index> {
    (0..n).map(|s| Index::physical(s, p)).collect()
}

impl TargetState {
    pub fn full_random(n: usize, p: usize, seed: u64) -> Result<Self> {
        Self::full_random_limited(n, p, seed, DEFAULT_MAX_DENSE)
    }

    pub fn full_random_limited(n: usize, p: usize, seed: u64, limit: usize) -> Result<Self> {
        if n == 0 || p < 2 {
            return Err(Error::InvalidSpec("target needs n >= 1 and p >= 2".into()));
        }
        dense_len(n, p, limit)?;
        let state = random_gaussian(physical_shape(n, p), &mut Gaussian::new(seed))?;
        let provenance = Provenance { scenario: Scenario::FullRandom, seed, chi_target: None };
        Self::normalized(state, provenance)
    }

    pub fn hidden_tn(spec: &GeometrySpec, seed: u64) -> Result<Self> {
        Self::hidden_tn_limited(spec, seed, DEFAULT_MAX_DENSE)
    }

    pub fn hidden_tn_limited(spec: &GeometrySpec, seed: u64, limit: usize) -> Result<Self> {
        spec.validate()?;
        dense_len(spec.n, spec.p, limit)?;
        let net = build(spec, seed)?;
        let state = engine::to_dense_limited(&net, limit)?;
        let provenance = Provenance { scenario: Scenario::HiddenTn { spec: *spec }, seed, chi_target: Some(spec.chi) };
        Self::normalized(state, provenance)
    }

    /// Normalizes an explicit state whose indices are the physical legs 0..n.
    pub fn from_state(state: Tensor) -> Result<Self> {
        Self::normalized(state, Provenance { scenario: Scenario::Supplied, seed: 0, chi_target: None })
    }

    pub fn from_network(net: &Network) -> Result<Self> {
        Self::from_state(engine::to_dense(net)?)
    }

    fn normalized(state: Tensor, provenance: Provenance) -> Result<Self> {
        let n = state.rank();
        let p = state.indices().first().map(|i| i.dim).unwrap_or(2);
        if state.indices() != physical_shape(n, p).as_slice() {
            return Err(Error::DimensionMismatch("target indices must be physical sites 0..n in order".into()));
        }
        let norm = state.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::DegenerateState);
        }
        Ok(Self { state: state.scaled(1.0 / norm), provenance, p })
    }

    pub fn state(&self) -> &Tensor {
        &self.state
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn n(&self) -> usize {
        self.state.rank()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn sidecar_path(path: &Path) -> PathBuf {
        let mut s = path.as_os_str().to_owned();
        s.push(".json");
        PathBuf::from(s)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.state.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n() as u16).to_le_bytes());
        out.extend_from_slice(&(self.p as u16).to_le_bytes());
        out.extend_from_slice(&[0u8; 6]);
        for x in self.state.data() {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], provenance: Provenance) -> Result<Self> {
        if bytes.len() < HEADER_LEN || &bytes[0..4] != MAGIC {
            return Err(Error::Format("missing TNGT header".into()));
        }
        let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
        let version = u16_at(4);
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let (n, p) = (u16_at(6) as usize, u16_at(8) as usize);
        if n == 0 || p < 2 {
            return Err(Error::Format(format!("bad header n={n} p={p}")));
        }
        let len = dense_len(n, p, DEFAULT_MAX_DENSE)?;
        let body = &bytes[HEADER_LEN..];
        if body.len() != 8 * len {
            return Err(Error::Format(format!("expected {} payload bytes, found {}", 8 * len, body.len())));
        }
        let data = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        let state = Tensor::new(physical_shape(n, p), data)?;
        let norm = state.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::Format(format!("stored state has norm {norm}")));
        }
        Ok(Self { state, provenance, p })
    }

    /// Writes the binary file and its JSON sidecar.
    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        fs::write(Self::sidecar_path(path), serde_json::to_string_pretty(&self.provenance)? + "\n")?;
        Ok(())
    }

    /// Reads a target; a missing sidecar yields `Supplied` provenance.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)?;
        let sidecar = Self::sidecar_path(path);
        let provenance = if sidecar.exists() {
            serde_json::from_str(&fs::read_to_string(sidecar)?)?
        } else {
            Provenance { scenario: Scenario::Supplied, seed: 0, chi_target: None }
        };
        Self::from_bytes(&bytes, provenance)
    }
}
