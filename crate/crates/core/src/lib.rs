//! Tensor-network geometry laboratory.
//!
//! Builds heterogeneous tensor-network ansätze (MPS, antenna and balanced
//! trees, stars, PEPS, dense), trains them with L-BFGS to reproduce a target
//! state, and sweeps geometry × bond dimension × seed to compare how network
//! density affects training.

// `!(x > 0.0)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compactify;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod optimizer;
pub mod rng;
pub mod surrogate;
pub mod tensor;

pub use error::{Error, Result};
pub use geometry::{Family, GeometrySpec, Network};
pub use surrogate::TargetState;
pub use tensor::{Index, Tensor};
