//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export takes plain arguments and returns a JSON string; the logic
//! lives in [`api`] so it can be tested natively.

pub mod api;

use wasm_bindgen::prelude::*;

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

/// Structure of a geometry: nodes, bonds, diameter, sizes and the compacted sizes.
#[wasm_bindgen]
pub fn inspect(family: &str, n: usize, chi: usize) -> Result<String, JsValue> {
    js(api::inspect(family, n, chi))
}

/// Trains one network and returns its training curve.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn train(
    family: &str,
    n: usize,
    chi: usize,
    compact: bool,
    target: &str,
    target_chi: usize,
    seed: u32,
    max_iters: usize,
) -> Result<String, JsValue> {
    js(api::train(&api::TrainRequest {
        family: family.to_string(),
        n,
        chi,
        compact,
        target: target.to_string(),
        target_chi,
        seed: seed as u64,
        max_iters,
    }))
}

/// Schmidt rank and spectrum at every contiguous cut of a target state.
#[wasm_bindgen]
pub fn rank_profile(target: &str, n: usize, chi: usize, seed: u32) -> Result<String, JsValue> {
    js(api::rank_profile(target, n, chi, seed as u64))
}
