//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Three operations are exposed: the γ-deviation of two weight vectors
//! across γ ∈ [0, 1], the maximum-entropy die with a prescribed mean, and the
//! projection of a qubit state onto a prescribed `⟨σ_z⟩`. Each binding wraps
//! a plain Rust function that the native tests exercise directly.

use infodyn::cmeasure::ClassicalWeights;
use infodyn::divergence::d_gamma_raw;
use infodyn::entproj::{project, ConstraintSet, Penalty};
use infodyn::qproj::{q_project, QuantumConstraintSet, QuantumPenalty};
use infodyn::qstate::{DensityOperator, ObservableOperator};
use infodyn::Result;
use wasm_bindgen::prelude::*;

/// `D_γ(μ, ν)` at `points` equally spaced γ from 0 to 1 (inclusive).
pub fn gamma_curve(mu: &[f64], nu: &[f64], points: usize) -> Result<Vec<f64>> {
    let (mu, nu) = (ClassicalWeights::new(mu.to_vec())?, ClassicalWeights::new(nu.to_vec())?);
    if mu.len() != nu.len() {
        return Err(infodyn::Error::LengthMismatch(mu.len(), nu.len()));
    }
    let steps = points.max(2) - 1;
    Ok((0..=steps).map(|k| d_gamma_raw(mu.as_slice(), nu.as_slice(), k as f64 / steps as f64)).collect())
}

/// Weights of faces 1..=`faces` closest to uniform in `D_γ` with the given mean.
pub fn dice_weights(faces: usize, mean: f64, gamma: f64) -> Result<Vec<f64>> {
    let values: Vec<f64> = (1..=faces).map(|f| f as f64).collect();
    let q = ConstraintSet::new().with_moment(values, mean).with_normalization(1.0);
    Ok(project(&ClassicalWeights::uniform(faces)?, gamma, &q, &Penalty::None)?.state.into_vec())
}

/// Projects the qubit with Bloch vector `r` onto `⟨σ_z⟩ = m`; returns the
/// Bloch vector of the result followed by the KKT residual.
pub fn qubit_projection(r: [f64; 3], m: f64, gamma: f64) -> Result<Vec<f64>> {
    let omega = DensityOperator::from_bloch(r)?;
    let q = QuantumConstraintSet::new().with_moment(ObservableOperator::pauli_z(), m).with_normalization(1.0);
    let out = q_project(&omega, gamma, &q, &QuantumPenalty::None)?;
    let rho = out.state.matrix();
    let bloch = [2.0 * rho[(0, 1)].re, -2.0 * rho[(0, 1)].im, (rho[(0, 0)] - rho[(1, 1)]).re];
    Ok(bloch.into_iter().chain([out.kkt_residual]).collect())
}

fn js(e: infodyn::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = gammaCurve)]
pub fn gamma_curve_js(mu: Vec<f64>, nu: Vec<f64>, points: usize) -> std::result::Result<Vec<f64>, JsError> {
    gamma_curve(&mu, &nu, points).map_err(js)
}

#[wasm_bindgen(js_name = diceWeights)]
pub fn dice_weights_js(faces: usize, mean: f64, gamma: f64) -> std::result::Result<Vec<f64>, JsError> {
    dice_weights(faces, mean, gamma).map_err(js)
}

#[wasm_bindgen(js_name = qubitProjection)]
pub fn qubit_projection_js(x: f64, y: f64, z: f64, m: f64, gamma: f64) -> std::result::Result<Vec<f64>, JsError> {
    qubit_projection([x, y, z], m, gamma).map_err(js)
}
