//! Browser bindings: flat `Float64Array`s for the demo page in `www/`.

use wasm_bindgen::prelude::*;

use nullstate::exponents::{eigenvalue, kpz, leg_weight, ConformalWeight, Kappa};
use nullstate::green::TwoIntervalGreen;
use nullstate::heat_kernel::{HeatKernel, KernelParams, TruncationPolicy};

/// Columns of one row of [`exponent_table`].
pub const TABLE_COLUMNS: usize = 6;

fn grid(points: usize) -> Result<Vec<f64>, String> {
    if !(2..=2000).contains(&points) {
        return Err("points must lie in 2..=2000".into());
    }
    // open interval: the kernel and G carry endpoint powers
    Ok((1..=points).map(|i| i as f64 / (points + 1) as f64).collect())
}

/// Rows (s, θ_s, Δ−, Δ+, gap, λ0 with h = θ_s) for s = 1..smax.
pub fn table(kappa: f64, smax: u32) -> Result<Vec<f64>, String> {
    let k = Kappa::new(kappa).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(smax as usize * TABLE_COLUMNS);
    for s in 1..=smax {
        let th = leg_weight(s, k);
        let p = kpz(th, k).map_err(|e| e.to_string())?;
        let l0 = eigenvalue(0, th, k).map_err(|e| e.to_string())?.lambda;
        out.extend([f64::from(s), th.value(), p.delta_minus, p.delta_plus, p.gap, l0]);
    }
    Ok(out)
}

/// Pairs (σ, K(ρ, σ, t)) on an interior grid of σ.
pub fn kernel(alpha: f64, beta: f64, rho: f64, t: f64, points: usize) -> Result<Vec<f64>, String> {
    let params = KernelParams::new(alpha, beta).map_err(|e| e.to_string())?;
    let k = HeatKernel::new(params, TruncationPolicy::default()).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(2 * points);
    for sigma in grid(points)? {
        out.push(sigma);
        out.push(k.value(rho, sigma, t).map_err(|e| e.to_string())?.value);
    }
    Ok(out)
}

/// Pairs (σ, G(ρ, ε; σ, η)) for weight h on an interior grid of σ.
pub fn green(kappa: f64, h: f64, rho: f64, eps: f64, eta: f64, points: usize) -> Result<Vec<f64>, String> {
    let k = Kappa::new(kappa).map_err(|e| e.to_string())?;
    let g = TwoIntervalGreen::new(ConformalWeight(h), k, TruncationPolicy::default()).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(2 * points);
    for sigma in grid(points)? {
        out.push(sigma);
        out.push(g.value(rho, eps, sigma, eta).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn leg_weight_at(s: u32, kappa: f64) -> Result<f64, JsError> {
    let k = Kappa::new(kappa).map_err(|e| JsError::new(&e.to_string()))?;
    Ok(leg_weight(s, k).value())
}

#[wasm_bindgen]
pub fn exponent_table(kappa: f64, smax: u32) -> Result<Vec<f64>, JsError> {
    table(kappa, smax).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn kernel_curve(alpha: f64, beta: f64, rho: f64, t: f64, points: usize) -> Result<Vec<f64>, JsError> {
    kernel(alpha, beta, rho, t, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn green_profile(kappa: f64, h: f64, rho: f64, eps: f64, eta: f64, points: usize) -> Result<Vec<f64>, JsError> {
    green(kappa, h, rho, eps, eta, points).map_err(|e| JsError::new(&e))
}
