//! Central finite differences with one Richardson step.
//!
//! Both stencils are second order; combining steps h and h/2 cancels the
//! h² term, leaving O(h⁴) truncation.

pub fn d1(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let c = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    (4.0 * c(h / 2.0) - c(h)) / 3.0
}

pub fn d2(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let fx = f(x);
    let c = |h: f64| (f(x + h) - 2.0 * fx + f(x - h)) / (h * h);
    (4.0 * c(h / 2.0) - c(h)) / 3.0
}

/// Mixed second derivative ∂x∂y by nested central differences.
pub fn d11(f: impl Fn(f64, f64) -> f64, x: f64, y: f64, h: f64, k: f64) -> f64 {
    d1(|u| d1(|v| f(u, v), y, k), x, h)
}

/// Backward difference at `x` extrapolated to zero step (Neville table on
/// steps h, h/2, …, h/2^{levels−1}). Used where the function is only
/// defined on one side of `x`.
pub fn d1_left(f: impl Fn(f64) -> f64, x: f64, h: f64, levels: usize) -> f64 {
    let fx = f(x);
    let mut table: Vec<f64> = (0..levels)
        .map(|k| {
            let s = h / f64::powi(2.0, k as i32);
            (fx - f(x - s)) / s
        })
        .collect();
    // errors expand in powers of s, so level m removes s^m
    for m in 1..levels {
        let w = f64::powi(2.0, m as i32);
        for k in (m..levels).rev() {
            table[k] = (w * table[k] - table[k - 1]) / (w - 1.0);
        }
    }
    table[levels - 1]
}
