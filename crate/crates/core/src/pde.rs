//! Finite-difference residuals of the null-state PDEs and the three
//! conformal Ward identities, with one coordinate x_ι carrying weight h and
//! all others θ1.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{kpz, theta1, ConformalWeight, Kappa};
use crate::fd;

/// Strictly increasing coordinates x₁ < … < x_M, M ≥ 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointConfig {
    coords: Vec<f64>,
}

impl PointConfig {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::domain("a configuration needs at least two points"));
        }
        if !coords.iter().all(|x| x.is_finite()) || !coords.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::domain(format!(
                "coordinates must be finite and strictly increasing, got {coords:?}"
            )));
        }
        Ok(PointConfig { coords })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// 1-based access.
    pub fn x(&self, i: usize) -> f64 {
        self.coords[i - 1]
    }

    pub fn min_gap(&self) -> f64 {
        self.coords
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn translated(&self, c: f64) -> Self {
        PointConfig {
            coords: self.coords.iter().map(|x| x + c).collect(),
        }
    }

    /// Copy with the 1-based coordinate `i` replaced; fails if order breaks.
    pub fn with(&self, i: usize, value: f64) -> Result<Self> {
        let mut coords = self.coords.clone();
        coords[i - 1] = value;
        PointConfig::new(coords)
    }
}

/// Weight h at the 1-based index ι, θ1 at every other point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightAssignment {
    pub iota: usize,
    pub h: ConformalWeight,
    pub kappa: Kappa,
}

impl WeightAssignment {
    pub fn new(iota: usize, h: ConformalWeight, kappa: Kappa) -> Result<Self> {
        if iota == 0 {
            return Err(Error::domain("iota is 1-based"));
        }
        kpz(h, kappa)?;
        Ok(WeightAssignment { iota, h, kappa })
    }

    /// Every point carries θ1.
    pub fn uniform(kappa: Kappa) -> Self {
        WeightAssignment {
            iota: 1,
            h: theta1(kappa),
            kappa,
        }
    }

    pub fn weight(&self, k: usize) -> f64 {
        if k == self.iota {
            self.h.value()
        } else {
            theta1(self.kappa).value()
        }
    }

    pub fn weights(&self, m: usize) -> Vec<f64> {
        (1..=m).map(|k| self.weight(k)).collect()
    }

    pub fn is_uniform(&self) -> bool {
        self.h.value() == theta1(self.kappa).value()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthBound {
    pub c: f64,
    pub p: f64,
}

/// A scalar field on strictly increasing M-tuples. Implementations must be
/// safe to call from several threads at once.
pub trait Candidate: Send + Sync {
    fn name(&self) -> String;
    fn arity(&self) -> usize;
    fn eval(&self, x: &[f64]) -> f64;
    fn growth(&self) -> Option<GrowthBound> {
        None
    }
    /// How many times faster than a unit power F varies on the scale of a
    /// gap; stencil steps are divided by it.
    fn stiffness(&self) -> f64 {
        1.0
    }
}

/// Wraps a closure as a candidate.
pub struct FnCandidate<F> {
    pub name: String,
    pub arity: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> Candidate for FnCandidate<F> {
    fn name(&self) -> String {
        self.name.clone()
    }
    fn arity(&self) -> usize {
        self.arity
    }
    fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// c · Π_{i<j} (x_j − x_i)^{μ_ij}, indices 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerProduct {
    pub arity: usize,
    pub coef: f64,
    pub exponents: Vec<(usize, usize, f64)>,
    pub growth: Option<GrowthBound>,
}

impl PowerProduct {
    pub fn new(arity: usize, exponents: Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(i, j, mu) in &exponents {
            if i == 0 || i >= j || j > arity || !mu.is_finite() {
                return Err(Error::domain(format!(
                    "power exponent ({i},{j})={mu} must have 1 <= i < j <= {arity}"
                )));
            }
        }
        Ok(PowerProduct {
            arity,
            coef: 1.0,
            exponents,
            growth: None,
        })
    }

    pub fn scaled(mut self, coef: f64) -> Self {
        self.coef = coef;
        self
    }

    /// Σ_pairs ∂k log(x_j − x_i)^{μ} and Σ_pairs ∂k² of the same.
    fn log_derivatives(&self, k: usize, x: &[f64]) -> (f64, f64) {
        let mut g = 0.0;
        let mut gg = 0.0;
        for &(i, j, mu) in &self.exponents {
            let r = x[j - 1] - x[i - 1];
            if k == j {
                g += mu / r;
                gg -= mu / (r * r);
            } else if k == i {
                g -= mu / r;
                gg -= mu / (r * r);
            }
        }
        (g, gg)
    }

    pub fn analytic_d1(&self, k: usize, x: &[f64]) -> f64 {
        self.eval(x) * self.log_derivatives(k, x).0
    }

    pub fn analytic_d2(&self, k: usize, x: &[f64]) -> f64 {
        let (g, gg) = self.log_derivatives(k, x);
        self.eval(x) * (g * g + gg)
    }
}

impl Candidate for PowerProduct {
    fn name(&self) -> String {
        let spec: Vec<String> = self
            .exponents
            .iter()
            .map(|(i, j, mu)| format!("{i},{j}={mu}"))
            .collect();
        format!("power:{}", spec.join(";"))
    }
    fn arity(&self) -> usize {
        self.arity
    }
    fn eval(&self, x: &[f64]) -> f64 {
        self.exponents
            .iter()
            .fold(self.coef, |acc, &(i, j, mu)| acc * (x[j - 1] - x[i - 1]).powf(mu))
    }
    fn growth(&self) -> Option<GrowthBound> {
        self.growth
    }
    /// Largest total |μ| acting on a single coordinate.
    fn stiffness(&self) -> f64 {
        (1..=self.arity)
            .map(|k| {
                self.exponents
                    .iter()
                    .filter(|e| e.0 == k || e.1 == k)
                    .map(|e| e.2.abs())
                    .sum::<f64>()
            })
            .fold(1.0, f64::max)
    }
}

/// Sum of power products sharing an arity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSum {
    pub name: String,
    pub terms: Vec<PowerProduct>,
}

impl Candidate for PowerSum {
    fn name(&self) -> String {
        self.name.clone()
    }
    fn arity(&self) -> usize {
        self.terms.first().map_or(0, |t| t.arity)
    }
    fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }
    fn stiffness(&self) -> f64 {
        self.terms.iter().map(|t| t.stiffness()).fold(1.0, f64::max)
    }
}

/// A candidate multiplied by a smooth prefactor g(x).
pub struct Prefactored<C> {
    pub name: String,
    pub inner: C,
    pub g: fn(&[f64]) -> f64,
}

impl<C: Candidate> Candidate for Prefactored<C> {
    fn name(&self) -> String {
        self.name.clone()
    }
    fn arity(&self) -> usize {
        self.inner.arity()
    }
    fn eval(&self, x: &[f64]) -> f64 {
        (self.g)(x) * self.inner.eval(x)
    }
    fn stiffness(&self) -> f64 {
        self.inner.stiffness()
    }
}

/// F(x₁, x₂) = (x₂ − x₁)^{−2θ1}, the two-point solution.
pub fn builtin_n1(kappa: Kappa) -> PowerProduct {
    let t1 = theta1(kappa).value();
    let mut p = PowerProduct::new(2, vec![(1, 2, -2.0 * t1)]).expect("valid exponent");
    if t1 > 0.0 {
        p.growth = Some(GrowthBound { c: 1.0, p: 2.0 * t1 });
    }
    p
}

pub fn builtin_power_product(arity: usize, exponents: Vec<(usize, usize, f64)>) -> Result<PowerProduct> {
    PowerProduct::new(arity, exponents)
}

/// Exponents that the manufactured fields are built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldContext {
    pub kappa: Kappa,
    pub h: ConformalWeight,
    pub lambda0: f64,
}

pub const MANUFACTURED_SHAPES: &[(&str, &str)] = &[
    ("two-leg", "M=2, (x2-x1)^{D+(theta1)}"),
    ("identity", "M=2, (x2-x1)^{D-(theta1)}"),
    ("prefactor", "M=2, (x1^2+1)(x2-x1)^{D-(theta1)}"),
    ("split", "M=2, 2(x2-x1)^{D-(theta1)} + 3(x2-x1)^{D+(theta1)}"),
    ("normalized", "M=3, delta^{D+(theta1)} eps^{D+(h)} (eps-delta)^{D+(h)}, iota=3"),
    ("weakened", "M=3, as normalized with the eps power lowered by 1/2"),
    ("kernel-form", "M=3, rho^{D+(theta1)} eps^{lambda0} (1-rho)^{D+(h)}, rho=delta/eps"),
    ("far-bounded", "M=4, (1+(x4-x1)^2)(x2-x1)^{D+(theta1)}(x4-x3)^{D+(h)}, j=2, iota=4"),
    ("violating", "M=4, (x2-x1)^{D-(theta1)}(x4-x3)^{D+(h)}, j=2, iota=4"),
];

pub fn manufactured(shape: &str, ctx: &FieldContext) -> Result<Box<dyn Candidate>> {
    let t = kpz(theta1(ctx.kappa), ctx.kappa)?;
    let ph = kpz(ctx.h, ctx.kappa)?.delta_plus;
    let (p1, m1) = (t.delta_plus, t.delta_minus);
    let named = |mut p: PowerProduct| -> Box<dyn Candidate> {
        p.growth = None;
        Box::new(p)
    };
    Ok(match shape {
        "two-leg" => named(PowerProduct::new(2, vec![(1, 2, p1)])?),
        "identity" => named(PowerProduct::new(2, vec![(1, 2, m1)])?),
        "prefactor" => Box::new(Prefactored {
            name: "manufactured:prefactor".into(),
            inner: PowerProduct::new(2, vec![(1, 2, m1)])?,
            g: |x| x[0] * x[0] + 1.0,
        }),
        "split" => Box::new(PowerSum {
            name: "manufactured:split".into(),
            terms: vec![
                PowerProduct::new(2, vec![(1, 2, m1)])?.scaled(2.0),
                PowerProduct::new(2, vec![(1, 2, p1)])?.scaled(3.0),
            ],
        }),
        "normalized" => named(PowerProduct::new(3, vec![(1, 2, p1), (1, 3, ph), (2, 3, ph)])?),
        "weakened" => named(PowerProduct::new(
            3,
            vec![(1, 2, p1), (1, 3, ph - 0.5), (2, 3, ph)],
        )?),
        "kernel-form" => named(PowerProduct::new(
            3,
            vec![(1, 2, p1), (1, 3, ctx.lambda0 - p1 - ph), (2, 3, ph)],
        )?),
        "far-bounded" => Box::new(Prefactored {
            name: "manufactured:far-bounded".into(),
            inner: PowerProduct::new(4, vec![(1, 2, p1), (3, 4, ph)])?,
            g: |x| 1.0 + (x[3] - x[0]) * (x[3] - x[0]),
        }),
        "violating" => named(PowerProduct::new(4, vec![(1, 2, m1), (3, 4, ph)])?),
        other => {
            return Err(Error::domain(format!(
                "unknown manufactured shape '{other}' (known: {})",
                MANUFACTURED_SHAPES
                    .iter()
                    .map(|s| s.0)
                    .collect::<Vec<_>>()
                    .join(", ")
            )))
        }
    })
}

/// `n1`, `power:i,j=μ;…` or `manufactured:<shape>`.
pub fn parse_candidate(spec: &str, ctx: &FieldContext) -> Result<Box<dyn Candidate>> {
    if spec == "n1" {
        return Ok(Box::new(builtin_n1(ctx.kappa)));
    }
    if let Some(shape) = spec.strip_prefix("manufactured:") {
        return manufactured(shape, ctx);
    }
    if let Some(body) = spec.strip_prefix("power:") {
        let mut exps = Vec::new();
        for part in body.split(';').filter(|p| !p.trim().is_empty()) {
            let bad = || Error::domain(format!("cannot parse power term '{part}', expected i,j=value"));
            let (lhs, rhs) = part.split_once('=').ok_or_else(bad)?;
            let (i, j) = lhs.split_once(',').ok_or_else(bad)?;
            let i: usize = i.trim().parse().map_err(|_| bad())?;
            let j: usize = j.trim().parse().map_err(|_| bad())?;
            let mu: f64 = rhs.trim().parse().map_err(|_| bad())?;
            exps.push((i, j, mu));
        }
        let arity = exps.iter().map(|e| e.1).max().unwrap_or(2).max(2);
        return Ok(Box::new(PowerProduct::new(arity, exps)?));
    }
    Err(Error::domain(format!(
        "unknown candidate '{spec}'; use n1, power:i,j=value;... or manufactured:<shape>"
    )))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub equation: String,
    pub residual: f64,
    /// largest single term, floored by the natural size of F
    pub scale: f64,
    pub relative: f64,
    pub step: f64,
}

impl ResidualReport {
    fn new(equation: String, terms: &[f64], floor: f64, step: f64) -> Self {
        let residual: f64 = terms.iter().sum();
        let largest = terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
        let mut scale = largest.max(floor);
        if !(scale > 0.0) {
            scale = 1.0;
        }
        ResidualReport {
            equation,
            residual,
            scale,
            relative: residual.abs() / scale,
            step,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StencilOptions {
    /// step along x_k as a fraction of the distance from x_k to its
    /// nearest neighbour
    pub step_fraction: f64,
}

impl Default for StencilOptions {
    fn default() -> Self {
        StencilOptions { step_fraction: 5e-3 }
    }
}

struct Stencil<'a> {
    f: &'a dyn Candidate,
    x: Vec<f64>,
    steps: Vec<f64>,
    step: f64,
}

impl<'a> Stencil<'a> {
    fn new(f: &'a dyn Candidate, config: &PointConfig, opts: StencilOptions) -> Result<Self> {
        if f.arity() != config.len() {
            return Err(Error::precondition(format!(
                "candidate {} takes {} points, configuration has {}",
                f.name(),
                f.arity(),
                config.len()
            )));
        }
        // Richardson reaches ±step from each point; gaps must hold 10 steps
        if !(opts.step_fraction > 0.0 && opts.step_fraction <= 0.1) {
            return Err(Error::precondition(
                "stencil step must be positive and at most a tenth of the smallest gap",
            ));
        }
        let x = config.coords().to_vec();
        let stiff = f.stiffness().max(1.0);
        let steps: Vec<f64> = (0..x.len())
            .map(|k| {
                let left = if k > 0 { x[k] - x[k - 1] } else { f64::INFINITY };
                let right = if k + 1 < x.len() { x[k + 1] - x[k] } else { f64::INFINITY };
                opts.step_fraction * left.min(right) / stiff
            })
            .collect();
        let step = steps.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Stencil { f, x, steps, step })
    }

    fn along(&self, k: usize) -> impl Fn(f64) -> f64 + '_ {
        move |v| {
            let mut y = self.x.clone();
            y[k - 1] = v;
            self.f.eval(&y)
        }
    }

    fn d1(&self, k: usize) -> f64 {
        fd::d1(self.along(k), self.x[k - 1], self.steps[k - 1])
    }

    fn d2(&self, k: usize) -> f64 {
        fd::d2(self.along(k), self.x[k - 1], self.steps[k - 1])
    }

    fn value(&self) -> f64 {
        self.f.eval(&self.x)
    }
}

fn null_state_with_weights(st: &Stencil, kappa: Kappa, w: &[f64], j: usize) -> ResidualReport {
    let x = &st.x;
    let xj = x[j - 1];
    let fv = st.value();
    let mut terms = vec![kappa.value() / 4.0 * st.d2(j)];
    let mut gap = f64::INFINITY;
    for k in 1..=x.len() {
        if k == j {
            continue;
        }
        let r = x[k - 1] - xj;
        gap = gap.min(r.abs());
        terms.push(st.d1(k) / r);
        terms.push(-w[k - 1] * fv / (r * r));
    }
    ResidualReport::new(format!("null-state j={j}"), &terms, fv.abs() / (gap * gap), st.step)
}

fn ward_with_weights(st: &Stencil, w: &[f64]) -> [ResidualReport; 3] {
    let x = &st.x;
    let fv = st.value();
    let grads: Vec<f64> = (1..=x.len()).map(|k| st.d1(k)).collect();
    let gap = x.windows(2).map(|p| p[1] - p[0]).fold(f64::INFINITY, f64::min);
    let mut t1 = Vec::new();
    let mut t2 = Vec::new();
    let mut t3 = Vec::new();
    for k in 0..x.len() {
        t1.push(grads[k]);
        t2.push(x[k] * grads[k]);
        t2.push(w[k] * fv);
        t3.push(x[k] * x[k] * grads[k]);
        t3.push(2.0 * w[k] * x[k] * fv);
    }
    [
        ResidualReport::new("ward translation".into(), &t1, fv.abs() / gap, st.step),
        ResidualReport::new("ward dilation".into(), &t2, fv.abs(), st.step),
        ResidualReport::new("ward special-conformal".into(), &t3, fv.abs() * gap, st.step),
    ]
}

/// Null-state residual centred on x_j (1-based, j ≠ ι unless h = θ1).
pub fn null_state_residual(
    f: &dyn Candidate,
    config: &PointConfig,
    weights: &WeightAssignment,
    j: usize,
    opts: StencilOptions,
) -> Result<ResidualReport> {
    let st = Stencil::new(f, config, opts)?;
    let m = config.len();
    if j == 0 || j > m {
        return Err(Error::domain(format!("j must lie in 1..={m}")));
    }
    if j == weights.iota && !weights.is_uniform() {
        return Err(Error::precondition("no null-state equation is centred on the anomalous point"));
    }
    if weights.iota > m {
        return Err(Error::domain(format!("iota must lie in 1..={m}")));
    }
    Ok(null_state_with_weights(&st, weights.kappa, &weights.weights(m), j))
}

pub fn ward_residuals(
    f: &dyn Candidate,
    config: &PointConfig,
    weights: &WeightAssignment,
    opts: StencilOptions,
) -> Result<[ResidualReport; 3]> {
    let st = Stencil::new(f, config, opts)?;
    let m = config.len();
    if weights.iota > m {
        return Err(Error::domain(format!("iota must lie in 1..={m}")));
    }
    Ok(ward_with_weights(&st, &weights.weights(m)))
}

/// Every null-state equation available for the assignment plus the Ward
/// identities.
pub fn system_residuals(
    f: &dyn Candidate,
    config: &PointConfig,
    weights: &WeightAssignment,
    opts: StencilOptions,
) -> Result<Vec<ResidualReport>> {
    let mut out = Vec::new();
    for j in 1..=config.len() {
        if j != weights.iota || weights.is_uniform() {
            out.push(null_state_residual(f, config, weights, j, opts)?);
        }
    }
    out.extend(ward_residuals(f, config, weights, opts)?);
    Ok(out)
}

/// Whether the two-point Ward system with weights (h1, h2) has a nonzero
/// solution.
///
/// Translation and dilation force F = c (x₂−x₁)^{−h1−h2}; the special
/// conformal identity then leaves −(h1−h2)(x₂−x₁)F, so a solution exists
/// iff h1 = h2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPointWitness {
    pub solvable: bool,
    /// h1 − h2
    pub factor: f64,
    /// special-conformal residual of the ansatz at (x₁, x₂) = (0, 1), by finite differences
    pub residual: f64,
    /// −(h1−h2)·1·F at the same point
    pub predicted: f64,
}

pub fn two_point_ward_solvable(h1: ConformalWeight, h2: ConformalWeight) -> TwoPointWitness {
    let (a, b) = (h1.value(), h2.value());
    let ansatz = PowerProduct::new(2, vec![(1, 2, -a - b)]).expect("finite exponent");
    let config = PointConfig::new(vec![0.0, 1.0]).expect("ordered");
    let st = Stencil::new(&ansatz, &config, StencilOptions::default()).expect("valid stencil");
    let [_, _, special] = ward_with_weights(&st, &[a, b]);
    TwoPointWitness {
        solvable: (a - b).abs() <= 1e-12,
        factor: a - b,
        residual: special.residual,
        predicted: -(a - b),
    }
}

/// Max relative error of stencil first and second derivatives against the
/// analytic ones of a power product. Errors are measured against the size of
/// the constituent terms, F·Σ|μ/r| for ∂F and F·max((Σ|μ/r|)², Σ|μ|/r²) for
/// ∂²F, so that a derivative cancelling to near zero is not over-weighted.
pub fn stencil_check(p: &PowerProduct, config: &PointConfig, opts: StencilOptions) -> Result<f64> {
    let st = Stencil::new(p, config, opts)?;
    let x = config.coords();
    let fv = p.eval(x).abs();
    let mut worst = 0.0f64;
    for k in 1..=x.len() {
        let (mut s1, mut s2) = (0.0, 0.0);
        for &(i, j, mu) in &p.exponents {
            if i == k || j == k {
                let r = x[j - 1] - x[i - 1];
                s1 += (mu / r).abs();
                s2 += mu.abs() / (r * r);
            }
        }
        let pairs = [
            (st.d1(k), p.analytic_d1(k, x), fv * s1),
            (st.d2(k), p.analytic_d2(k, x), fv * (s1 * s1).max(s2)),
        ];
        for (num, exact, scale) in pairs {
            let scale = scale.max(exact.abs()).max(f64::MIN_POSITIVE);
            worst = worst.max((num - exact).abs() / scale);
        }
    }
    Ok(worst)
}

/// `count` random configurations of `m` points: the first in [−2, 2], then
/// gaps drawn from [0.05, 2].
pub fn random_configs(m: usize, count: usize, seed: u64) -> Vec<PointConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut x = rng.gen_range(-2.0..2.0);
            let coords = (0..m)
                .map(|i| {
                    if i > 0 {
                        x += rng.gen_range(0.05..2.0);
                    }
                    x
                })
                .collect();
            PointConfig::new(coords).expect("increasing by construction")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::leg_weight;

    fn k(v: f64) -> Kappa {
        Kappa::new(v).unwrap()
    }

    fn cfg(x: &[f64]) -> PointConfig {
        PointConfig::new(x.to_vec()).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(PointConfig::new(vec![1.0]).is_err());
        assert!(PointConfig::new(vec![1.0, 1.0]).is_err());
        assert!(PointConfig::new(vec![0.0, 2.0, 1.0]).is_err());
    }

    #[test]
    fn n1_solves_the_system() {
        for kv in [2.0, 10.0 / 3.0, 4.0, 16.0 / 3.0, 6.0] {
            let kappa = k(kv);
            let f = builtin_n1(kappa);
            let w = WeightAssignment::uniform(kappa);
            for r in system_residuals(&f, &cfg(&[-0.3, 1.1]), &w, StencilOptions::default()).unwrap() {
                assert!(r.relative <= 1e-7, "{kv} {r:?}");
            }
        }
        let kappa = k(6.0);
        assert_eq!(builtin_n1(kappa).eval(&[0.0, 3.0]), 1.0);
    }

    #[test]
    fn constant_is_not_a_solution() {
        let kappa = k(4.0);
        let one = FnCandidate { name: "one".into(), arity: 2, f: |_: &[f64]| 1.0 };
        let w = WeightAssignment::uniform(kappa);
        let r = null_state_residual(&one, &cfg(&[0.0, 2.0]), &w, 1, StencilOptions::default()).unwrap();
        assert!((r.residual + 0.25 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn mismatched_weight_power() {
        let kappa = k(4.0);
        let h = leg_weight(2, kappa).value();
        let f = PowerProduct::new(2, vec![(1, 2, -2.0 * h)]).unwrap();
        let w = WeightAssignment::new(2, ConformalWeight(h), kappa).unwrap();
        let x = cfg(&[0.5, 1.7]);
        let r = null_state_residual(&f, &x, &w, 1, StencilOptions::default()).unwrap();
        let kv = kappa.value();
        let expect = (kv * h * (2.0 * h + 1.0) / 2.0 - 3.0 * h) * 1.2f64.powf(-2.0 * h - 2.0);
        assert!((r.residual - expect).abs() <= 1e-7 * expect.abs());
        assert!(null_state_residual(&f, &x, &w, 2, StencilOptions::default()).is_err());
    }

    #[test]
    fn ward_examples() {
        let kappa = k(3.0);
        let sum = FnCandidate { name: "sum".into(), arity: 2, f: |x: &[f64]| x[0] + x[1] };
        let [t, _, _] = ward_residuals(&sum, &cfg(&[0.2, 0.9]), &WeightAssignment::uniform(kappa), StencilOptions::default()).unwrap();
        assert!((t.residual - 2.0).abs() < 1e-12);

        let w = two_point_ward_solvable(theta1(k(6.0)), leg_weight(3, k(6.0)));
        assert!(!w.solvable);
        assert!((w.residual - w.predicted).abs() <= 1e-8 * w.predicted.abs());
        assert!(two_point_ward_solvable(ConformalWeight(5.0), ConformalWeight(5.0)).solvable);
    }

    #[test]
    fn stencil_matches_analytic() {
        let p = PowerProduct::new(3, vec![(1, 2, 0.4), (1, 3, -1.3), (2, 3, 2.2)]).unwrap();
        let x = cfg(&[-0.4, 0.3, 1.5]);
        let err = stencil_check(&p, &x, StencilOptions::default()).unwrap();
        assert!(err <= 1e-8, "{err}");
    }

    #[test]
    fn registry() {
        let kappa = k(4.0);
        let ctx = FieldContext { kappa, h: leg_weight(2, kappa), lambda0: 0.0 };
        assert_eq!(parse_candidate("n1", &ctx).unwrap().arity(), 2);
        let p = parse_candidate("power:1,2=0.5;2,3=-1", &ctx).unwrap();
        assert_eq!(p.arity(), 3);
        assert!((p.eval(&[0.0, 4.0, 5.0]) - 2.0).abs() < 1e-15);
        assert!(parse_candidate("power:2,1=1", &ctx).is_err());
        assert!(parse_candidate("power:1,2", &ctx).is_err());
        assert!(parse_candidate("manufactured:nope", &ctx).is_err());
        for (shape, _) in MANUFACTURED_SHAPES {
            parse_candidate(&format!("manufactured:{shape}"), &ctx).unwrap();
        }
    }

    #[test]
    fn random_configs_are_reproducible() {
        let a = random_configs(3, 5, 7);
        let b = random_configs(3, 5, 7);
        assert_eq!(a, b);
        assert!(a.iter().all(|c| c.min_gap() >= 0.05));
    }
}
