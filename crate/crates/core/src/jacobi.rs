//! Jacobi polynomials P_n^(α,β) on [−1, 1], their shifted form on [0, 1],
//! norms, the Jacobi differential operator and Gauss–Jacobi quadrature.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::special::{gamma, ln_gamma};

/// Three-term recurrence coefficients: P_n = (a y + b) P_{n−1} − c P_{n−2}.
#[derive(Debug, Clone, Copy)]
struct Step {
    a: f64,
    b: f64,
    c: f64,
}

/// Jacobi parameter pair with a cache of recurrence coefficients.
#[derive(Debug, Clone)]
pub struct JacobiBasis {
    alpha: f64,
    beta: f64,
    steps: Vec<Step>,
}

fn recurrence_step(n: usize, alpha: f64, beta: f64) -> Step {
    debug_assert!(n >= 2);
    let nf = n as f64;
    let s = alpha + beta;
    let two_n_s = 2.0 * nf + s;
    let denom = 2.0 * nf * (nf + s) * (two_n_s - 2.0);
    Step {
        a: (two_n_s - 1.0) * two_n_s * (two_n_s - 2.0) / denom,
        b: (two_n_s - 1.0) * (alpha * alpha - beta * beta) / denom,
        c: 2.0 * (nf + alpha - 1.0) * (nf + beta - 1.0) * two_n_s / denom,
    }
}

impl JacobiBasis {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        Self::with_capacity(alpha, beta, 32)
    }

    /// Precomputes recurrence coefficients up to `max_degree`.
    pub fn with_capacity(alpha: f64, beta: f64, max_degree: usize) -> Result<Self> {
        if !(alpha > -1.0 && beta > -1.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::domain(format!(
                "Jacobi parameters must exceed -1, got ({alpha}, {beta})"
            )));
        }
        let steps = (2..=max_degree.max(1))
            .map(|n| recurrence_step(n, alpha, beta))
            .collect();
        Ok(JacobiBasis { alpha, beta, steps })
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Basis with α and β exchanged.
    pub fn swapped(&self) -> JacobiBasis {
        JacobiBasis::with_capacity(self.beta, self.alpha, self.steps.len() + 1)
            .expect("swapping keeps parameters admissible")
    }

    #[inline]
    fn step(&self, n: usize) -> Step {
        self.steps
            .get(n - 2)
            .copied()
            .unwrap_or_else(|| recurrence_step(n, self.alpha, self.beta))
    }

    #[inline]
    fn p1(&self, y: f64) -> f64 {
        (self.alpha + 1.0) + (self.alpha + self.beta + 2.0) * (y - 1.0) / 2.0
    }

    /// P_n(y) by the three-term recurrence.
    pub fn eval(&self, n: usize, y: f64) -> f64 {
        if n == 0 {
            return 1.0;
        }
        let mut prev = 1.0;
        let mut cur = self.p1(y);
        for m in 2..=n {
            let st = self.step(m);
            let next = (st.a * y + st.b) * cur - st.c * prev;
            prev = cur;
            cur = next;
        }
        cur
    }

    /// Fills `out` with P_0(y), …, P_n(y).
    pub fn eval_all(&self, n: usize, y: f64, out: &mut Vec<f64>) {
        out.clear();
        out.push(1.0);
        if n == 0 {
            return;
        }
        out.push(self.p1(y));
        for m in 2..=n {
            let st = self.step(m);
            let next = (st.a * y + st.b) * out[m - 1] - st.c * out[m - 2];
            out.push(next);
        }
    }

    /// Runs the recurrence at two points at once, calling `f(n, P_n(y1), P_n(y2))`
    /// for n = 0..count.
    pub(crate) fn for_each_pair(&self, count: usize, y1: f64, y2: f64, mut f: impl FnMut(usize, f64, f64)) {
        if count == 0 {
            return;
        }
        f(0, 1.0, 1.0);
        if count == 1 {
            return;
        }
        let (mut a_prev, mut b_prev) = (1.0, 1.0);
        let (mut a_cur, mut b_cur) = (self.p1(y1), self.p1(y2));
        f(1, a_cur, b_cur);
        for m in 2..count {
            let st = self.step(m);
            let a_next = (st.a * y1 + st.b) * a_cur - st.c * a_prev;
            let b_next = (st.a * y2 + st.b) * b_cur - st.c * b_prev;
            a_prev = a_cur;
            b_prev = b_cur;
            a_cur = a_next;
            b_cur = b_next;
            f(m, a_cur, b_cur);
        }
    }

    /// k-th derivative of P_n at y, via
    /// d/dy P_n^(α,β) = (n+α+β+1)/2 · P_{n−1}^(α+1,β+1).
    pub fn derivative(&self, n: usize, k: usize, y: f64) -> f64 {
        if k > n {
            return 0.0;
        }
        let mut factor = 1.0;
        for j in 0..k {
            factor *= (n as f64 + self.alpha + self.beta + 1.0 + j as f64) / 2.0;
        }
        let shifted = JacobiBasis::with_capacity(
            self.alpha + k as f64,
            self.beta + k as f64,
            n - k,
        )
        .expect("shifted parameters stay admissible");
        factor * shifted.eval(n - k, y)
    }

    /// max_{[−1,1]} |P_n| = max(|P_n(1)|, |P_n(−1)|), valid for max(α, β) ≥ −1/2.
    pub fn endpoint_max(&self, n: usize) -> f64 {
        self.eval(n, 1.0).abs().max(self.eval(n, -1.0).abs())
    }
}

/// Explicit Γ-sum form of P_n(y). Kept as an independent cross-check of the
/// recurrence. For y < 0 the sum is taken about y = −1 via
/// P_n^{(α,β)}(y) = (−1)^n P_n^{(β,α)}(−y), which keeps |(y−1)/2| ≤ 1/2.
pub fn jacobi_poly_gamma_sum(n: usize, alpha: f64, beta: f64, y: f64) -> f64 {
    if y < 0.0 {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        return sign * gamma_sum_about_one(n, beta, alpha, -y);
    }
    gamma_sum_about_one(n, alpha, beta, y)
}

fn gamma_sum_about_one(n: usize, alpha: f64, beta: f64, y: f64) -> f64 {
    // the Γ ratios are finite products, so no Γ evaluation is needed:
    // Γ(α+n+1)/Γ(α+m+1) = Π_{j=m+1..n} (α+j), Γ(α+β+n+m+1)/Γ(α+β+n+1) = Π_{j=1..m} (α+β+n+j).
    // Terms alternate and can exceed the result by many orders of magnitude,
    // so everything is carried in double-double.
    let nf = n as f64;
    let z = TwoFloat::new_add(y, -1.0) / 2.0;
    let ab = TwoFloat::new_add(alpha, beta);
    let mut sum = TwoFloat::from(0.0);
    let mut binom = TwoFloat::from(1.0);
    let mut zm = TwoFloat::from(1.0);
    for m in 0..=n {
        let mf = m as f64;
        if m > 0 {
            binom = binom * (nf - mf + 1.0) / mf;
            zm = zm * z;
        }
        let upper = (m + 1..=n).fold(TwoFloat::from(1.0), |acc, j| acc * TwoFloat::new_add(alpha, j as f64));
        let shifted = (1..=m).fold(TwoFloat::from(1.0), |acc, j| acc * (ab + (nf + j as f64)));
        sum += binom * upper * shifted * zm;
    }
    let factorial = (1..=n).fold(TwoFloat::from(1.0), |acc, j| acc * j as f64);
    f64::from(sum / factorial)
}

pub fn jacobi_poly(n: usize, basis: &JacobiBasis, y: f64) -> f64 {
    basis.eval(n, y)
}

/// h_n = ‖P_n‖² in L²_ϱ(−1, 1).
pub fn jacobi_norm_sq(n: usize, basis: &JacobiBasis) -> f64 {
    let (a, b) = (basis.alpha, basis.beta);
    let nf = n as f64;
    let two = (a + b + 1.0).exp2();
    if nf + a + b + 2.0 < 160.0 {
        // (2n+α+β+1)Γ(n+α+β+1) = Γ(α+β+2) at n = 0, which also covers α+β+1 = 0
        let denom = if n == 0 {
            gamma(a + b + 2.0)
        } else {
            (2.0 * nf + a + b + 1.0) * gamma(nf + 1.0) * gamma(nf + a + b + 1.0)
        };
        return two * gamma(nf + a + 1.0) * gamma(nf + b + 1.0) / denom;
    }
    (two.ln() + ln_gamma(nf + a + 1.0) + ln_gamma(nf + b + 1.0)
        - (2.0 * nf + a + b + 1.0).ln()
        - ln_gamma(nf + 1.0)
        - ln_gamma(nf + a + b + 1.0))
    .exp()
}

/// ‖P_n ∘ (2σ−1)‖² in L²_w(0, 1), equal to 2^{−α−β−1} h_n.
pub fn shifted_norm_sq(n: usize, basis: &JacobiBasis) -> f64 {
    jacobi_norm_sq(n, basis) * (-(basis.alpha + basis.beta + 1.0) * std::f64::consts::LN_2).exp()
}

/// Normalised squared norms 2^{−α−β−1} h_n for n = 0..=n_max by the
/// ratio recurrence in n.
pub fn shifted_norms(n_max: usize, basis: &JacobiBasis) -> Vec<f64> {
    let (a, b) = (basis.alpha, basis.beta);
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(shifted_norm_sq(0, basis));
    for n in 1..=n_max {
        let nf = n as f64;
        let ratio = if n == 1 {
            // h_1/h_0 with the (α+β+1) factors cancelled
            (a + 1.0) * (b + 1.0) / (a + b + 3.0)
        } else {
            (2.0 * nf + a + b - 1.0) * (nf + a) * (nf + b)
                / ((2.0 * nf + a + b + 1.0) * nf * (nf + a + b))
        };
        let prev = out[n - 1];
        out.push(prev * ratio);
    }
    out
}

/// Weight function of the basis on one of its two domains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WeightFunction {
    /// ϱ(y) = (1−y)^α (1+y)^β on [−1, 1]
    Symmetric { alpha: f64, beta: f64 },
    /// w(σ) = σ^β (1−σ)^α on [0, 1]
    Unit { alpha: f64, beta: f64 },
}

impl WeightFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            WeightFunction::Symmetric { alpha, beta } => (1.0 - x).powf(alpha) * (1.0 + x).powf(beta),
            WeightFunction::Unit { alpha, beta } => x.powf(beta) * (1.0 - x).powf(alpha),
        }
    }
}

/// Residual of the eigen-relation J[P_n] = n(n+α+β+1) P_n with exact
/// polynomial derivatives. Returns the maximum absolute residual over `grid`.
pub fn jacobi_operator_residual(n: usize, basis: &JacobiBasis, grid: &[f64]) -> f64 {
    let (a, b) = (basis.alpha, basis.beta);
    let eig = n as f64 * (n as f64 + a + b + 1.0);
    grid.iter()
        .map(|&y| {
            let p = basis.eval(n, y);
            let d1 = basis.derivative(n, 1, y);
            let d2 = basis.derivative(n, 2, y);
            let lhs = (1.0 - y * y) * d2 + (b - a - (a + b + 2.0) * y) * d1;
            (lhs + eig * p).abs()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RuleDomain {
    Symmetric,
    Unit,
}

/// Gauss quadrature against a Jacobi weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub domain: RuleDomain,
    pub alpha: f64,
    pub beta: f64,
}

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Σ w_i f(x_i), approximating ∫ f · weight.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Maps a rule on [−1, 1] with weight ϱ to [0, 1] with weight w.
    pub fn to_unit(&self) -> QuadratureRule {
        if self.domain == RuleDomain::Unit {
            return self.clone();
        }
        let scale = (-(self.alpha + self.beta + 1.0) * std::f64::consts::LN_2).exp();
        QuadratureRule {
            nodes: self.nodes.iter().map(|y| (1.0 + y) / 2.0).collect(),
            weights: self.weights.iter().map(|w| w * scale).collect(),
            domain: RuleDomain::Unit,
            alpha: self.alpha,
            beta: self.beta,
        }
    }
}

/// m-point Gauss–Jacobi rule on [−1, 1] from the eigen-decomposition of the
/// symmetric Jacobi matrix.
pub fn gauss_jacobi_rule(m: usize, basis: &JacobiBasis) -> Result<QuadratureRule> {
    if m == 0 {
        return Err(Error::domain("quadrature order must be positive"));
    }
    let (a, b) = (basis.alpha, basis.beta);
    let s = a + b;
    let mut jm = DMatrix::<f64>::zeros(m, m);
    for k in 0..m {
        let kf = k as f64;
        let diag = if k == 0 {
            (b - a) / (s + 2.0)
        } else {
            (b * b - a * a) / ((2.0 * kf + s) * (2.0 * kf + s + 2.0))
        };
        jm[(k, k)] = diag;
        if k + 1 < m {
            let j = (k + 1) as f64;
            let off_sq = if k == 0 {
                4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + s) * (2.0 + s) * (3.0 + s))
            } else {
                4.0 * j * (j + a) * (j + b) * (j + s)
                    / ((2.0 * j + s).powi(2) * (2.0 * j + s + 1.0) * (2.0 * j + s - 1.0))
            };
            let off = off_sq.sqrt();
            jm[(k, k + 1)] = off;
            jm[(k + 1, k)] = off;
        }
    }
    let mu0 = jacobi_norm_sq(0, basis);
    let eig = SymmetricEigen::try_new(jm, f64::EPSILON, 0).ok_or_else(|| {
        Error::Numeric(format!(
            "Jacobi matrix eigen-solve did not converge (m = {m}, alpha = {a}, beta = {b})"
        ))
    })?;
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    if let Some(bad) = pairs.iter().find(|(x, w)| !(x.abs() < 1.0 && *w > 0.0)) {
        return Err(Error::Numeric(format!(
            "invalid node/weight pair {bad:?} (m = {m}, alpha = {a}, beta = {b})"
        )));
    }
    let (nodes, weights) = pairs.into_iter().unzip();
    Ok(QuadratureRule {
        nodes,
        weights,
        domain: RuleDomain::Symmetric,
        alpha: a,
        beta: b,
    })
}

/// m-point Gauss–Legendre rule on [lo, hi].
pub fn gauss_legendre(m: usize, lo: f64, hi: f64) -> Result<QuadratureRule> {
    let basis = JacobiBasis::new(0.0, 0.0)?;
    let rule = gauss_jacobi_rule(m, &basis)?;
    let half = (hi - lo) / 2.0;
    Ok(QuadratureRule {
        nodes: rule.nodes.iter().map(|y| lo + half * (1.0 + y)).collect(),
        weights: rule.weights.iter().map(|w| w * half).collect(),
        domain: RuleDomain::Symmetric,
        alpha: 0.0,
        beta: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::beta;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn basis(a: f64, b: f64) -> JacobiBasis {
        JacobiBasis::new(a, b).unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(JacobiBasis::new(-1.0, 0.0).is_err());
        assert!(JacobiBasis::new(0.0, -1.5).is_err());
    }

    #[test]
    fn low_degree_values() {
        let b = basis(0.7, 1.3);
        assert_eq!(b.eval(0, 0.3), 1.0);
        assert_abs_diff_eq!(b.eval(1, 1.0), 1.7, epsilon = 1e-15);
        let leg = basis(0.0, 0.0);
        for y in [-0.9, -0.1, 0.4, 1.0] {
            assert_abs_diff_eq!(leg.eval(1, y), y, epsilon = 1e-15);
            assert_abs_diff_eq!(leg.eval(2, y), 1.5 * y * y - 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn endpoint_value_is_binomial() {
        let b = basis(1.0 / 3.0, 2.0);
        for n in 0..30 {
            let expect = gamma(1.0 / 3.0 + n as f64 + 1.0) / (gamma(n as f64 + 1.0) * gamma(4.0 / 3.0));
            assert_relative_eq!(b.eval(n, 1.0), expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn eval_all_matches_eval() {
        let b = JacobiBasis::with_capacity(0.4, 0.9, 10).unwrap();
        let mut out = Vec::new();
        b.eval_all(25, 0.37, &mut out);
        for (n, v) in out.iter().enumerate() {
            assert_eq!(*v, b.eval(n, 0.37));
        }
    }

    #[test]
    fn operator_residual_examples() {
        let grid: Vec<f64> = (1..40).map(|i| -1.0 + i as f64 / 20.0).collect();
        assert_eq!(jacobi_operator_residual(0, &basis(0.3, 0.8), &grid), 0.0);
        assert!(jacobi_operator_residual(1, &basis(0.0, 0.0), &grid) <= 1e-11);
        for (a, bb) in [(1.0 / 3.0, 1.0 / 3.0), (2.0, 0.5), (0.01, 3.7)] {
            let jb = basis(a, bb);
            for n in 0..=20 {
                let pmax = grid.iter().map(|&y| jb.eval(n, y).abs()).fold(0.0, f64::max);
                assert!(jacobi_operator_residual(n, &jb, &grid) <= 1e-9 * pmax.max(1.0));
            }
        }
    }

    #[test]
    fn operator_residual_matches_finite_differences() {
        // independent check of the derivative identity
        let jb = basis(0.6, 1.4);
        let n = 7;
        let hstep = 1e-3;
        for &y in &[-0.7, -0.2, 0.35, 0.8] {
            let f = |x: f64| jb.eval(n, x);
            let d1 = (f(y - 2.0 * hstep) - 8.0 * f(y - hstep) + 8.0 * f(y + hstep) - f(y + 2.0 * hstep))
                / (12.0 * hstep);
            let d2 = (-f(y - 2.0 * hstep) + 16.0 * f(y - hstep) - 30.0 * f(y) + 16.0 * f(y + hstep)
                - f(y + 2.0 * hstep))
                / (12.0 * hstep * hstep);
            assert_relative_eq!(d1, jb.derivative(n, 1, y), max_relative = 1e-8);
            assert_relative_eq!(d2, jb.derivative(n, 2, y), max_relative = 1e-6);
        }
    }

    #[test]
    fn norm_examples() {
        assert_relative_eq!(jacobi_norm_sq(0, &basis(0.0, 0.0)), 2.0, max_relative = 1e-15);
        for (a, bb) in [(0.3, 0.3), (1.7, 0.2), (2.0, 5.0)] {
            let jb = basis(a, bb);
            assert_relative_eq!(shifted_norm_sq(0, &jb), beta(bb + 1.0, a + 1.0), max_relative = 1e-13);
            let via_ratio = shifted_norms(15, &jb);
            for n in 0..=15 {
                let direct = shifted_norm_sq(n, &jb);
                assert_relative_eq!(via_ratio[n], direct, max_relative = 1e-12);
                assert_relative_eq!(
                    direct,
                    jacobi_norm_sq(n, &jb) * 2f64.powf(-a - bb - 1.0),
                    max_relative = 1e-12
                );
            }
        }
    }

    #[test]
    fn quadrature_norm_and_orthogonality() {
        let jb = basis(1.0 / 3.0, 1.0 / 3.0);
        let rule = gauss_jacobi_rule(20, &jb).unwrap();
        for n in 0..=15 {
            let q = rule.integrate(|y| jb.eval(n, y).powi(2));
            assert_relative_eq!(q, jacobi_norm_sq(n, &jb), max_relative = 1e-10);
        }
        let cross = rule.integrate(|y| jb.eval(3, y) * jb.eval(5, y));
        assert!(cross.abs() <= 1e-10);
    }

    #[test]
    fn quadrature_examples() {
        let leg = gauss_jacobi_rule(1, &basis(0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(leg.nodes[0], 0.0, epsilon = 1e-15);
        assert_relative_eq!(leg.weights[0], 2.0, max_relative = 1e-14);

        let jb = basis(1.0 / 3.0, 1.0 / 3.0);
        let unit = gauss_jacobi_rule(20, &jb).unwrap().to_unit();
        let mass: f64 = unit.weights.iter().sum();
        assert_relative_eq!(mass, beta(4.0 / 3.0, 4.0 / 3.0), max_relative = 1e-12);
        assert!(unit.nodes.iter().all(|&s| s > 0.0 && s < 1.0));
    }

    #[test]
    fn quadrature_exact_for_monomials() {
        let jb = basis(0.8, 2.2);
        let m = 9;
        let rule = gauss_jacobi_rule(m, &jb).unwrap().to_unit();
        for k in 0..2 * m {
            let q = rule.integrate(|s| s.powi(k as i32));
            // ∫ σ^{β+k}(1−σ)^α dσ
            let exact = beta(2.2 + k as f64 + 1.0, 1.8);
            assert_relative_eq!(q, exact, max_relative = 1e-10);
        }
    }

    #[test]
    fn legendre_on_interval() {
        let rule = gauss_legendre(6, 1.0, 3.0).unwrap();
        assert_relative_eq!(rule.integrate(|x| x.powi(5)), (3f64.powi(6) - 1.0) / 6.0, max_relative = 1e-13);
    }

    #[test]
    fn large_rule_is_sane() {
        let jb = basis(0.25, 1.5);
        let rule = gauss_jacobi_rule(400, &jb).unwrap();
        assert_eq!(rule.order(), 400);
        assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
        assert_relative_eq!(rule.weights.iter().sum::<f64>(), jacobi_norm_sq(0, &jb), max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn recurrence_agrees_with_gamma_sum(a in -0.9f64..4.0, b in -0.9f64..4.0, y in -1.0f64..1.0, n in 0usize..=8) {
            let jb = JacobiBasis::new(a, b).unwrap();
            let rec = jb.eval(n, y);
            let sum = jacobi_poly_gamma_sum(n, a, b, y);
            prop_assert!((rec - sum).abs() <= 1e-10 * rec.abs().max(1.0), "{rec} vs {sum}");
        }

        #[test]
        fn reflection_symmetry(a in -0.9f64..4.0, b in -0.9f64..4.0, y in -1.0f64..1.0, n in 0usize..=25) {
            let p = JacobiBasis::new(a, b).unwrap();
            let q = p.swapped();
            let lhs = p.eval(n, -y);
            let rhs = if n % 2 == 0 { q.eval(n, y) } else { -q.eval(n, y) };
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
        }
    }
}
