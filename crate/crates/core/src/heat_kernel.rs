//! The Jacobi heat kernel
//!
//! K(ρ, σ, t) = Σ_n e^{−t n(n+α+β+1)} P_n(2ρ−1) P_n(2σ−1) / (2^{−α−β−1} h_n)
//!
//! on [0, 1]², its reproducing action against w(σ) = σ^β (1−σ)^α, and a grid
//! scan of its two-sided short-time envelope.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::Kappa;
use crate::jacobi::{gauss_jacobi_rule, shifted_norms, JacobiBasis, QuadratureRule};
use crate::parallel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub alpha: f64,
    pub beta: f64,
}

impl KernelParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite() {
            Ok(KernelParams { alpha, beta })
        } else {
            Err(Error::domain(format!(
                "kernel parameters must be positive, got ({alpha}, {beta})"
            )))
        }
    }
}

/// Truncation of the eigen-series. The neglected terms are bounded in
/// absolute value by `tail_tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub n_max: usize,
    pub tail_tol: f64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            n_max: 2000,
            tail_tol: 1e-10,
        }
    }
}

/// Smallest time accepted from the command line; below it the series needs
/// more than a few thousand terms.
pub const MIN_CLI_TIME: f64 = 1e-4;

/// Heat time t = (κ/4) log(η/ε) attached to the ratio η/ε.
pub fn time_from_ratio(kappa: Kappa, eta_over_eps: f64) -> f64 {
    kappa.value() / 4.0 * eta_over_eps.ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: f64,
    /// bound on the neglected tail
    pub tail_bound: f64,
    /// number of series terms summed (n = 0..terms)
    pub terms: usize,
    /// Σ |summed terms|, for round-off estimates
    pub abs_sum: f64,
}

impl KernelValue {
    /// Truncation plus a generous round-off allowance.
    pub fn error_bound(&self) -> f64 {
        self.tail_bound + 64.0 * f64::EPSILON * self.abs_sum
    }
}

#[derive(Debug, Clone)]
pub struct HeatKernel {
    params: KernelParams,
    policy: TruncationPolicy,
    basis: JacobiBasis,
    /// 1 / (2^{−α−β−1} h_n)
    inv_norm: Vec<f64>,
    /// (max |P_n|)² / (2^{−α−β−1} h_n)
    term_cap: Vec<f64>,
    /// n (n + α + β + 1)
    spectrum: Vec<f64>,
}

impl HeatKernel {
    pub fn new(params: KernelParams, policy: TruncationPolicy) -> Result<Self> {
        let KernelParams { alpha, beta } = params;
        let n_max = policy.n_max.max(2);
        let basis = JacobiBasis::with_capacity(alpha, beta, n_max)?;
        let norms = shifted_norms(n_max, &basis);
        let mut at_plus = Vec::new();
        let mut at_minus = Vec::new();
        basis.eval_all(n_max, 1.0, &mut at_plus);
        basis.eval_all(n_max, -1.0, &mut at_minus);
        let inv_norm: Vec<f64> = norms.iter().map(|h| 1.0 / h).collect();
        let term_cap = (0..=n_max)
            .map(|n| {
                let cap = at_plus[n].abs().max(at_minus[n].abs());
                cap * cap * inv_norm[n]
            })
            .collect();
        let spectrum = (0..=n_max)
            .map(|n| n as f64 * (n as f64 + alpha + beta + 1.0))
            .collect();
        Ok(HeatKernel {
            params,
            policy,
            basis,
            inv_norm,
            term_cap,
            spectrum,
        })
    }

    pub fn params(&self) -> KernelParams {
        self.params
    }

    pub fn policy(&self) -> TruncationPolicy {
        self.policy
    }

    pub fn basis(&self) -> &JacobiBasis {
        &self.basis
    }

    /// Decay factor e^{−t n(n+α+β+1)} of mode n.
    pub fn mode_decay(&self, n: usize, t: f64) -> f64 {
        (-t * n as f64 * (n as f64 + self.params.alpha + self.params.beta + 1.0)).exp()
    }

    /// 1 / (2^{−α−β−1} h_n), computed directly for n beyond the cache.
    pub fn inverse_norm(&self, n: usize) -> f64 {
        self.inv_norm
            .get(n)
            .copied()
            .unwrap_or_else(|| 1.0 / crate::jacobi::shifted_norm_sq(n, &self.basis))
    }

    /// Number of terms needed at time `t` and the resulting tail bound.
    ///
    /// Term n is bounded by b_n = e^{−t n(n+α+β+1)} max|P_n|² / (2^{−α−β−1} h_n).
    /// Once the ratio q = b_n / b_{n−1} drops below one it keeps decreasing
    /// (the Gaussian factor dominates the polynomial growth), so the tail
    /// after n is at most b_n q / (1 − q).
    pub fn terms_for(&self, t: f64) -> Result<(usize, f64)> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::domain(format!("heat time must be positive, got {t}")));
        }
        let tol = self.policy.tail_tol;
        let mut prev = self.term_cap[0];
        let mut tail = f64::INFINITY;
        for n in 1..self.term_cap.len() {
            let b = (-t * self.spectrum[n]).exp() * self.term_cap[n];
            if b < prev {
                let q = b / prev;
                tail = b * q / (1.0 - q);
                if tail <= tol {
                    return Ok((n + 1, tail));
                }
            }
            prev = b;
        }
        Err(Error::Truncation {
            t,
            tail_bound: tail,
            n_max: self.term_cap.len() - 1,
        })
    }

    /// K(ρ, σ, t) with its truncation certificate.
    pub fn value(&self, rho: f64, sigma: f64, t: f64) -> Result<KernelValue> {
        let (terms, tail_bound) = self.terms_for(t)?;
        let (value, abs_sum) = self.partial_sum(rho, sigma, t, terms);
        Ok(KernelValue {
            value,
            tail_bound,
            terms,
            abs_sum,
        })
    }

    /// Partial sum over n = 0..terms, with no truncation check.
    pub fn value_with_terms(&self, rho: f64, sigma: f64, t: f64, terms: usize) -> f64 {
        self.partial_sum(rho, sigma, t, terms).0
    }

    fn partial_sum(&self, rho: f64, sigma: f64, t: f64, terms: usize) -> (f64, f64) {
        let mut sum = 0.0;
        let mut abs_sum = 0.0;
        let (a, b) = (self.params.alpha, self.params.beta);
        self.basis
            .for_each_pair(terms, 2.0 * rho - 1.0, 2.0 * sigma - 1.0, |n, p, q| {
                let nf = n as f64;
                let term = (-t * nf * (nf + a + b + 1.0)).exp() * p * q * self.inverse_norm(n);
                sum += term;
                abs_sum += term.abs();
            });
        (sum, abs_sum)
    }

    /// Gauss–Jacobi rule on [0, 1] that integrates the truncated kernel at
    /// time `t` against any polynomial of degree ≤ `extra_degree` exactly.
    pub fn rule_for(&self, t: f64, extra_degree: usize) -> Result<QuadratureRule> {
        let (terms, _) = self.terms_for(t)?;
        let m = (terms + extra_degree) / 2 + 2;
        Ok(gauss_jacobi_rule(m, &self.basis)?.to_unit())
    }
}

/// ∫₀¹ K(ρ, σ, t) f(σ) w(σ) dσ with the supplied rule (which must carry the
/// kernel's weight on [0, 1]).
pub fn reproducing_integral(
    rho: f64,
    t: f64,
    f: impl Fn(f64) -> f64,
    kernel: &HeatKernel,
    rule: &QuadratureRule,
) -> Result<f64> {
    let (terms, _) = kernel.terms_for(t)?;
    check_rule(kernel, rule)?;
    Ok(rule.integrate(|s| kernel.value_with_terms(rho, s, t, terms) * f(s)))
}

fn check_rule(kernel: &HeatKernel, rule: &QuadratureRule) -> Result<()> {
    let p = kernel.params();
    let unit = rule.domain == crate::jacobi::RuleDomain::Unit;
    if !unit || (rule.alpha - p.alpha).abs() > 1e-14 || (rule.beta - p.beta).abs() > 1e-14 {
        return Err(Error::precondition(
            "quadrature rule must be on [0, 1] with the kernel's weight",
        ));
    }
    Ok(())
}

/// Λ(θ, φ, t) = [t + sin(θ/2) sin(φ/2)]^{−α−1/2} [t + cos(θ/2) cos(φ/2)]^{−β−1/2}.
pub fn lambda_envelope(params: KernelParams, theta: f64, phi: f64, t: f64) -> f64 {
    let s = t + (theta / 2.0).sin() * (phi / 2.0).sin();
    let c = t + (theta / 2.0).cos() * (phi / 2.0).cos();
    s.powf(-params.alpha - 0.5) * c.powf(-params.beta - 0.5)
}

/// Rod heat kernel e^{−d²/ct} / √(πct).
pub fn gaussian_factor(diff: f64, c: f64, t: f64) -> f64 {
    (-diff * diff / (c * t)).exp() / (std::f64::consts::PI * c * t).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundEnvelope {
    pub theta: f64,
    pub phi: f64,
    pub t: f64,
    pub lambda_value: f64,
    pub gaussian_factor: f64,
}

impl BoundEnvelope {
    pub fn new(params: KernelParams, theta: f64, phi: f64, t: f64, c: f64) -> Self {
        BoundEnvelope {
            theta,
            phi,
            t,
            lambda_value: lambda_envelope(params, theta, phi, t),
            gaussian_factor: gaussian_factor(theta - phi, c, t),
        }
    }

    pub fn value(&self) -> f64 {
        self.lambda_value * self.gaussian_factor
    }
}

/// Grid for [`bound_ratio_scan`]. Angles cover [0, π] inclusive; short
/// times are log-spaced on [t_min, T], late times on (T, late_factor·T].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundGrid {
    pub n_theta: usize,
    pub n_phi: usize,
    pub n_t: usize,
    pub t_min: f64,
    pub n_t_late: usize,
    pub late_factor: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Default for BoundGrid {
    fn default() -> Self {
        BoundGrid {
            n_theta: 21,
            n_phi: 21,
            n_t: 8,
            t_min: 1e-2,
            n_t_late: 4,
            late_factor: 10.0,
            c1: 2.0,
            c2: 8.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub theta: f64,
    pub phi: f64,
    pub t: f64,
    pub kernel: f64,
    pub kernel_error: f64,
    pub envelope_c1: f64,
    pub ratio_c1: f64,
    pub envelope_c2: f64,
    pub ratio_c2: f64,
    /// kernel value exceeds ten times its error bound
    pub resolved: bool,
    pub late: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundScan {
    pub t_split: f64,
    /// min over resolved short-time points of K / (Λ g_{c1}); lower-bound certificate
    pub min_ratio_c1: f64,
    pub max_ratio_c1: f64,
    pub min_ratio_c2: f64,
    /// max over resolved short-time points of (K + err) / (Λ g_{c2}); upper-bound certificate
    pub max_ratio_c2: f64,
    pub late_min: f64,
    pub late_max: f64,
    pub resolved: usize,
    pub unresolved: usize,
    pub rows: Vec<BoundRow>,
}

impl BoundScan {
    /// Finite, positive extremes on both regimes.
    pub fn certifies_two_sided(&self) -> bool {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        ok(self.min_ratio_c1) && ok(self.max_ratio_c2) && ok(self.late_min) && ok(self.late_max)
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

pub(crate) fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), n).into_iter().map(f64::exp).collect()
}

/// Scans K(cos²(φ/2), cos²(θ/2), t) against the two-sided envelope.
pub fn bound_ratio_scan(kernel: &HeatKernel, t_split: f64, grid: &BoundGrid) -> Result<BoundScan> {
    if !(t_split > 0.0) {
        return Err(Error::domain("T must be positive"));
    }
    if !(grid.t_min > 0.0 && grid.t_min <= t_split) {
        return Err(Error::domain("grid t_min must lie in (0, T]"));
    }
    let params = kernel.params();
    let thetas = linspace(0.0, std::f64::consts::PI, grid.n_theta);
    let phis = linspace(0.0, std::f64::consts::PI, grid.n_phi);
    let mut times: Vec<(f64, bool)> = logspace(grid.t_min, t_split, grid.n_t)
        .into_iter()
        .map(|t| (t, false))
        .collect();
    if grid.n_t_late > 0 {
        let late = logspace(t_split, t_split * grid.late_factor, grid.n_t_late + 1);
        times.extend(late.into_iter().skip(1).map(|t| (t, true)));
    }
    // the smallest time decides truncation failure up front
    kernel.terms_for(grid.t_min)?;

    let mut points = Vec::with_capacity(thetas.len() * phis.len() * times.len());
    for &(t, late) in &times {
        for &theta in &thetas {
            for &phi in &phis {
                points.push((theta, phi, t, late));
            }
        }
    }
    let rows: Vec<Result<BoundRow>> = parallel::map(&points, |&(theta, phi, t, late)| {
        let rho = (phi / 2.0).cos().powi(2);
        let sigma = (theta / 2.0).cos().powi(2);
        let kv = kernel.value(rho, sigma, t)?;
        let e1 = BoundEnvelope::new(params, theta, phi, t, grid.c1).value();
        let e2 = BoundEnvelope::new(params, theta, phi, t, grid.c2).value();
        let err = kv.error_bound();
        Ok(BoundRow {
            theta,
            phi,
            t,
            kernel: kv.value,
            kernel_error: err,
            envelope_c1: e1,
            ratio_c1: kv.value / e1,
            envelope_c2: e2,
            ratio_c2: kv.value / e2,
            resolved: kv.value > 10.0 * err,
            late,
        })
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;

    let mut scan = BoundScan {
        t_split,
        min_ratio_c1: f64::INFINITY,
        max_ratio_c1: 0.0,
        min_ratio_c2: f64::INFINITY,
        max_ratio_c2: 0.0,
        late_min: f64::INFINITY,
        late_max: f64::NEG_INFINITY,
        resolved: 0,
        unresolved: 0,
        rows: Vec::new(),
    };
    for r in &rows {
        if r.late {
            scan.late_min = scan.late_min.min(r.kernel);
            scan.late_max = scan.late_max.max(r.kernel);
            continue;
        }
        // below its error bound K carries no information about either envelope
        if r.resolved {
            scan.resolved += 1;
            if r.envelope_c2 > 0.0 {
                scan.max_ratio_c2 = scan.max_ratio_c2.max((r.kernel + r.kernel_error) / r.envelope_c2);
                scan.min_ratio_c2 = scan.min_ratio_c2.min(r.ratio_c2);
            }
            if r.envelope_c1 > 0.0 {
                scan.min_ratio_c1 = scan.min_ratio_c1.min(r.ratio_c1);
                scan.max_ratio_c1 = scan.max_ratio_c1.max(r.ratio_c1);
            }
        } else {
            scan.unresolved += 1;
        }
    }
    scan.rows = rows;
    Ok(scan)
}

pub fn bound_csv(rows: &[BoundRow]) -> String {
    let mut out = String::from("theta,phi,t,kernel,kernel_error,envelope_c1,ratio_c1,envelope_c2,ratio_c2,resolved,late\n");
    for r in rows {
        out.push_str(&format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{},{}\n",
            r.theta, r.phi, r.t, r.kernel, r.kernel_error, r.envelope_c1, r.ratio_c1, r.envelope_c2, r.ratio_c2,
            r.resolved, r.late
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::beta;
    use approx::assert_relative_eq;

    fn kernel(a: f64, b: f64) -> HeatKernel {
        HeatKernel::new(KernelParams::new(a, b).unwrap(), TruncationPolicy::default()).unwrap()
    }

    #[test]
    fn rejects_non_positive_time() {
        let k = kernel(0.5, 0.5);
        assert!(matches!(k.value(0.3, 0.4, 0.0), Err(Error::Domain(_))));
        assert!(matches!(k.value(0.3, 0.4, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn truncation_error_when_n_max_too_small() {
        let k = HeatKernel::new(
            KernelParams::new(1.0 / 3.0, 1.0 / 3.0).unwrap(),
            TruncationPolicy { n_max: 50, tail_tol: 1e-10 },
        )
        .unwrap();
        match k.value(0.5, 0.5, 1e-4) {
            Err(Error::Truncation { n_max, tail_bound, .. }) => {
                assert_eq!(n_max, 50);
                assert!(tail_bound > 1e-10);
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn long_time_limit_is_inverse_beta() {
        let (a, b) = (1.0 / 3.0, 0.7);
        let k = kernel(a, b);
        let limit = 1.0 / beta(b + 1.0, a + 1.0);
        for (rho, sigma) in [(0.1, 0.9), (0.5, 0.5), (0.0, 1.0)] {
            let v = k.value(rho, sigma, 60.0).unwrap();
            assert_relative_eq!(v.value, limit, max_relative = 1e-12);
        }
    }

    #[test]
    fn tail_bound_dominates_neglected_terms() {
        let k = kernel(0.4, 1.3);
        for t in [1e-3, 1e-2, 0.3] {
            let v = k.value(0.23, 0.71, t).unwrap();
            let longer = k.value_with_terms(0.23, 0.71, t, v.terms + 400);
            assert!((longer - v.value).abs() <= v.tail_bound.max(1e-13), "t = {t}");
        }
    }

    #[test]
    fn mass_is_one() {
        let k = kernel(1.0 / 3.0, 1.0 / 3.0);
        for t in [1e-3, 1e-2, 0.1, 1.0, 10.0] {
            let rule = k.rule_for(t, 0).unwrap();
            for rho in [0.0, 0.2, 0.5, 0.97] {
                let m = reproducing_integral(rho, t, |_| 1.0, &k, &rule).unwrap();
                assert!((m - 1.0).abs() <= 1e-9, "t = {t}, rho = {rho}, mass = {m}");
            }
        }
    }

    #[test]
    fn single_mode_decays() {
        let (a, b) = (0.8, 0.3);
        let k = kernel(a, b);
        let t = 0.05;
        let rule = k.rule_for(t, 1).unwrap();
        let jb = k.basis().clone();
        for rho in [0.15, 0.5, 0.8] {
            let got = reproducing_integral(rho, t, |s| jb.eval(1, 2.0 * s - 1.0), &k, &rule).unwrap();
            let expect = (-t * (a + b + 2.0)).exp() * jb.eval(1, 2.0 * rho - 1.0);
            assert!((got - expect).abs() <= 1e-10);
        }
    }

    #[test]
    fn reproducing_limit_improves() {
        let k = kernel(1.0 / 3.0, 1.0 / 3.0);
        let f = |s: f64| s * (1.0 - s);
        let mut last = f64::INFINITY;
        for t in [1e-1, 1e-2, 1e-3] {
            let rule = k.rule_for(t, 2).unwrap();
            let err = (reproducing_integral(0.5, t, f, &k, &rule).unwrap() - 0.25).abs();
            assert!(err < last);
            last = err;
        }
        assert!(last <= 2e-2);
    }

    #[test]
    fn rejects_mismatched_rule() {
        let k = kernel(0.5, 0.5);
        let other = gauss_jacobi_rule(10, &JacobiBasis::new(0.2, 0.5).unwrap()).unwrap().to_unit();
        assert!(reproducing_integral(0.5, 1.0, |_| 1.0, &k, &other).is_err());
    }

    #[test]
    fn envelope_on_diagonal_at_zero_time() {
        let p = KernelParams::new(0.3, 0.6).unwrap();
        let theta: f64 = 1.1;
        let expect = ((theta / 2.0).sin().powi(2)).powf(-0.8) * ((theta / 2.0).cos().powi(2)).powf(-1.1);
        assert_relative_eq!(lambda_envelope(p, theta, theta, 0.0), expect, max_relative = 1e-14);
    }
}
