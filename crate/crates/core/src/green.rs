//! Causal Green functions: the one-interval kernel J(δ, η) of the Euler
//! operator and the two-interval kernel G(ρ, ε; σ, η) built on the Jacobi
//! heat kernel.

use serde::{Deserialize, Serialize};

use crate::asymptotics::{fit_exponent, ExponentEstimate};
use crate::error::{Error, Result};
use crate::exponents::{
    eigenvalue, jacobi_params, kpz, theta1, ConformalWeight, Kappa, KpzPair,
};
use crate::fd;
use crate::heat_kernel::{logspace, time_from_ratio, HeatKernel, KernelParams, TruncationPolicy};
use crate::jacobi::{jacobi_norm_sq, QuadratureRule};
use crate::parallel;

/// J(δ, η) = (4/κ)/⅄(d) · η · [1 − (δ/η)^⅄(d)] for δ < η, zero otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneIntervalGreen {
    pub d: ConformalWeight,
    pub kappa: Kappa,
    pub pair: KpzPair,
}

impl OneIntervalGreen {
    pub fn new(d: ConformalWeight, kappa: Kappa) -> Result<Self> {
        let pair = kpz(d, kappa)?;
        if !(pair.gap > 0.0) {
            return Err(Error::domain("one-interval Green function needs a positive gap"));
        }
        Ok(OneIntervalGreen { d, kappa, pair })
    }

    pub fn gap(&self) -> f64 {
        self.pair.gap
    }

    pub fn value(&self, delta: f64, eta: f64) -> f64 {
        if delta >= eta {
            return 0.0;
        }
        let k = self.kappa.value();
        let g = self.pair.gap;
        4.0 / k / g * eta * (1.0 - (delta / eta).powf(g))
    }

    /// ∂δ J and ∂δ² J from the closed form (δ < η).
    pub fn derivatives(&self, delta: f64, eta: f64) -> (f64, f64) {
        if delta >= eta {
            return (0.0, 0.0);
        }
        let k = self.kappa.value();
        let g = self.pair.gap;
        let r = delta / eta;
        let d1 = -4.0 / k * r.powf(g - 1.0);
        let d2 = -4.0 / k * (g - 1.0) * r.powf(g - 2.0) / eta;
        (d1, d2)
    }

    /// Left derivative of J(·, η) at δ = η by extrapolated backward
    /// differences; the closed form gives −4/κ.
    pub fn coincidence_slope(&self, eta: f64) -> f64 {
        fd::d1_left(|d| self.value(d, eta), eta, 1e-2 * eta, 6)
    }

    /// L̃[u] = κ/4 u″ + (κΔ−(d)/2 + 1) u′/δ, returned as (value, largest term).
    pub fn euler_operator(&self, u1: f64, u2: f64, delta: f64) -> (f64, f64) {
        let k = self.kappa.value();
        let a = k / 4.0 * u2;
        let b = (k * self.pair.delta_minus / 2.0 + 1.0) * u1 / delta;
        (a + b, a.abs().max(b.abs()))
    }

    /// max over the grid of |L̃[J(·, η)]| / (largest term), exact derivatives.
    pub fn annihilation_residual(&self, eta: f64, grid: &[f64]) -> Result<f64> {
        let mut worst = 0.0f64;
        for &delta in grid {
            if !(delta > 0.0 && delta < eta) {
                return Err(Error::precondition("grid must lie strictly inside (0, eta)"));
            }
            let (u1, u2) = self.derivatives(delta, eta);
            let (r, scale) = self.euler_operator(u1, u2, delta);
            let rel = if scale > 0.0 { r.abs() / scale } else { r.abs() };
            worst = worst.max(rel);
        }
        Ok(worst)
    }

    /// L̃[δ^⅄] relative to its largest term, evaluated at δ.
    pub fn power_residual(&self, delta: f64) -> f64 {
        let g = self.pair.gap;
        let u1 = g * delta.powf(g - 1.0);
        let u2 = g * (g - 1.0) * delta.powf(g - 2.0);
        let (r, scale) = self.euler_operator(u1, u2, delta);
        if scale > 0.0 {
            r.abs() / scale
        } else {
            r.abs()
        }
    }
}

/// Σ_n(σ) = f(σ) P_n(2σ−1) with f(σ) = σ^{Δ+(θ1)+4/κ}(1−σ)^{Δ+(h)+4/κ}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaEigenfunction {
    pub n: usize,
    pub left_exponent: f64,
    pub right_exponent: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjointResidual {
    pub rho: f64,
    pub eps: f64,
    pub sigma: f64,
    pub eta: f64,
    pub residual: f64,
    /// largest single term of P*[G]
    pub scale: f64,
    pub step_sigma: f64,
    pub step_eta: f64,
    /// false when the stencil is too close to σ ∈ {0, 1} or η = ε
    pub reliable: bool,
}

impl AdjointResidual {
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.residual.abs() / self.scale
        } else {
            self.residual.abs()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproducingRecord {
    pub rho: f64,
    pub eps: f64,
    pub b: f64,
    pub target: f64,
    pub etas: Vec<f64>,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
}

impl ReproducingRecord {
    pub fn final_error(&self) -> f64 {
        self.errors.last().copied().unwrap_or(f64::NAN)
    }

    pub fn monotone(&self) -> bool {
        self.errors.windows(2).all(|w| w[1] <= w[0])
    }
}

#[derive(Debug, Clone)]
pub struct TwoIntervalGreen {
    pub h: ConformalWeight,
    pub kappa: Kappa,
    pub alpha: f64,
    pub beta: f64,
    /// Δ+(θ1)
    pub plus_theta1: f64,
    /// Δ+(h)
    pub plus_h: f64,
    pub theta1: f64,
    pub lambda0: f64,
    kernel: HeatKernel,
}

impl TwoIntervalGreen {
    pub fn new(h: ConformalWeight, kappa: Kappa, policy: TruncationPolicy) -> Result<Self> {
        let jp = jacobi_params(h, kappa)?;
        let kernel = HeatKernel::new(KernelParams::new(jp.alpha, jp.beta)?, policy)?;
        Ok(TwoIntervalGreen {
            h,
            kappa,
            alpha: jp.alpha,
            beta: jp.beta,
            plus_theta1: kpz(theta1(kappa), kappa)?.delta_plus,
            plus_h: kpz(h, kappa)?.delta_plus,
            theta1: theta1(kappa).value(),
            lambda0: eigenvalue(0, h, kappa)?.lambda,
            kernel,
        })
    }

    pub fn kernel(&self) -> &HeatKernel {
        &self.kernel
    }

    pub fn time(&self, eps: f64, eta: f64) -> f64 {
        time_from_ratio(self.kappa, eta / eps)
    }

    /// Exponents of f at σ = 0 and σ = 1.
    pub fn boundary_exponents(&self) -> (f64, f64) {
        let four_k = 4.0 / self.kappa.value();
        (self.plus_theta1 + four_k, self.plus_h + four_k)
    }

    fn prefactor(&self, rho: f64, sigma: f64) -> f64 {
        sigma.powf(self.beta + 1.0)
            * (1.0 - sigma).powf(self.alpha + 1.0)
            * (rho / sigma).powf(self.plus_theta1)
            * ((1.0 - rho) / (1.0 - sigma)).powf(self.plus_h)
    }

    fn check_point(rho: f64, sigma: f64, eps: f64, eta: f64) -> Result<()> {
        let open = |x: f64| x > 0.0 && x < 1.0;
        if !open(rho) || !open(sigma) || !(eps > 0.0) || !(eta > 0.0) {
            return Err(Error::domain(format!(
                "need rho, sigma in (0, 1) and eps, eta > 0, got ({rho}, {eps}; {sigma}, {eta})"
            )));
        }
        Ok(())
    }

    /// G(ρ, ε; σ, η) from the heat kernel at t = (κ/4) log(η/ε).
    pub fn value(&self, rho: f64, eps: f64, sigma: f64, eta: f64) -> Result<f64> {
        Self::check_point(rho, sigma, eps, eta)?;
        if eta <= eps {
            return Ok(0.0);
        }
        let k = self.kernel.value(rho, sigma, self.time(eps, eta))?;
        Ok(-self.prefactor(rho, sigma) * eta * (eps / eta).powf(self.lambda0) * k.value)
    }

    /// Same as [`value`](Self::value) with a fixed number of kernel terms.
    pub fn value_with_terms(&self, rho: f64, eps: f64, sigma: f64, eta: f64, terms: usize) -> f64 {
        if eta <= eps {
            return 0.0;
        }
        let k = self.kernel.value_with_terms(rho, sigma, self.time(eps, eta), terms);
        -self.prefactor(rho, sigma) * eta * (eps / eta).powf(self.lambda0) * k
    }

    /// G summed directly over the eigenvalues λ_n, with Γ-function norms.
    pub fn value_series(&self, rho: f64, eps: f64, sigma: f64, eta: f64) -> Result<f64> {
        Self::check_point(rho, sigma, eps, eta)?;
        if eta <= eps {
            return Ok(0.0);
        }
        let (terms, _) = self.kernel.terms_for(self.time(eps, eta))?;
        let basis = self.kernel.basis();
        let norm_shift = (-(self.alpha + self.beta + 1.0)).exp2();
        let ratio = eps / eta;
        let mut sum = 0.0;
        for n in 0..terms + 8 {
            let lambda = eigenvalue(n, self.h, self.kappa)?.lambda;
            let p = basis.eval(n, 2.0 * rho - 1.0) * basis.eval(n, 2.0 * sigma - 1.0);
            sum += ratio.powf(lambda) * p / (norm_shift * jacobi_norm_sq(n, basis));
        }
        Ok(-self.prefactor(rho, sigma) * eta * sum)
    }

    pub fn eigenfunction(&self, n: usize) -> Result<SigmaEigenfunction> {
        let (l, r) = self.boundary_exponents();
        Ok(SigmaEigenfunction {
            n,
            left_exponent: l,
            right_exponent: r,
            lambda: eigenvalue(n, self.h, self.kappa)?.lambda,
        })
    }

    pub fn eigenfunction_value(&self, e: &SigmaEigenfunction, sigma: f64) -> f64 {
        sigma.powf(e.left_exponent)
            * (1.0 - sigma).powf(e.right_exponent)
            * self.kernel.basis().eval(e.n, 2.0 * sigma - 1.0)
    }

    /// Terms of η² P*[u] at (σ, η) given u, ∂σu, ∂σ²u, ∂ηu.
    fn adjoint_terms(&self, sigma: f64, eta: f64, u: f64, us: f64, uss: f64, ue: f64) -> [f64; 4] {
        let k = self.kappa.value();
        let hw = self.h.value();
        let s1 = sigma * (1.0 - sigma);
        let potential = (1.0 - self.theta1) / (sigma * sigma)
            + (1.0 - hw) / ((1.0 - sigma) * (1.0 - sigma))
            + 1.0 / sigma
            + 1.0 / (1.0 - sigma);
        [
            k / 4.0 * uss,
            -(1.0 - 2.0 * sigma) * us / s1,
            potential * u,
            -eta * ue / s1,
        ]
    }

    /// Finite-difference P*[u] for any field u(σ, η), in the form used for G.
    pub fn adjoint_apply(
        &self,
        u: impl Fn(f64, f64) -> f64,
        sigma: f64,
        eta: f64,
        eta_floor: f64,
    ) -> (f64, f64, f64, f64, bool) {
        let dist_s = sigma.min(1.0 - sigma);
        let step_s = (1e-3f64).min(dist_s / 10.0);
        let dist_e = eta - eta_floor;
        let step_e = (1e-3 * eta).min(dist_e / 10.0);
        let reliable = step_s >= 1e-6 && step_e >= 1e-6 * eta;
        let v = u(sigma, eta);
        let us = fd::d1(|s| u(s, eta), sigma, step_s);
        let uss = fd::d2(|s| u(s, eta), sigma, step_s);
        let ue = fd::d1(|e| u(sigma, e), eta, step_e);
        let terms = self.adjoint_terms(sigma, eta, v, us, uss, ue);
        let inv = 1.0 / (eta * eta);
        let residual = terms.iter().sum::<f64>() * inv;
        let scale = terms.iter().fold(0.0f64, |m, t| m.max(t.abs())) * inv;
        (residual, scale, step_s, step_e, reliable)
    }

    /// P*[G] at an interior point of the homogeneous region η > ε.
    ///
    /// All stencil evaluations use the same number of kernel terms: each
    /// truncated mode solves the adjoint equation on its own, so the
    /// residual then measures only the stencil error.
    pub fn adjoint_residual(&self, rho: f64, eps: f64, sigma: f64, eta: f64) -> Result<AdjointResidual> {
        Self::check_point(rho, sigma, eps, eta)?;
        if !(eta > eps) {
            return Err(Error::precondition("adjoint residual needs eta > eps"));
        }
        let t_low = self.time(eps, eta - (1e-3 * eta).min((eta - eps) / 10.0));
        let (terms, _) = self.kernel.terms_for(t_low)?;
        let (residual, scale, step_sigma, step_eta, reliable) =
            self.adjoint_apply(|s, e| self.value_with_terms(rho, eps, s, e, terms), sigma, eta, eps);
        Ok(AdjointResidual {
            rho,
            eps,
            sigma,
            eta,
            residual,
            scale,
            step_sigma,
            step_eta,
            reliable,
        })
    }

    /// P* applied to Σ_n(σ)·η(ε/η)^{λ_n}, relative to its largest term.
    pub fn eigenmode_residual(&self, n: usize, eps: f64, sigma: f64, eta: f64) -> Result<f64> {
        let e = self.eigenfunction(n)?;
        let (r, scale, ..) = self.adjoint_apply(
            |s, h| self.eigenfunction_value(&e, s) * h * (eps / h).powf(e.lambda),
            sigma,
            eta,
            0.0,
        );
        Ok(if scale > 0.0 { r.abs() / scale } else { r.abs() })
    }

    pub fn adjoint_scan(
        &self,
        rho: f64,
        eps: f64,
        sigmas: &[f64],
        ratios: &[f64],
    ) -> Result<Vec<AdjointResidual>> {
        let points: Vec<(f64, f64)> = ratios
            .iter()
            .flat_map(|&r| sigmas.iter().map(move |&s| (s, eps * r)))
            .collect();
        parallel::map(&points, |&(s, e)| self.adjoint_residual(rho, eps, s, e))
            .into_iter()
            .collect()
    }

    /// Log-log fit of |G| as σ ↓ 0 (`left`) or σ ↑ 1 over `points` samples
    /// spanning [1e−6, 1e−3] in the distance to the endpoint.
    pub fn boundary_exponent_fit(
        &self,
        rho: f64,
        eps: f64,
        eta: f64,
        left: bool,
        points: usize,
    ) -> Result<ExponentEstimate> {
        let dists = logspace(1e-6, 1e-3, points);
        let mut values = Vec::with_capacity(points);
        for &d in &dists {
            let sigma = if left { d } else { 1.0 - d };
            values.push(self.value(rho, eps, sigma, eta)?);
        }
        fit_exponent(&dists, &values)
    }

    /// −∫₀¹ G(ρ,ε;σ,η) f(σ) / (η σ(1−σ)) dσ along η_k = ε + (b−ε)·2^{−k},
    /// k = 0..steps, compared with f(ρ).
    ///
    /// The integrand reduces to the kernel acting on
    /// f̃(σ) = f(σ) σ^{−Δ+(θ1)} (1−σ)^{−Δ+(h)}, which must stay bounded at
    /// both endpoints.
    pub fn reproducing_limit_check(
        &self,
        rho: f64,
        eps: f64,
        b: f64,
        steps: usize,
        f: impl Fn(f64) -> f64 + Sync,
    ) -> Result<ReproducingRecord> {
        if !(b > eps && eps > 0.0) {
            return Err(Error::domain("need 0 < eps < b"));
        }
        let (p1, ph) = (self.plus_theta1, self.plus_h);
        let tilde = |s: f64| f(s) * s.powf(-p1) * (1.0 - s).powf(-ph);
        admissible(&tilde)?;
        let target = f(rho);
        let mut rec = ReproducingRecord {
            rho,
            eps,
            b,
            target,
            etas: Vec::new(),
            times: Vec::new(),
            values: Vec::new(),
            errors: Vec::new(),
        };
        for k in 0..=steps {
            let eta = eps + (b - eps) * f64::powi(0.5, k as i32);
            let t = self.time(eps, eta);
            let (terms, _) = self.kernel.terms_for(t)?;
            let rule = self.kernel.rule_for(t, 128)?;
            let value = self.reduced_integral(rho, eps, eta, terms, &rule, &tilde);
            rec.etas.push(eta);
            rec.times.push(t);
            rec.values.push(value);
            rec.errors.push((value - target).abs());
        }
        Ok(rec)
    }

    fn reduced_integral(
        &self,
        rho: f64,
        eps: f64,
        eta: f64,
        terms: usize,
        rule: &QuadratureRule,
        tilde: &impl Fn(f64) -> f64,
    ) -> f64 {
        let t = self.time(eps, eta);
        let inner = rule.integrate(|s| self.kernel.value_with_terms(rho, s, t, terms) * tilde(s));
        (eps / eta).powf(self.lambda0)
            * rho.powf(self.plus_theta1)
            * (1.0 - rho).powf(self.plus_h)
            * inner
    }
}

/// Rejects f̃ that is non-finite or grows without bound near σ ∈ {0, 1}.
fn admissible(tilde: &impl Fn(f64) -> f64) -> Result<()> {
    // a continuous extension moves by O(1e−9) between these points, while
    // any blow-up σ^{−p} with p > 0.0015 grows by more than 1 %
    for (near, far) in [(1e-12, 1e-9), (1.0 - 1e-12, 1.0 - 1e-9)] {
        let a = tilde(near);
        let b = tilde(far);
        if !a.is_finite() || !b.is_finite() || a.abs() > 1.01 * b.abs() + f64::MIN_POSITIVE {
            return Err(Error::precondition(
                "f(σ)σ^{−Δ+(θ1)}(1−σ)^{−Δ+(h)} must extend continuously to [0, 1]",
            ));
        }
    }
    Ok(())
}

/// CSV header and rows for adjoint residual grids.
pub fn adjoint_csv(rows: &[AdjointResidual]) -> String {
    let mut out = String::from("rho,eps,sigma,eta,residual,scale,reliable\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{:e},{:e},{}\n",
            r.rho, r.eps, r.sigma, r.eta, r.residual, r.scale, r.reliable
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::leg_weight;

    fn k(v: f64) -> Kappa {
        Kappa::new(v).unwrap()
    }

    #[test]
    fn j_examples() {
        let kappa = k(6.0);
        let g = OneIntervalGreen::new(theta1(kappa), kappa).unwrap();
        assert_eq!(g.value(1.0, 1.0), 0.0);
        let expect = 2.0 * (1.0 - (2f64).powf(-1.0 / 3.0));
        assert!((g.value(0.5, 1.0) - expect).abs() < 1e-15);
        assert!((g.coincidence_slope(1.0) + 4.0 / 6.0).abs() < 1e-8);
        assert!(g.value(0.3, 1.0) > 0.0);
    }

    #[test]
    fn j_annihilated() {
        for kv in [10.0 / 3.0, 6.0] {
            let kappa = k(kv);
            for s in [1, 2] {
                let g = OneIntervalGreen::new(leg_weight(s, kappa), kappa).unwrap();
                let grid: Vec<f64> = (1..50).map(|i| i as f64 / 50.0 * 2.0).collect();
                assert!(g.annihilation_residual(2.0, &grid).unwrap() <= 1e-9);
                assert!(g.power_residual(0.37) <= 1e-11);
                // closed-form derivatives against finite differences
                let (d1, d2) = g.derivatives(0.8, 2.0);
                assert!((fd::d1(|d| g.value(d, 2.0), 0.8, 1e-3) - d1).abs() < 1e-9);
                assert!((fd::d2(|d| g.value(d, 2.0), 0.8, 1e-3) - d2).abs() < 1e-7);
            }
        }
    }

    fn green(kv: f64) -> TwoIntervalGreen {
        let kappa = k(kv);
        TwoIntervalGreen::new(leg_weight(2, kappa), kappa, TruncationPolicy::default()).unwrap()
    }

    #[test]
    fn causal() {
        let g = green(6.0);
        assert_eq!(g.value(0.4, 1.0, 0.3, 0.5).unwrap(), 0.0);
        assert_eq!(g.value(0.4, 1.0, 0.3, 1.0).unwrap(), 0.0);
        assert!(g.value(0.4, 1.0, 0.3, 1.5).unwrap() < 0.0);
    }

    #[test]
    fn series_matches_factored() {
        let g = green(10.0 / 3.0);
        for (rho, sigma, ratio) in [(0.3, 0.6, 1.5), (0.5, 0.5, 2.0), (0.8, 0.1, 4.0)] {
            let a = g.value(rho, 1.0, sigma, ratio).unwrap();
            let b = g.value_series(rho, 1.0, sigma, ratio).unwrap();
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "{a} {b}");
        }
    }

    #[test]
    fn eigenmodes_solve_adjoint() {
        let g = green(6.0);
        for n in 0..4 {
            assert!(g.eigenmode_residual(n, 1.0, 0.37, 1.8).unwrap() <= 1e-6);
        }
    }

    #[test]
    fn adjoint_vanishes() {
        let g = green(6.0);
        let rows = g.adjoint_scan(0.4, 1.0, &[0.2, 0.5, 0.8], &[1.5, 4.0]).unwrap();
        for r in rows {
            assert!(r.reliable);
            assert!(r.relative() <= 1e-4, "{r:?}");
        }
    }

    #[test]
    fn boundary_exponents() {
        let g = green(6.0);
        let (l, r) = g.boundary_exponents();
        let fl = g.boundary_exponent_fit(0.5, 1.0, 2.0, true, 13).unwrap();
        let fr = g.boundary_exponent_fit(0.5, 1.0, 2.0, false, 13).unwrap();
        assert!((fl.p_hat - l).abs() <= 1e-2);
        assert!((fr.p_hat - r).abs() <= 1e-2);
    }

    #[test]
    fn reproducing_limits() {
        let g = green(6.0);
        let (p1, ph) = (g.plus_theta1, g.plus_h);
        let rec = g
            .reproducing_limit_check(0.5, 1.0, 2.0, 4, |s| s.powf(p1) * (1.0 - s).powf(ph))
            .unwrap();
        for (v, eta) in rec.values.iter().zip(&rec.etas) {
            let exact = (1.0 / eta).powf(g.lambda0) * rec.target;
            assert!((v - exact).abs() <= 1e-10);
        }
        let rec = g
            .reproducing_limit_check(0.5, 1.0, 2.0, 10, |s| s.powf(p1 + 1.0) * (1.0 - s).powf(ph))
            .unwrap();
        assert!(rec.monotone());
        assert!(rec.final_error() <= 1e-3);
        assert!(g.reproducing_limit_check(0.5, 1.0, 2.0, 3, |_| 1.0).is_err());
    }
}
