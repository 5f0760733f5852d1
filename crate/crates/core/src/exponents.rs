//! Conformal weights, the ±KPZ map, Jacobi parameters and separation
//! eigenvalues.
//!
//! Everything here is closed-form arithmetic in double precision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// SLE parameter, restricted to the open interval (0, 8).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Kappa(f64);

impl Kappa {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 && value < 8.0 {
            Ok(Kappa(value))
        } else {
            Err(Error::domain(format!("kappa must lie in (0, 8), got {value}")))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// Lowest admissible weight for the KPZ map, −(κ−4)²/16κ.
    pub fn weight_floor(self) -> f64 {
        let k = self.0;
        -(k - 4.0) * (k - 4.0) / (16.0 * k)
    }
}

/// Boundary scaling weight of a primary operator.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct ConformalWeight(pub f64);

impl ConformalWeight {
    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Exponent pair (Δ−, Δ+) and gap ⅄ = Δ+ − Δ− for one weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KpzPair {
    pub delta_minus: f64,
    pub delta_plus: f64,
    pub gap: f64,
}

/// Jacobi parameters α = ⅄(h), β = ⅄(θ1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JacobiParams {
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub n: usize,
    pub lambda: f64,
}

/// Weight θ_s = s(2s + 4 − κ)/2κ of the s-leg boundary operator.
pub fn leg_weight(s: u32, kappa: Kappa) -> ConformalWeight {
    let s = f64::from(s);
    let k = kappa.value();
    ConformalWeight(s * (2.0 * s + 4.0 - k) / (2.0 * k))
}

/// θ1 = (6 − κ)/2κ.
pub fn theta1(kappa: Kappa) -> ConformalWeight {
    leg_weight(1, kappa)
}

/// The ±KPZ map. At the discriminant floor the two roots coincide.
pub fn kpz(d: ConformalWeight, kappa: Kappa) -> Result<KpzPair> {
    let k = kappa.value();
    let km4 = k - 4.0;
    let mut disc = km4 * km4 + 16.0 * k * d.value();
    if disc < 0.0 {
        // round-off at the floor itself is treated as the double root
        let slack = 16.0 * f64::EPSILON * (km4 * km4 + 16.0 * k * d.value().abs());
        if disc < -slack {
            return Err(Error::domain(format!(
                "weight {} below the KPZ floor {} at kappa = {k}",
                d.value(),
                kappa.weight_floor()
            )));
        }
        disc = 0.0;
    }
    let root = disc.sqrt();
    Ok(KpzPair {
        delta_minus: (km4 - root) / (2.0 * k),
        delta_plus: (km4 + root) / (2.0 * k),
        gap: root / k,
    })
}

/// Residuals of the leg-weight identities Δ±(θ_s) = −θ1 − θ_s + θ_{s±1}
/// together with the closed forms 2s/κ and 1 − (2s+4)/κ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegIdentityResidual {
    pub plus: f64,
    pub minus: f64,
    pub plus_closed_form: f64,
    pub minus_closed_form: f64,
}

impl LegIdentityResidual {
    pub fn max_abs(&self) -> f64 {
        self.plus
            .abs()
            .max(self.minus.abs())
            .max(self.plus_closed_form.abs())
            .max(self.minus_closed_form.abs())
    }
}

pub fn kpz_leg_identity_residual(s: u32, kappa: Kappa) -> Result<LegIdentityResidual> {
    if s == 0 {
        return Err(Error::domain("leg identity requires s >= 1"));
    }
    let k = kappa.value();
    let pair = kpz(leg_weight(s, kappa), kappa)?;
    let t1 = theta1(kappa).value();
    let ts = leg_weight(s, kappa).value();
    let up = leg_weight(s + 1, kappa).value();
    let down = leg_weight(s - 1, kappa).value();
    let sf = f64::from(s);
    Ok(LegIdentityResidual {
        plus: pair.delta_plus - (-t1 - ts + up),
        minus: pair.delta_minus - (-t1 - ts + down),
        plus_closed_form: pair.delta_plus - 2.0 * sf / k,
        minus_closed_form: pair.delta_minus - (1.0 - (2.0 * sf + 4.0) / k),
    })
}

pub fn jacobi_params(h: ConformalWeight, kappa: Kappa) -> Result<JacobiParams> {
    let alpha = kpz(h, kappa)?.gap;
    let beta = kpz(theta1(kappa), kappa)?.gap;
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::Invariant(format!(
            "Jacobi parameters must be positive, got alpha = {alpha}, beta = {beta} \
             (h = {}, kappa = {})",
            h.value(),
            kappa.value()
        )));
    }
    Ok(JacobiParams { alpha, beta })
}

/// Separation eigenvalue λ_n of the adjacent-interval operator.
pub fn eigenvalue(n: usize, h: ConformalWeight, kappa: Kappa) -> Result<Eigenvalue> {
    let k = kappa.value();
    let ph = kpz(h, kappa)?.delta_plus;
    let p1 = kpz(theta1(kappa), kappa)?.delta_plus;
    let nf = n as f64;
    let four_lambda = k * nf * nf
        + (8.0 - k + 2.0 * k * (ph + p1)) * nf
        + 4.0 * (ph + p1)
        + 2.0 * k * ph * p1;
    Ok(Eigenvalue {
        n,
        lambda: four_lambda / 4.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn k(v: f64) -> Kappa {
        Kappa::new(v).unwrap()
    }

    #[test]
    fn kappa_range() {
        assert!(Kappa::new(0.0).is_err());
        assert!(Kappa::new(8.0).is_err());
        assert!(Kappa::new(9.0).is_err());
        assert!(Kappa::new(f64::NAN).is_err());
        assert!(Kappa::new(7.999).is_ok());
    }

    #[test]
    fn leg_weight_examples() {
        for kv in [0.5, 2.0, 6.0, 7.5] {
            assert_eq!(leg_weight(0, k(kv)).value(), 0.0);
        }
        assert_eq!(leg_weight(1, k(6.0)).value(), 0.0);
        assert_abs_diff_eq!(leg_weight(1, k(4.0)).value(), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(leg_weight(2, k(8.0 / 3.0)).value(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn kpz_examples() {
        let p = kpz(theta1(k(6.0)), k(6.0)).unwrap();
        assert_abs_diff_eq!(p.delta_plus, 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.delta_minus, 0.0, epsilon = 1e-15);

        let p = kpz(ConformalWeight(0.0), k(2.0)).unwrap();
        assert_abs_diff_eq!(p.delta_plus, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.delta_minus, -1.0, epsilon = 1e-15);

        let p = kpz(leg_weight(2, k(4.0)), k(4.0)).unwrap();
        assert_abs_diff_eq!(p.delta_plus, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn kpz_below_floor_is_domain_error() {
        let kappa = k(2.0);
        let below = ConformalWeight(kappa.weight_floor() - 1e-3);
        assert!(matches!(kpz(below, kappa), Err(Error::Domain(_))));
    }

    #[test]
    fn kpz_floor_is_double_root() {
        for kv in [0.5, 2.0, 3.3, 6.0, 7.9] {
            let kappa = k(kv);
            let p = kpz(ConformalWeight(kappa.weight_floor()), kappa).unwrap();
            assert_eq!(p.gap, 0.0);
            assert_eq!(p.delta_plus, p.delta_minus);
        }
    }

    #[test]
    fn leg_identity_examples() {
        for (s, kv) in [(1, 6.0), (3, 3.0), (1, 4.0)] {
            let r = kpz_leg_identity_residual(s, k(kv)).unwrap();
            assert!(r.max_abs() <= 1e-14, "{s} {kv} {r:?}");
        }
        let p = kpz(theta1(k(4.0)), k(4.0)).unwrap();
        assert_abs_diff_eq!(p.delta_plus, 0.5, epsilon = 1e-15);
        assert!(kpz_leg_identity_residual(0, k(4.0)).is_err());
    }

    #[test]
    fn jacobi_params_examples() {
        let jp = jacobi_params(theta1(k(6.0)), k(6.0)).unwrap();
        assert_abs_diff_eq!(jp.alpha, 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(jp.beta, 1.0 / 3.0, epsilon = 1e-15);

        let jp = jacobi_params(leg_weight(2, k(4.0)), k(4.0)).unwrap();
        assert_abs_diff_eq!(jp.alpha, 2.0, epsilon = 1e-15);

        let mut last = f64::INFINITY;
        for eps in [1e-1, 1e-2, 1e-3, 1e-4] {
            let kappa = k(8.0 - eps);
            let jp = jacobi_params(theta1(kappa), kappa).unwrap();
            assert!(jp.beta > 0.0 && jp.beta < last);
            last = jp.beta;
        }
        assert!(last < 2e-5);
    }

    #[test]
    fn jacobi_params_at_floor_is_invariant_error() {
        let kappa = k(3.0);
        let h = ConformalWeight(kappa.weight_floor());
        assert!(matches!(jacobi_params(h, kappa), Err(Error::Invariant(_))));
    }

    #[test]
    fn eigenvalue_examples() {
        let kappa = k(6.0);
        let l0 = eigenvalue(0, theta1(kappa), kappa).unwrap();
        assert_abs_diff_eq!(l0.lambda, 1.0, epsilon = 1e-15);

        for kv in [2.0, 10.0 / 3.0, 4.0, 6.0] {
            let kappa = k(kv);
            for s in 1..=3 {
                let h = leg_weight(s, kappa);
                let mut prev = f64::NEG_INFINITY;
                for n in 0..=20 {
                    let l = eigenvalue(n, h, kappa).unwrap().lambda;
                    assert!(l > prev);
                    prev = l;
                }
            }
        }
    }
}
