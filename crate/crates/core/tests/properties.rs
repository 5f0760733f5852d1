use proptest::prelude::*;

use nullstate::exponents::{eigenvalue, jacobi_params, kpz, kpz_leg_identity_residual, leg_weight, theta1, ConformalWeight, Kappa};
use nullstate::heat_kernel::{HeatKernel, KernelParams, TruncationPolicy};
use nullstate::jacobi::{jacobi_poly_gamma_sum, JacobiBasis};
use nullstate::report::{Check, Report, Row};

fn kappa() -> impl Strategy<Value = Kappa> {
    (0.3f64..7.9).prop_map(|k| Kappa::new(k).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn leg_identities_hold(k in kappa(), s in 1u32..=10) {
        prop_assert!(kpz_leg_identity_residual(s, k).unwrap().max_abs() <= 1e-12 * (1.0 + f64::from(s * s) / k.value()));
    }

    #[test]
    fn vieta_relations(k in kappa(), d in 0.0f64..5.0) {
        let p = kpz(ConformalWeight(d), k).unwrap();
        let kv = k.value();
        prop_assert!((p.delta_plus * p.delta_minus + 4.0 * d / kv).abs() <= 1e-12 * (1.0 + d / kv));
        prop_assert!((p.delta_plus + p.delta_minus - (kv - 4.0) / kv).abs() <= 1e-12 * (1.0 + 1.0 / kv));
        prop_assert!(p.gap >= 0.0);
    }

    #[test]
    fn ground_eigenvalue_is_kpz_sum(k in kappa(), s in 1u32..=5) {
        let h = leg_weight(s, k);
        let l0 = eigenvalue(0, h, k).unwrap().lambda;
        let expect = 2.0 * kpz(h, k).unwrap().delta_plus + kpz(theta1(k), k).unwrap().delta_plus;
        prop_assert!((l0 - expect).abs() <= 1e-12 * expect.abs().max(1.0));
        let jp = jacobi_params(h, k).unwrap();
        prop_assert!(jp.alpha > 0.0 && jp.beta > 0.0);
    }

    #[test]
    fn recurrence_matches_gamma_sum(a in 0.0f64..4.0, b in 0.0f64..4.0, n in 0usize..=8, y in -1.0f64..1.0) {
        let basis = JacobiBasis::new(a, b).unwrap();
        let p = basis.eval(n, y);
        let q = jacobi_poly_gamma_sum(n, a, b, y);
        prop_assert!((p - q).abs() <= 1e-10 * q.abs().max(1.0), "{p} vs {q}");
    }

    #[test]
    fn swapping_parameters_reflects(a in 0.0f64..3.0, b in 0.0f64..3.0, n in 0usize..=12, y in -1.0f64..1.0) {
        let basis = JacobiBasis::new(a, b).unwrap();
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let lhs = basis.eval(n, -y);
        let rhs = sign * basis.swapped().eval(n, y);
        prop_assert!((lhs - rhs).abs() <= 1e-11 * lhs.abs().max(1.0));
    }

    #[test]
    fn kernel_is_symmetric_and_positive(
        a in 0.05f64..2.0,
        b in 0.05f64..2.0,
        rho in 0.05f64..0.95,
        sigma in 0.05f64..0.95,
        t in 0.1f64..5.0,
    ) {
        let k = HeatKernel::new(KernelParams::new(a, b).unwrap(), TruncationPolicy::default()).unwrap();
        let x = k.value(rho, sigma, t).unwrap();
        let y = k.value(sigma, rho, t).unwrap();
        prop_assert!((x.value - y.value).abs() <= 1e-8 * x.value.abs().max(1.0));
        prop_assert!(x.value > x.error_bound());
    }

    #[test]
    fn report_json_round_trip(values in prop::collection::vec(prop_oneof![
        any::<f64>(),
        Just(f64::NAN),
        Just(f64::INFINITY),
        Just(f64::NEG_INFINITY),
    ], 1..8)) {
        let mut r = Report::new("roundtrip");
        let mut row = Row::default();
        for (i, v) in values.iter().enumerate() {
            r.push(Check::at_most(format!("c{i}"), *v, 1.0));
            row.set(&format!("x{i}"), *v);
        }
        r.table.push(row);
        let back: Report = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        for (c, d) in r.checks.iter().zip(&back.checks) {
            prop_assert!(c.value.to_bits() == d.value.to_bits() || (c.value.is_nan() && d.value.is_nan()));
            prop_assert_eq!(c.passed, d.passed);
        }
        for (k, v) in &r.table[0].0 {
            let w = back.table[0].0[k];
            prop_assert!(v.to_bits() == w.to_bits() || (v.is_nan() && w.is_nan()));
        }
    }
}
