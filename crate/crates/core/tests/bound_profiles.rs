use proptest::prelude::*;
use stablekern::kernel_math::{check_3p, rho, rho_mass, BoundProfile};

fn signed_log(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.ln()..hi.ln(), any::<bool>()).prop_map(|(l, s)| if s { l.exp() } else { -l.exp() })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    // |z| ≤ r₀ ∨ |x|/2 moves ϱ by at most 2^{d+k+γ₂}.
    #[test]
    fn rho_doubling(
        k in 0.0f64..2.0,
        g1 in 0.2f64..2.0,
        g2 in 0.2f64..2.0,
        lt in -6.0f64..3.0,
        x in signed_log(1e-4, 1e4),
        frac in -1.0f64..1.0,
    ) {
        let p = BoundProfile::new(1, k, g1, g2).unwrap();
        let t = lt.exp();
        let z = frac * p.crossover_radius(t).max(x.abs() / 2.0);
        let ratio = rho(&p, t, &[x + z]).unwrap() / rho(&p, t, &[x]).unwrap();
        let bound = 2f64.powf(1.0 + k + g2);
        prop_assert!(ratio <= bound * (1.0 + 1e-12), "ratio {ratio} > {bound}");
    }

    #[test]
    fn rho_mass_scales_as_power(
        d in 1usize..=3,
        g1 in 0.5f64..2.0,
        g2 in 0.5f64..2.0,
        theta_frac in 0.0f64..0.9,
        lambda in 0.01f64..100.0,
    ) {
        let p = BoundProfile::new(d, 0.0, g1, g2).unwrap();
        let theta = theta_frac * g2;
        let dd = d as f64;
        let power = (dd * (g1 - g2) + theta * (dd + g1)) / (g1 * (dd + g2));
        let base = rho_mass(&p, theta, 1.0).unwrap();
        let scaled = rho_mass(&p, theta, lambda).unwrap();
        let predicted = base * lambda.powf(power);
        prop_assert!((scaled / predicted - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn three_p_ratio_is_finite(
        t in 1e-3f64..10.0,
        s in 1e-3f64..10.0,
        x in signed_log(1e-3, 1e3),
        y in signed_log(1e-3, 1e3),
        g in proptest::array::uniform4(1.0f64..2.0),
    ) {
        let r = check_3p(t, s, &[x], &[y], g).unwrap();
        prop_assert!(r.is_finite() && r >= 0.0);
    }
}

#[test]
fn rho_mass_rejects_divergent_theta() {
    let p = BoundProfile::new(1, 0.0, 1.5, 1.5).unwrap();
    assert!(rho_mass(&p, 1.5, 1.0).is_err());
    assert!(rho_mass(&p, -0.1, 1.0).is_err());
}
