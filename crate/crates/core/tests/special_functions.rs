use proptest::prelude::*;
use stablekern::kernel_math::{beta_fn, gamma_fn, levy_constant, sphere_area, LevyMeasureSpec};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn beta_is_gamma_ratio(s1 in 0.1f64..10.0, s2 in 0.1f64..10.0) {
        let b = beta_fn(s1, s2).unwrap();
        let g = gamma_fn(s1).unwrap() * gamma_fn(s2).unwrap() / gamma_fn(s1 + s2).unwrap();
        prop_assert!((b - g).abs() <= 1e-12 * g, "B({s1},{s2}) = {b} vs {g}");
    }

    #[test]
    fn gamma_agrees_with_statrs(s in 0.05f64..50.0) {
        let ours = gamma_fn(s).unwrap();
        let theirs = statrs::function::gamma::gamma(s);
        prop_assert!((ours - theirs).abs() <= 1e-13 * theirs.abs().max(1.0) * 10.0,
            "Γ({s}) = {ours} vs {theirs}");
    }

    #[test]
    fn beta_agrees_with_statrs(s1 in 0.1f64..10.0, s2 in 0.1f64..10.0) {
        let ours = beta_fn(s1, s2).unwrap();
        let theirs = statrs::function::beta::beta(s1, s2);
        prop_assert!((ours - theirs).abs() <= 1e-11 * theirs);
    }
}

// ω_{d-1}·𝒞(d, α) / (2d(2 - α)) → 1 linearly as α → 2, so the small jumps
// carry the Laplacian in the limit.
#[test]
fn levy_constant_near_two() {
    for d in 1..=3 {
        let mut slopes = Vec::new();
        for alpha in [1.9, 1.95, 1.99, 1.995, 1.999] {
            let c = levy_constant(LevyMeasureSpec::new(d, alpha).unwrap()).unwrap();
            let ratio = sphere_area(d) * c / (2.0 * d as f64 * (2.0 - alpha));
            slopes.push((ratio - 1.0).abs() / (2.0 - alpha));
        }
        let lo = slopes.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = slopes.iter().copied().fold(0.0, f64::max);
        assert!(hi < 5.0, "d={d}: {slopes:?}");
        assert!(hi / lo < 1.2, "d={d}: slope not stable {slopes:?}");
    }
}
