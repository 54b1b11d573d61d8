use std::f64::consts::PI;

use proptest::prelude::*;
use stablekern::kernel_math::gamma_fn;
use stablekern::quad;
use stablekern::stable_density::{density_1d, density_derivative, density_fourier_1d, tail_expansion, StableKernelSpec};

fn spec(alpha: f64) -> StableKernelSpec {
    StableKernelSpec::new(1, alpha).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn scaling_identity(alpha in 0.3f64..2.0, lt in (0.1f64).ln()..(10.0f64).ln(), x in -20.0f64..20.0) {
        let s = spec(alpha);
        let t = lt.exp();
        let k = t.powf(-1.0 / alpha);
        let direct = density_1d(&s, t, x).unwrap();
        let scaled = k * density_1d(&s, 1.0, k * x).unwrap();
        prop_assert!((direct - scaled).abs() <= 1e-10 * direct, "α={alpha} t={t} x={x}: {direct} vs {scaled}");
    }

    #[test]
    fn density_is_positive_and_finite(alpha in 0.3f64..=2.0, lt in -5.0f64..5.0, x in -1e3f64..1e3) {
        let v = density_1d(&spec(alpha), lt.exp(), x).unwrap();
        prop_assert!(v > 0.0 && v.is_finite());
    }
}

#[test]
fn cauchy_and_gaussian_oracles() {
    for t in [0.1f64, 1.0, 10.0] {
        for i in 0..=200 {
            let x = -20.0 + 0.2 * i as f64;
            let c = t / (PI * (t * t + x * x));
            let g = (-x * x / (4.0 * t)).exp() / (4.0 * PI * t).sqrt();
            let vc = density_1d(&spec(1.0), t, x).unwrap();
            let vf = density_fourier_1d(&spec(1.0), t, x).unwrap();
            assert!((vc - c).abs() <= 1e-8 * c, "cauchy t={t} x={x}");
            assert!((vf - c).abs() <= 1e-8 * c, "cauchy fourier t={t} x={x}");
            let vg = density_1d(&spec(2.0), t, x).unwrap();
            assert!((vg - g).abs() <= 1e-8 * g, "gauss t={t} x={x}");
        }
    }
}

// p(t, 0) = Γ(1 + 1/α) / (π t^{1/α}).
#[test]
fn value_at_origin() {
    for alpha in [0.5, 0.8, 1.3, 1.7, 1.95] {
        for t in [0.1f64, 1.0, 10.0] {
            let exact = gamma_fn(1.0 + 1.0 / alpha).unwrap() / (PI * t.powf(1.0 / alpha));
            let v = density_1d(&spec(alpha), t, 0.0).unwrap();
            assert!((v - exact).abs() <= 1e-10 * exact, "α={alpha} t={t}");
        }
    }
}

fn unit_mass(alpha: f64, t: f64) -> f64 {
    let s = spec(alpha);
    let scale = t.powf(1.0 / alpha);
    // Body on [0, R·scale], tail beyond R from the large-|x| expansion.
    let r = if alpha < 1.0 { 1e4 } else if alpha < 2.0 { 60.0 } else { 40.0 };
    let f = |x: f64| density_1d(&s, t, x).unwrap();
    let mut body = 0.0;
    let mut lo = 0.0;
    for hi in [1.0, 5.0, 20.0, r] {
        if hi > lo {
            body += quad::integrate(&f, lo * scale, hi * scale, 1e-10, 1e-12).unwrap().value;
        }
        lo = hi;
    }
    let tail: f64 = if alpha < 2.0 {
        tail_expansion(alpha, 12)
            .unwrap()
            .iter()
            .map(|(c, e)| c * r.powf(1.0 - e) / (e - 1.0))
            .sum()
    } else {
        0.0
    };
    2.0 * (body + tail)
}

#[test]
fn normalization() {
    for alpha in [0.5, 1.0, 1.5, 1.9, 2.0] {
        for t in [0.1f64, 1.0, 10.0] {
            let m = unit_mass(alpha, t);
            assert!((m - 1.0).abs() <= 1e-6, "α={alpha} t={t}: mass {m}");
        }
    }
}

#[test]
fn monotone_in_radius() {
    for alpha in [0.5, 1.0, 1.5, 1.9, 1.99] {
        let s = spec(alpha);
        let mut prev = f64::INFINITY;
        for i in 0..=400 {
            let v = density_1d(&s, 1.0, 0.125 * i as f64).unwrap();
            assert!(v <= prev, "α={alpha} not decreasing at x={}", 0.125 * i as f64);
            prev = v;
        }
    }
}

#[test]
fn explicit_tail_bound() {
    for alpha in [0.5, 1.0, 1.5, 1.9, 1.99] {
        let c = 4f64.powf(alpha) * gamma_fn((1.0 + alpha) / 2.0).unwrap()
            / (2.0 * 0.5 * PI.sqrt() * (1.0 - (-1.0f64).exp()));
        for t in [0.1f64, 1.0, 10.0] {
            let start = 5.0 * t.powf(1.0 / alpha);
            for k in 0..60 {
                let x = start * 1.2f64.powi(k);
                let v = density_1d(&spec(alpha), t, x).unwrap();
                assert!(v <= c * t / x.powf(1.0 + alpha), "α={alpha} t={t} x={x}");
            }
        }
    }
}

#[test]
fn first_derivative_matches_differences() {
    for alpha in [0.8, 1.0, 1.5, 1.9, 2.0] {
        let s = spec(alpha);
        for x in [-3.0, -0.7, 0.2, 1.0, 4.5] {
            let h = 1e-3;
            let d = |h: f64| (density_1d(&s, 1.0, x + h).unwrap() - density_1d(&s, 1.0, x - h).unwrap()) / (2.0 * h);
            let fd = (4.0 * d(h / 2.0) - d(h)) / 3.0;
            let exact = density_derivative(&s, 1, 1.0, x).unwrap();
            assert!((fd - exact).abs() <= 1e-6, "α={alpha} x={x}: {fd} vs {exact}");
        }
    }
}

// The series and the Fourier route agree where both are accurate.
#[test]
fn tail_series_matches_fourier() {
    for alpha in [0.5, 1.2, 1.9] {
        let terms = tail_expansion(alpha, 12).unwrap();
        for x in [15.0, 25.0, 40.0] {
            let series: f64 = terms.iter().map(|(c, e)| c * f64::powf(x, -e)).sum();
            let f = density_fourier_1d(&spec(alpha), 1.0, x).unwrap();
            assert!((series - f).abs() <= 1e-9 * f, "α={alpha} x={x}: {series} vs {f}");
        }
    }
}
