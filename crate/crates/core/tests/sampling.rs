use rand::Rng;
use stablekern::drift_flow::DriftSpec;
use stablekern::sampling::{
    empirical_char, euler_maruyama, sample_stable_1d, sample_stable_dd, sample_subordinator, PathConfig, RngStream,
};
use statrs::distribution::{Cauchy, ContinuousCDF};

fn ks(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn stable_characteristic_function() {
    let n = 200_000;
    for (k, alpha) in [0.5, 1.0, 1.5, 1.9, 2.0].into_iter().enumerate() {
        let mut rng = RngStream::new(11, k as u64);
        let t = 0.7;
        let x = sample_stable_1d(alpha, t, n, &mut rng).unwrap();
        for xi in [0.5f64, 1.0, 2.0] {
            let target = (-t * xi.abs().powf(alpha)).exp();
            let emp = empirical_char(&x, xi);
            assert!((emp - target).abs() <= 4.0 / (n as f64).sqrt(), "α={alpha} ξ={xi}: {emp} vs {target}");
        }
    }
}

// E e^{-λS_t} = e^{-tλ^{α/2}}.
#[test]
fn subordinator_laplace_transform() {
    let n = 200_000;
    for (k, alpha) in [0.5, 1.0, 1.5, 1.9].into_iter().enumerate() {
        let mut rng = RngStream::new(12, k as u64);
        let t = 1.3;
        let s = sample_subordinator(alpha, t, n, &mut rng).unwrap();
        assert!(s.iter().all(|v| *v > 0.0));
        for lambda in [0.5f64, 1.0, 3.0] {
            let emp = s.iter().map(|v| (-lambda * v).exp()).sum::<f64>() / n as f64;
            let target = (-t * lambda.powf(alpha / 2.0)).exp();
            assert!((emp - target).abs() <= 4.0 / (n as f64).sqrt(), "α={alpha} λ={lambda}");
        }
    }
}

// S_{λt} has the law of λ^{2/α} S_t.
#[test]
fn subordinator_scaling() {
    let n = 100_000;
    let alpha = 1.4;
    let lambda: f64 = 3.0;
    let mut a = sample_subordinator(alpha, lambda, n, &mut RngStream::new(13, 0)).unwrap();
    let mut b: Vec<f64> = sample_subordinator(alpha, 1.0, n, &mut RngStream::new(13, 1))
        .unwrap()
        .into_iter()
        .map(|v| lambda.powf(2.0 / alpha) * v)
        .collect();
    assert!(ks(&mut a, &mut b) <= 1.63 * (2.0 / n as f64).sqrt());
}

#[test]
fn cauchy_samples_pass_ks() {
    let n = 200_000;
    let t = 2.0;
    let mut x = sample_stable_1d(1.0, t, n, &mut RngStream::new(14, 0)).unwrap();
    x.sort_by(f64::total_cmp);
    let cdf = Cauchy::new(0.0, t).unwrap();
    let d = x
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let f = cdf.cdf(*v);
            (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
        })
        .fold(0.0, f64::max);
    assert!(d <= 1.63 / (n as f64).sqrt(), "KS {d}");
}

#[test]
fn subordinated_marginal_matches_direct_sampler() {
    let n = 1_000_000;
    let alpha = 1.6;
    let mut a = sample_stable_1d(alpha, 1.0, n, &mut RngStream::new(15, 0)).unwrap();
    let mut b: Vec<f64> = sample_stable_dd(alpha, 1, 1.0, n, &mut RngStream::new(15, 1))
        .unwrap()
        .into_iter()
        .map(|v| v[0])
        .collect();
    assert!(ks(&mut a, &mut b) <= 0.01);
}

// OU from x₀ = 1: E cos X_1 = cos(e^{-1}) e^{-(1-e^{-α})/α}.
#[test]
fn euler_weak_error_decreases() {
    let drift = DriftSpec::ou();
    let n = 400_000;
    for alpha in [1.5, 2.0] {
        let exact = (-1.0f64).exp().cos() * (-(1.0 - (-alpha as f64).exp()) / alpha).exp();
        let mut errors = Vec::new();
        for steps in [1usize, 2, 4] {
            let cfg = PathConfig { x0: 1.0, horizon: 1.0, n_steps: steps, alpha, drift: &drift };
            let mut rng = RngStream::new(16, steps as u64);
            let mean = (0..n).map(|_| euler_maruyama(&cfg, &mut rng).unwrap().cos()).sum::<f64>() / n as f64;
            errors.push((mean - exact).abs());
        }
        assert!(errors.windows(2).all(|w| w[1] < w[0]), "α={alpha}: {errors:?}");
    }
}

#[test]
fn streams_do_not_overlap() {
    let mut a = RngStream::new(3, 0);
    let mut b = RngStream::new(3, 1);
    let va: Vec<u64> = (0..64).map(|_| a.random()).collect();
    let vb: Vec<u64> = (0..64).map(|_| b.random()).collect();
    assert!(va.iter().all(|v| !vb.contains(v)));
}
