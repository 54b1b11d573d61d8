//! Quadrature rules.
//!
//! Adaptive Gauss–Kronrod (21 points) for smooth or mildly singular
//! integrands, Gauss–Legendre and Gauss–Jacobi rules for endpoint
//! singularities, and a half-line Fourier integrator that sums the integral
//! between consecutive zeros of the oscillating factor and accelerates the
//! partial sums with Wynn's ε-algorithm.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::kernel_math::ln_gamma;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_715_848_657_311,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss 10-point weights for the nodes XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Value and error estimate of a quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_err: f64,
    pub evals: usize,
}

/// One 21-point Kronrod panel with the QUADPACK error rescaling.
pub fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> QuadResult {
    gk21_abs(f, a, b).0
}

/// [`gk21`] together with the panel's `∫|f|` estimate.
fn gk21_abs<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (QuadResult, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[10];
    let mut res_abs = res_k.abs();
    let mut res_g = 0.0;
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = res_k * 0.5;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (
        QuadResult {
            value,
            abs_err: err,
            evals: 21,
        },
        res_abs,
    )
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    res_abs: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive bisection with 21-point Kronrod panels.
///
/// Stops once the summed error estimate is below `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<QuadResult> {
    integrate_limited(f, a, b, abs_tol, rel_tol, 2000)
}

pub fn integrate_limited<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            abs_err: 0.0,
            evals: 0,
        });
    }
    let (first, first_abs) = gk21_abs(f, a, b);
    let mut evals = first.evals;
    let mut total = first.value;
    let mut total_err = first.abs_err;
    let mut total_abs = first_abs;
    let mut heap = BinaryHeap::new();
    heap.push(Panel {
        a,
        b,
        value: first.value,
        err: first.abs_err,
        res_abs: first_abs,
    });
    loop {
        if !total.is_finite() {
            return Err(Error::numeric("integrate", "non-finite integrand", f64::NAN));
        }
        // Each panel's estimate is floored at 50ε∫|f|, so tolerances below
        // twice that are unreachable.
        let floor = 100.0 * f64::EPSILON * total_abs;
        if total_err <= abs_tol.max(rel_tol * total.abs()).max(floor) {
            break;
        }
        if heap.len() >= max_panels {
            return Err(Error::numeric(
                "integrate",
                format!("no convergence on [{a}, {b}] within {max_panels} panels"),
                total_err,
            ));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel cannot be split further in floating point.
            heap.push(worst);
            break;
        }
        let (left, left_abs) = gk21_abs(f, worst.a, mid);
        let (right, right_abs) = gk21_abs(f, mid, worst.b);
        evals += 42;
        total += left.value + right.value - worst.value;
        total_err += left.abs_err + right.abs_err - worst.err;
        total_abs += left_abs + right_abs - worst.res_abs;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: left.value,
            err: left.abs_err,
            res_abs: left_abs,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: right.value,
            err: right.abs_err,
            res_abs: right_abs,
        });
    }
    // Re-sum to avoid drift from the running updates.
    let value = heap.iter().map(|p| p.value).sum();
    let abs_err = heap.iter().map(|p| p.err).sum();
    Ok(QuadResult {
        value,
        abs_err,
        evals,
    })
}

/// Adaptive integration over consecutive breakpoints `points[0] < points[1] < ...`.
pub fn integrate_points<F: Fn(f64) -> f64>(
    f: &F,
    points: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> Result<QuadResult> {
    let pieces = points.len().saturating_sub(1).max(1) as f64;
    let mut out = QuadResult {
        value: 0.0,
        abs_err: 0.0,
        evals: 0,
    };
    for w in points.windows(2) {
        let r = integrate(f, w[0], w[1], abs_tol / pieces, rel_tol)?;
        out.value += r.value;
        out.abs_err += r.abs_err;
        out.evals += r.evals;
    }
    Ok(out)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Gauss–Jacobi rule for the weight `(1-x)^a (1+x)^b` on `[-1, 1]`
/// (Golub–Welsch), `a, b > -1`.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(a > -1.0 && b > -1.0) {
        return Err(Error::domain(
            "gauss_jacobi",
            format!("exponents must exceed -1, got a={a}, b={b}"),
        ));
    }
    if n == 0 {
        return Err(Error::domain("gauss_jacobi", "need at least one node"));
    }
    let ab = a + b;
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let diag = if k == 0 {
            (b - a) / (ab + 2.0)
        } else {
            (b * b - a * a) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        jac[(k, k)] = diag;
        if k + 1 < n {
            let j = kf + 1.0;
            let beta = if k == 0 {
                4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                4.0 * j * (j + a) * (j + b) * (j + ab)
                    / ((2.0 * j + ab).powi(2) * (2.0 * j + ab + 1.0) * (2.0 * j + ab - 1.0))
            };
            let off = beta.sqrt();
            jac[(k, k + 1)] = off;
            jac[(k + 1, k)] = off;
        }
    }
    let mu0 = ((ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(a + 1.0) + ln_gamma(b + 1.0)
        - ln_gamma(ab + 2.0))
    .exp();
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    Ok(pairs.into_iter().unzip())
}

/// Gauss–Jacobi rule on `[0, 1]` for the weight `λ^p (1-λ)^q`.
pub fn gauss_jacobi_unit(n: usize, p: f64, q: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let (x, w) = gauss_jacobi(n, q, p)?;
    let scale = 0.5f64.powf(p + q + 1.0);
    Ok((
        x.iter().map(|&xi| 0.5 * (xi + 1.0)).collect(),
        w.iter().map(|&wi| wi * scale).collect(),
    ))
}

/// Oscillating factor of a half-line Fourier integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Oscillator {
    Cos,
    Sin,
}

impl Oscillator {
    fn eval(self, v: f64) -> f64 {
        match self {
            Oscillator::Cos => v.cos(),
            Oscillator::Sin => v.sin(),
        }
    }

    // k-th positive zero of the factor in units of π/ω; the first panel is
    // [0, zero(0)].
    fn zero(self, k: usize, omega: f64) -> f64 {
        let pi = std::f64::consts::PI;
        match self {
            Oscillator::Cos => (k as f64 + 0.5) * pi / omega,
            Oscillator::Sin => (k as f64 + 1.0) * pi / omega,
        }
    }
}

/// Bottom entry of the highest even column of Wynn's ε-table built from `s`.
fn wynn_epsilon(s: &[f64]) -> f64 {
    let n = s.len();
    if n < 3 {
        return *s.last().unwrap_or(&0.0);
    }
    let mut prev = vec![0.0; n + 1];
    let mut cur: Vec<f64> = s.to_vec();
    let mut best = cur[n - 1];
    let mut col = 0;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for j in 0..cur.len() - 1 {
            let d = cur[j + 1] - cur[j];
            if d == 0.0 || !d.is_finite() {
                return best;
            }
            next.push(prev[j + 1] + 1.0 / d);
        }
        prev = cur;
        cur = next;
        col += 1;
        if col % 2 == 0 {
            let v = *cur.last().expect("non-empty column");
            if !v.is_finite() {
                return best;
            }
            best = v;
        }
    }
    best
}

/// `∫_0^{ξ_max} envelope(ξ) · osc(ωξ) dξ` for `ω ≥ 0` with a smooth,
/// eventually decaying envelope.
///
/// For many oscillations the integral is summed panel by panel between
/// consecutive zeros of the oscillating factor; the alternating partial sums
/// are accelerated with Wynn's ε-algorithm.
pub fn fourier_half_line<F: Fn(f64) -> f64>(
    envelope: &F,
    omega: f64,
    osc: Oscillator,
    xi_max: f64,
    abs_tol: f64,
) -> Result<QuadResult> {
    let omega = omega.abs();
    let f = |xi: f64| envelope(xi) * osc.eval(omega * xi);
    let pi = std::f64::consts::PI;
    if omega * xi_max <= 8.0 * pi {
        let mut pts = vec![0.0];
        if omega > 0.0 {
            let mut k = 0;
            while osc.zero(k, omega) < xi_max {
                pts.push(osc.zero(k, omega));
                k += 1;
            }
        }
        pts.push(xi_max);
        return integrate_points(&f, &pts, abs_tol, 1e-14);
    }

    const WINDOW: usize = 24;
    const MIN_PANELS: usize = 12;
    const MAX_PANELS: usize = 200_000;
    let panel_tol = abs_tol * 1e-2;
    let mut sums: Vec<f64> = Vec::new();
    let mut partial = 0.0;
    let mut err = 0.0;
    let mut evals = 0;
    let mut lo = 0.0;
    let mut last_est = f64::NAN;
    let mut stable = 0;
    for k in 0..MAX_PANELS {
        let hi = osc.zero(k, omega).min(xi_max);
        let r = if k < 2 {
            integrate(&f, lo, hi, panel_tol, 1e-15)?
        } else {
            let r = gk21(&f, lo, hi);
            if r.abs_err > panel_tol {
                integrate(&f, lo, hi, panel_tol, 1e-15)?
            } else {
                r
            }
        };
        partial += r.value;
        err += r.abs_err;
        evals += r.evals;
        if hi >= xi_max {
            return Ok(QuadResult {
                value: partial,
                abs_err: err,
                evals,
            });
        }
        sums.push(partial);
        if sums.len() > WINDOW {
            sums.remove(0);
        }
        if k + 1 >= MIN_PANELS {
            let est = wynn_epsilon(&sums);
            let delta = (est - last_est).abs();
            if delta <= abs_tol * 0.1 {
                stable += 1;
                if stable >= 2 {
                    return Ok(QuadResult {
                        value: est,
                        abs_err: err + delta,
                        evals,
                    });
                }
            } else {
                stable = 0;
            }
            last_est = est;
        }
        lo = hi;
    }
    Err(Error::numeric(
        "fourier_half_line",
        "panel budget exhausted",
        (partial - last_est).abs(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kronrod_integrates_polynomials_and_smooth_functions() {
        let r = gk21(&|x: f64| x.powi(6) - 3.0 * x, 0.0, 2.0);
        assert_relative_eq!(r.value, 128.0 / 7.0 - 6.0, max_relative = 1e-14);
        let r = integrate(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-13, 0.0).unwrap();
        assert_relative_eq!(r.value, 2.0, epsilon = 1e-13);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let r = integrate(&|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, 1e-10, 0.0).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn legendre_exact_to_degree_2n_minus_1() {
        let (x, w) = gauss_legendre(7);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert_relative_eq!(s, 2.0 / 13.0, max_relative = 1e-13);
    }

    #[test]
    fn jacobi_reproduces_beta_moments() {
        // ∫_0^1 λ^p (1-λ)^q λ^2 dλ = B(p+3, q+1)
        let (p, q) = (-0.6, -0.3);
        let (x, w) = gauss_jacobi_unit(6, p, q).unwrap();
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        let exact = (ln_gamma(p + 3.0) + ln_gamma(q + 1.0) - ln_gamma(p + q + 4.0)).exp();
        assert_relative_eq!(s, exact, max_relative = 1e-12);
    }

    #[test]
    fn jacobi_rejects_bad_exponents() {
        assert!(gauss_jacobi(4, -1.0, 0.0).is_err());
    }

    #[test]
    fn fourier_matches_laplace_closed_form() {
        // ∫_0^∞ e^{-ξ} cos(ωξ) dξ = 1/(1+ω²)
        for &omega in &[0.0, 0.3, 5.0, 80.0, 2000.0] {
            let r = fourier_half_line(&|x: f64| (-x).exp(), omega, Oscillator::Cos, 45.0, 1e-15)
                .unwrap();
            let exact = 1.0 / (1.0 + omega * omega);
            assert!(
                (r.value - exact).abs() < 1e-14_f64.max(1e-10 * exact),
                "omega={omega} got {} want {exact}",
                r.value
            );
        }
        // ∫_0^∞ e^{-ξ} sin(ωξ) dξ = ω/(1+ω²)
        let r = fourier_half_line(&|x: f64| (-x).exp(), 40.0, Oscillator::Sin, 45.0, 1e-15).unwrap();
        assert_relative_eq!(r.value, 40.0 / 1601.0, max_relative = 1e-10);
    }
}
