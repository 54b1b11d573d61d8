//! Densities of the isotropic α-stable law `E e^{iξ·L_t} = e^{-t|ξ|^α}`.
//!
//! In one dimension the density is the cosine transform
//! `p(t,x) = (1/π)∫₀^∞ e^{-tξ^α} cos(xξ) dξ`, integrated directly in `t`
//! (no reduction to `t = 1`) between consecutive zeros of the cosine. In
//! higher dimensions only the subordination estimator is provided.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel_math::{norm, BoundProfile};
use crate::metrics::RateFit;
use crate::quad::{self, Oscillator};
use crate::sampling::{self, RngStream};

/// Frequency cutoff rule: the integral stops where the envelope
/// `ξ^j e^{-tξ^α}` drops below `envelope_floor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub envelope_floor: f64,
}

impl Default for Truncation {
    fn default() -> Self {
        Self {
            envelope_floor: 1e-18,
        }
    }
}

impl Truncation {
    /// Smallest ξ beyond which `ξ^j e^{-tξ^γ} < floor`.
    fn cutoff(&self, t: f64, gamma: f64, j: u32) -> f64 {
        let level = -self.envelope_floor.ln();
        let mut xi = (level / t).powf(1.0 / gamma);
        for _ in 0..8 {
            let extra = j as f64 * xi.ln().max(0.0);
            xi = ((level + extra) / t).powf(1.0 / gamma);
        }
        xi
    }
}

/// A rotationally invariant α-stable kernel in dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableKernelSpec {
    pub d: usize,
    pub alpha: f64,
    pub quadrature_tol: f64,
    pub truncation: Truncation,
}

impl StableKernelSpec {
    pub fn new(d: usize, alpha: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::domain("StableKernelSpec", "dimension must be positive"));
        }
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::domain(
                "StableKernelSpec",
                format!("alpha must lie in (0,2], got {alpha}"),
            ));
        }
        Ok(Self {
            d,
            alpha,
            quadrature_tol: 1e-12,
            truncation: Truncation::default(),
        })
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.quadrature_tol = tol;
        self
    }

    fn is_gaussian(&self) -> bool {
        self.alpha == 2.0
    }

    fn require_1d(&self, op: &'static str) -> Result<()> {
        if self.d != 1 {
            return Err(Error::domain(
                op,
                format!("deterministic quadrature is one-dimensional, got d={}", self.d),
            ));
        }
        Ok(())
    }
}

/// Law of the subordinator `S_t` with `E e^{-λS_t} = e^{-tλ^{α/2}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubordinatorSpec {
    pub alpha: f64,
    pub method: SubordinatorMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubordinatorMethod {
    Quadrature,
    MonteCarlo,
}

fn check_time(op: &'static str, t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::domain(op, format!("t must be positive, got {t}")));
    }
    Ok(())
}

/// `(4πt)^{-d/2} exp(-|x|²/(4t))`.
pub fn gaussian_density(d: usize, t: f64, x: &[f64]) -> Result<f64> {
    check_time("gaussian_density", t)?;
    if d == 0 || x.len() != d {
        return Err(Error::domain("gaussian_density", "point dimension must equal d >= 1"));
    }
    Ok(gaussian_unchecked(d, t, norm(x)))
}

fn gaussian_unchecked(d: usize, t: f64, r: f64) -> f64 {
    (4.0 * PI * t).powf(-(d as f64) / 2.0) * (-r * r / (4.0 * t)).exp()
}

/// Runs a cosine/sine transform to absolute accuracy `tol`, tightening it
/// when the value is small enough that `tol` would cost relative accuracy.
fn transform<F: Fn(f64) -> f64>(
    op: &'static str,
    envelope: &F,
    omega: f64,
    osc: Oscillator,
    xi_max: f64,
    tol: f64,
) -> Result<f64> {
    let run = |tol: f64| {
        quad::fourier_half_line(envelope, omega, osc, xi_max, tol * PI).map_err(|e| match e {
            Error::Numeric { msg, achieved, .. } => Error::numeric(op, msg, achieved / PI),
            other => other,
        })
    };
    let first = run(tol)?.value / PI;
    let wanted = (first.abs() * 1e-12).max(1e-17);
    if wanted < tol {
        if let Ok(r) = run(wanted) {
            return Ok(r.value / PI);
        }
    }
    Ok(first)
}

/// `p^(α)(t, x)`. One-dimensional by quadrature; `α = 2` is always the
/// closed-form Gaussian. Use [`density_subordination`] for `d ≥ 2`, `α < 2`.
pub fn density(spec: &StableKernelSpec, t: f64, x: &[f64]) -> Result<f64> {
    check_time("density", t)?;
    if x.len() != spec.d {
        return Err(Error::domain("density", "point dimension must equal d"));
    }
    if spec.is_gaussian() {
        return Ok(gaussian_unchecked(spec.d, t, norm(x)));
    }
    spec.require_1d("density")?;
    density_1d(spec, t, x[0])
}

/// One-dimensional shorthand for [`density`].
pub fn density_1d(spec: &StableKernelSpec, t: f64, x: f64) -> Result<f64> {
    check_time("density", t)?;
    if spec.is_gaussian() {
        return Ok(gaussian_unchecked(1, t, x));
    }
    spec.require_1d("density")?;
    let scale = t.powf(-1.0 / spec.alpha);
    if let Some(v) = tail_series(spec.alpha, x.abs() * scale) {
        return Ok(scale * v);
    }
    density_fourier_1d(spec, t, x)
}

const TAIL_TERMS: usize = 12;

/// `p(1, u)` from the large-`u` expansion when its last retained term is
/// below 1e-16 of the sum. The oscillatory quadrature loses relative
/// accuracy far out in the tail, where this is exact to rounding.
fn tail_series(alpha: f64, u: f64) -> Option<f64> {
    if u < 8.0 || alpha >= 2.0 {
        return None;
    }
    let terms = tail_expansion(alpha, TAIL_TERMS).ok()?;
    let mut sum = 0.0;
    let mut last = f64::INFINITY;
    for (c, e) in terms {
        let term = c * u.powf(-e);
        // Asymptotic for α > 1: stop if the terms start growing.
        if c != 0.0 && term.abs() > last {
            return None;
        }
        if c != 0.0 {
            last = term.abs();
        }
        sum += term;
    }
    (sum > 0.0 && last <= 1e-16 * sum).then_some(sum)
}

/// `p^(α)(t, x)` by Fourier inversion for every α, including `α = 2`
/// (an independent route to the Gaussian closed form).
pub fn density_fourier_1d(spec: &StableKernelSpec, t: f64, x: f64) -> Result<f64> {
    check_time("density", t)?;
    spec.require_1d("density")?;
    let alpha = spec.alpha;
    let env = |xi: f64| (-t * xi.powf(alpha)).exp();
    let xi_max = spec.truncation.cutoff(t, alpha, 0);
    transform("density", &env, x.abs(), Oscillator::Cos, xi_max, spec.quadrature_tol)
}

/// `∂_x^j p^(α)(t, x)` for `j ∈ {1, 2}`, `d = 1`.
pub fn density_derivative(spec: &StableKernelSpec, j: u32, t: f64, x: f64) -> Result<f64> {
    check_time("density_derivative", t)?;
    spec.require_1d("density_derivative")?;
    if spec.is_gaussian() {
        let g = gaussian_unchecked(1, t, x);
        return match j {
            1 => Ok(-x / (2.0 * t) * g),
            2 => Ok((x * x / (4.0 * t * t) - 1.0 / (2.0 * t)) * g),
            _ => Err(Error::domain("density_derivative", "order must be 1 or 2")),
        };
    }
    let alpha = spec.alpha;
    let xi_max = spec.truncation.cutoff(t, alpha, j);
    let tol = spec.quadrature_tol;
    match j {
        1 => {
            if x == 0.0 {
                return Ok(0.0);
            }
            let env = |xi: f64| xi * (-t * xi.powf(alpha)).exp();
            let v = transform("density_derivative", &env, x.abs(), Oscillator::Sin, xi_max, tol)?;
            Ok(-v * x.signum())
        }
        2 => {
            let env = |xi: f64| xi * xi * (-t * xi.powf(alpha)).exp();
            let v = transform("density_derivative", &env, x.abs(), Oscillator::Cos, xi_max, tol)?;
            Ok(-v)
        }
        _ => Err(Error::domain("density_derivative", "order must be 1 or 2")),
    }
}

/// `p^(α)(t,x) - p^(2)(t,x)` as a single cosine transform of
/// `e^{-tξ^α} - e^{-tξ²}`, `d = 1`.
pub fn density_diff(spec: &StableKernelSpec, t: f64, x: f64) -> Result<f64> {
    check_time("density_diff", t)?;
    spec.require_1d("density_diff")?;
    if spec.is_gaussian() {
        return Ok(0.0);
    }
    let alpha = spec.alpha;
    // e^{-a} - e^{-b} = -e^{-a}·expm1(a - b) keeps the O(2-α) difference exact.
    let env = |xi: f64| {
        let a = t * xi.powf(alpha);
        let b = t * xi * xi;
        -(-a).exp() * (a - b).exp_m1()
    };
    let xi_max = spec
        .truncation
        .cutoff(t, alpha, 0)
        .max(spec.truncation.cutoff(t, 2.0, 0));
    transform("density_diff", &env, x.abs(), Oscillator::Cos, xi_max, spec.quadrature_tol)
}

/// Leading terms of the large-`|x|` expansion of `p^(α)(1, x)` in `d = 1`:
/// pairs `(c_k, kα + 1)` with `p(1, x) ≈ Σ_k c_k |x|^{-(kα+1)}`,
/// `c_k = (-1)^{k+1} Γ(kα+1) sin(kπα/2) / (π k!)`.
pub fn tail_expansion(alpha: f64, terms: usize) -> Result<Vec<(f64, f64)>> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::domain("tail_expansion", "alpha must lie in (0,2)"));
    }
    let mut out = Vec::with_capacity(terms);
    let mut factorial = 1.0;
    for k in 1..=terms {
        factorial *= k as f64;
        let ka = k as f64 * alpha;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        // sin(kπα/2) vanishes when kα is an even integer.
        let half = 0.5 * ka;
        let sin = if (half - half.round()).abs() < 1e-12 { 0.0 } else { (PI * half).sin() };
        let c = sign * crate::kernel_math::ln_gamma(ka + 1.0).exp() * sin / (PI * factorial);
        out.push((c, ka + 1.0));
    }
    Ok(out)
}

/// Monte Carlo estimate `E p^(2)(S_t, x)` and its standard error.
pub fn density_subordination(
    spec: &StableKernelSpec,
    t: f64,
    x: &[f64],
    n: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    check_time("density_subordination", t)?;
    if !(spec.alpha < 2.0) {
        return Err(Error::domain("density_subordination", "alpha must lie in (0,2)"));
    }
    if n < 1000 {
        return Err(Error::domain("density_subordination", "need at least 1000 samples"));
    }
    if x.len() != spec.d {
        return Err(Error::domain("density_subordination", "point dimension must equal d"));
    }
    let r = norm(x);
    let mut rng = RngStream::new(seed, 0);
    let s = sampling::sample_subordinator(spec.alpha, t, n, &mut rng)?;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (k, si) in s.iter().enumerate() {
        let v = gaussian_unchecked(spec.d, *si, r);
        let delta = v - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (v - mean);
    }
    let var = m2 / (n - 1) as f64;
    Ok((mean, (var / n as f64).sqrt()))
}

/// Supremum of `p^(α)(t,x)/ϱ_α(t,x)` over a grid, with its location.
pub fn certify_uniform_bound(
    spec: &StableKernelSpec,
    t_grid: &[f64],
    x_grid: &[f64],
) -> Result<(f64, (f64, f64))> {
    spec.require_1d("certify_uniform_bound")?;
    if t_grid.is_empty() || x_grid.is_empty() {
        return Err(Error::Config("certify_uniform_bound: empty grid".into()));
    }
    let profile = BoundProfile::stable(1, spec.alpha)?;
    let mut best = (0.0, (f64::NAN, f64::NAN));
    for &t in t_grid {
        for &x in x_grid {
            let ratio = density_1d(spec, t, x)? / profile.eval_radius(t, x)?;
            if ratio > best.0 {
                best = (ratio, (t, x));
            }
        }
    }
    Ok(best)
}

/// `D(α) = sup_x |p^(α)(t,x) - p^(2)(t,x)| / [(1+|ln t|)(1+t^{(α-2)/α}) Σ ϱ_{γ1,γ2}(t,x)]`
/// with `γ1, γ2 ∈ {α, 2}`.
pub fn diff_rate_statistic(spec: &StableKernelSpec, t: f64, x_grid: &[f64]) -> Result<f64> {
    check_time("diff_rate_statistic", t)?;
    let alpha = spec.alpha;
    let time_factor = (1.0 + t.ln().abs()) * (1.0 + t.powf((alpha - 2.0) / alpha));
    let mut profiles = Vec::with_capacity(4);
    for g1 in [alpha, 2.0] {
        for g2 in [alpha, 2.0] {
            profiles.push(BoundProfile::new(1, 0.0, g1, g2)?);
        }
    }
    let mut sup: f64 = 0.0;
    for &x in x_grid {
        let envelope: f64 = profiles.iter().map(|p| p.eval_radius_unchecked(t, x)).sum();
        let diff = density_diff(spec, t, x)?;
        sup = sup.max(diff.abs() / (time_factor * envelope));
    }
    Ok(sup)
}

/// Log–log fit of [`diff_rate_statistic`] against `2 - α`.
pub fn certify_diff_rate(specs: &[StableKernelSpec], t: f64, x_grid: &[f64]) -> Result<RateFit> {
    if specs.len() < 4 {
        return Err(Error::Config(format!(
            "certify_diff_rate needs at least 4 alpha values, got {}",
            specs.len()
        )));
    }
    let mut alphas = Vec::with_capacity(specs.len());
    let mut values = Vec::with_capacity(specs.len());
    for spec in specs {
        if !(spec.alpha >= 1.5 && spec.alpha < 2.0) {
            return Err(Error::Config(format!(
                "certify_diff_rate: alpha {} outside [1.5, 2)",
                spec.alpha
            )));
        }
        alphas.push(spec.alpha);
        values.push(diff_rate_statistic(spec, t, x_grid)?);
    }
    RateFit::from_alphas(&alphas, &values, 4)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(alpha: f64) -> StableKernelSpec {
        StableKernelSpec::new(1, alpha).unwrap()
    }

    #[test]
    fn gaussian_closed_forms() {
        assert_relative_eq!(
            gaussian_density(1, 1.0, &[0.0]).unwrap(),
            (4.0 * PI).powf(-0.5),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            gaussian_density(2, 0.5, &[0.0, 0.0]).unwrap(),
            1.0 / (2.0 * PI),
            max_relative = 1e-15
        );
        assert!(gaussian_density(1, 0.0, &[0.0]).is_err());
    }

    #[test]
    fn cauchy_point_values() {
        let s = spec(1.0);
        assert_relative_eq!(density_1d(&s, 1.0, 1.0).unwrap(), 1.0 / (2.0 * PI), max_relative = 1e-10);
        assert_relative_eq!(
            density_derivative(&s, 1, 1.0, 1.0).unwrap(),
            -1.0 / (2.0 * PI),
            max_relative = 1e-9
        );
        assert_eq!(density_derivative(&s, 1, 1.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn value_at_origin_is_gamma_ratio() {
        for alpha in [0.7, 1.3, 1.8] {
            let g = crate::kernel_math::gamma_fn(1.0 + 1.0 / alpha).unwrap();
            assert_relative_eq!(density_1d(&spec(alpha), 1.0, 0.0).unwrap(), g / PI, max_relative = 1e-10);
        }
    }

    #[test]
    fn diff_at_origin() {
        let v = density_diff(&spec(1.0), 1.0, 0.0).unwrap();
        assert_relative_eq!(v, 1.0 / PI - (4.0 * PI).powf(-0.5), max_relative = 1e-9);
        assert_eq!(density_diff(&spec(2.0), 1.0, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn second_derivative_gaussian() {
        let s = spec(2.0);
        let (t, x): (f64, f64) = (0.7, 0.9);
        let g = (4.0 * PI * t).powf(-0.5) * (-x * x / (4.0 * t)).exp();
        let exact = (x * x / (4.0 * t * t) - 1.0 / (2.0 * t)) * g;
        assert_relative_eq!(density_derivative(&s, 2, t, x).unwrap(), exact, max_relative = 1e-12);
    }

    #[test]
    fn higher_dimension_requires_subordination() {
        let s = StableKernelSpec::new(2, 1.5).unwrap();
        assert!(density(&s, 1.0, &[0.0, 0.0]).is_err());
        assert!(certify_diff_rate(&[spec(1.9)], 1.0, &[0.0]).is_err());
    }
}
