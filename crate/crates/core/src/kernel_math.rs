//! Special functions and the bound-profile calculus.
//!
//! Everything here is a pure function of its arguments. The two-regime
//! profile
//!
//! ```text
//! ϱ^(k)_{γ1,γ2}(t, x) = t^{-(d+k)/γ1} ∧ t / |x|^{d+k+γ2}
//! ```
//!
//! is the envelope that every kernel estimate in the crate is measured
//! against; the inequality checkers return ratios rather than asserting a
//! constant, since only boundedness of those ratios is meaningful.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quad;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Validated band of [`gamma_fn`].
pub const GAMMA_BAND: (f64, f64) = (0.05, 50.0);

fn lanczos_sum(z: f64) -> f64 {
    let mut s = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        s += c / (z + i as f64);
    }
    s
}

/// `ln Γ(s)` for `s > 0` (Lanczos, g = 7).
pub fn ln_gamma(s: f64) -> f64 {
    if s < 0.5 {
        // Reflection keeps the Lanczos sum in its accurate range.
        (PI / (PI * s).sin()).ln() - ln_gamma(1.0 - s)
    } else {
        let z = s - 1.0;
        let t = z + LANCZOS_G + 0.5;
        0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + lanczos_sum(z).ln()
    }
}

fn gamma_unchecked(s: f64) -> f64 {
    if s < 0.5 {
        PI / ((PI * s).sin() * gamma_unchecked(1.0 - s))
    } else if s <= 20.0 {
        let z = s - 1.0;
        let t = z + LANCZOS_G + 0.5;
        (2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * lanczos_sum(z)
    } else {
        ln_gamma(s).exp()
    }
}

/// Γ(s) on the validated band `[0.05, 50]`.
pub fn gamma_fn(s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::domain("gamma_fn", format!("argument must be positive, got {s}")));
    }
    if s < GAMMA_BAND.0 || s > GAMMA_BAND.1 {
        return Err(Error::domain(
            "gamma_fn",
            format!("argument {s} outside the validated band [0.05, 50]"),
        ));
    }
    Ok(gamma_unchecked(s))
}

/// B(s1, s2) = Γ(s1)Γ(s2)/Γ(s1+s2).
pub fn beta_fn(s1: f64, s2: f64) -> Result<f64> {
    if !(s1 > 0.0 && s2 > 0.0) {
        return Err(Error::domain(
            "beta_fn",
            format!("arguments must be positive, got ({s1}, {s2})"),
        ));
    }
    Ok((ln_gamma(s1) + ln_gamma(s2) - ln_gamma(s1 + s2)).exp())
}

/// Surface measure ω_{d-1} = 2π^{d/2}/Γ(d/2) of the unit sphere in R^d.
pub fn sphere_area(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    2.0 * PI.powf(h) / gamma_unchecked(h)
}

/// Lévy measure ν^(α)(dz) = 𝒞(d,α)|z|^{-d-α} dz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevyMeasureSpec {
    pub d: usize,
    pub alpha: f64,
}

impl LevyMeasureSpec {
    pub fn new(d: usize, alpha: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::domain("LevyMeasureSpec", "dimension must be positive"));
        }
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::domain(
                "LevyMeasureSpec",
                format!("alpha must lie in (0,2), got {alpha}"),
            ));
        }
        Ok(Self { d, alpha })
    }
}

/// 𝒞(d,α) = αΓ((d+α)/2) / (2^{1-α} π^{d/2} Γ((2-α)/2)).
pub fn levy_constant(spec: LevyMeasureSpec) -> Result<f64> {
    let LevyMeasureSpec { d, alpha } = LevyMeasureSpec::new(spec.d, spec.alpha)?;
    let df = d as f64;
    let log = alpha.ln() + ln_gamma((df + alpha) / 2.0)
        - (1.0 - alpha) * std::f64::consts::LN_2
        - 0.5 * df * PI.ln()
        - ln_gamma((2.0 - alpha) / 2.0);
    Ok(log.exp())
}

/// Which side of the sphere |z| = δ a tail integral runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailRegion {
    Inside,
    Outside,
}

/// `∫_{|z|≤δ} |z|^θ ν(dz)` (θ > α) or `∫_{|z|>δ} |z|^θ ν(dz)` (θ < α), in closed form.
pub fn levy_tail_integral(
    spec: LevyMeasureSpec,
    delta: f64,
    theta: f64,
    region: TailRegion,
) -> Result<f64> {
    let c = levy_constant(spec)?;
    if !(delta > 0.0) {
        return Err(Error::domain("levy_tail_integral", "delta must be positive"));
    }
    let alpha = spec.alpha;
    let mass = sphere_area(spec.d) * c;
    match region {
        TailRegion::Inside if theta > alpha => {
            Ok(mass / (theta - alpha) * delta.powf(theta - alpha))
        }
        TailRegion::Outside if theta < alpha => {
            Ok(mass / (alpha - theta) * delta.powf(theta - alpha))
        }
        _ => Err(Error::domain(
            "levy_tail_integral",
            format!("integral diverges for theta={theta}, alpha={alpha}, region={region:?}"),
        )),
    }
}

/// The profile ϱ^(k)_{γ1,γ2} in dimension d.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundProfile {
    pub d: usize,
    pub k: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

impl BoundProfile {
    pub fn new(d: usize, k: f64, gamma1: f64, gamma2: f64) -> Result<Self> {
        let ok_gamma = |g: f64| g > 0.0 && g <= 2.0;
        if d == 0 || !(k >= 0.0) || !ok_gamma(gamma1) || !ok_gamma(gamma2) {
            return Err(Error::domain(
                "BoundProfile",
                format!("need d>=1, k>=0, gammas in (0,2]; got d={d}, k={k}, ({gamma1}, {gamma2})"),
            ));
        }
        Ok(Self {
            d,
            k,
            gamma1,
            gamma2,
        })
    }

    /// ϱ_α = ϱ^(0)_{α,α}.
    pub fn stable(d: usize, alpha: f64) -> Result<Self> {
        Self::new(d, 0.0, alpha, alpha)
    }

    fn order(&self) -> f64 {
        self.d as f64 + self.k
    }

    /// Radius where the two regimes meet: `t^{(d+k+γ1)/(γ1(d+k+γ2))}`.
    pub fn crossover_radius(&self, t: f64) -> f64 {
        let n = self.order();
        t.powf((n + self.gamma1) / (self.gamma1 * (n + self.gamma2)))
    }

    /// Profile value at time `t > 0` and radius `r = |x|`.
    pub fn eval_radius(&self, t: f64, r: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::domain("rho", format!("t must be positive, got {t}")));
        }
        Ok(self.eval_radius_unchecked(t, r))
    }

    pub(crate) fn eval_radius_unchecked(&self, t: f64, r: f64) -> f64 {
        let n = self.order();
        let near = t.powf(-n / self.gamma1);
        let r = r.abs();
        if r == 0.0 {
            return near;
        }
        let far = t / r.powf(n + self.gamma2);
        near.min(far)
    }
}

/// ϱ^(k)_{γ1,γ2}(t, x) for a point `x ∈ R^d`.
pub fn rho(profile: &BoundProfile, t: f64, x: &[f64]) -> Result<f64> {
    profile.eval_radius(t, norm(x))
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// ∫_{R^d} |x|^θ ϱ_{γ1,γ2}(t, x) dx by radial quadrature.
pub fn rho_mass(profile: &BoundProfile, theta: f64, t: f64) -> Result<f64> {
    if !(theta >= 0.0 && theta < profile.gamma2) {
        return Err(Error::domain(
            "rho_mass",
            format!("theta must lie in [0, gamma2), got {theta}"),
        ));
    }
    if !(t > 0.0) {
        return Err(Error::domain("rho_mass", "t must be positive"));
    }
    let d = profile.d as f64;
    let rstar = profile.crossover_radius(t);
    let near = |r: f64| r.powf(theta + d - 1.0) * profile.eval_radius_unchecked(t, r);
    // Far part with r = r*/u, u in (0, 1]. Both branches of the min are
    // written in u directly so large r never overflows.
    let n = profile.order();
    let near_t = t.powf(-n / profile.gamma1);
    let far = |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        let a = near_t * rstar.powf(theta + d) * u.powf(-(theta + d + 1.0));
        let b = t * rstar.powf(theta + d - n - profile.gamma2) * u.powf(n + profile.gamma2 - theta - d - 1.0);
        a.min(b)
    };
    let scale = profile.eval_radius_unchecked(t, 0.0) * rstar.powf(theta + d);
    let tol = 1e-13 * scale.max(f64::MIN_POSITIVE);
    let inner = quad::integrate(&near, 0.0, rstar, tol, 1e-13)?;
    let outer = quad::integrate(&far, 0.0, 1.0, tol, 1e-13)?;
    Ok(sphere_area(profile.d) * (inner.value + outer.value))
}

/// Ratio LHS/RHS of the product inequality
/// `ϱ_{γ1,γ2}(t,x-y) ϱ_{γ3,γ4}(s,y) ≤ c (ϱ_{γ1,γ2}(t,x-y)+ϱ_{γ3,γ4}(s,y)) Σ_{i∈{1,3},j∈{2,4}} ϱ_{γi,γj}(t+s,x)`.
pub fn check_3p(t: f64, s: f64, x: &[f64], y: &[f64], gammas: [f64; 4]) -> Result<f64> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::domain("check_3p", "points must share a positive dimension"));
    }
    let d = x.len();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let p12 = BoundProfile::new(d, 0.0, gammas[0], gammas[1])?;
    let p34 = BoundProfile::new(d, 0.0, gammas[2], gammas[3])?;
    let a = rho(&p12, t, &xy)?;
    let b = rho(&p34, s, y)?;
    let mut sum = 0.0;
    for gi in [gammas[0], gammas[2]] {
        for gj in [gammas[1], gammas[3]] {
            sum += rho(&BoundProfile::new(d, 0.0, gi, gj)?, t + s, x)?;
        }
    }
    Ok(a * b / ((a + b) * sum))
}

/// Behaviour of a test function far from the evaluation point, used to close
/// the outer part of the fractional Laplacian integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FarField {
    /// `f(y)` equals `limit` (to working precision) for `|y| > radius`.
    Decays { radius: f64, limit: f64 },
    /// `f` is periodic with the given period and mean.
    Periodic { period: f64, mean: f64 },
}

/// A smooth scalar function on R with bounded derivatives.
pub trait TestFunction {
    fn value(&self, x: f64) -> f64;
    fn far_field(&self) -> FarField;

    /// `f(x+z) + f(x-z) - 2f(x)`. Override with a cancellation-free form
    /// when one exists; the quadrature evaluates it at `z` near 1e-7.
    fn second_difference(&self, x: f64, z: f64) -> f64 {
        self.value(x + z) + self.value(x - z) - 2.0 * self.value(x)
    }

    /// Classical second derivative; the default is a Richardson-extrapolated
    /// central difference.
    fn second_derivative(&self, x: f64) -> f64 {
        let d2 = |h: f64| (self.value(x + h) - 2.0 * self.value(x) + self.value(x - h)) / (h * h);
        let (h1, h2) = (2e-3, 1e-3);
        let (a, b) = (d2(h1), d2(h2));
        let c = d2(h2 / 2.0);
        // Two Richardson steps on the O(h^2) central difference.
        let ab = (4.0 * b - a) / 3.0;
        let bc = (4.0 * c - b) / 3.0;
        (16.0 * bc - ab) / 15.0
    }
}

/// `cos(ω x)`.
#[derive(Debug, Clone, Copy)]
pub struct Cosine {
    pub omega: f64,
}

impl TestFunction for Cosine {
    fn value(&self, x: f64) -> f64 {
        (self.omega * x).cos()
    }
    fn far_field(&self) -> FarField {
        FarField::Periodic {
            period: 2.0 * PI / self.omega.abs(),
            mean: 0.0,
        }
    }
    fn second_difference(&self, x: f64, z: f64) -> f64 {
        let s = (0.5 * self.omega * z).sin();
        -4.0 * (self.omega * x).cos() * s * s
    }
    fn second_derivative(&self, x: f64) -> f64 {
        -self.omega * self.omega * (self.omega * x).cos()
    }
}

/// `exp(-x²)`.
#[derive(Debug, Clone, Copy)]
pub struct GaussianBump;

impl TestFunction for GaussianBump {
    fn value(&self, x: f64) -> f64 {
        (-x * x).exp()
    }
    fn far_field(&self) -> FarField {
        FarField::Decays {
            radius: 6.5,
            limit: 0.0,
        }
    }
    fn second_difference(&self, x: f64, z: f64) -> f64 {
        if z.abs() > 0.1 {
            return (-(x + z) * (x + z)).exp() + (-(x - z) * (x - z)).exp() - 2.0 * (-x * x).exp();
        }
        // 2e^{-x²}(e^{-z²}cosh(2xz) - 1), with cosh(2xz) - 1 = 2sinh²(xz).
        let sh = (x * z).sinh();
        let cosh_m1 = 2.0 * sh * sh;
        2.0 * (-x * x).exp() * ((-z * z).exp_m1() * (1.0 + cosh_m1) + cosh_m1)
    }
    fn second_derivative(&self, x: f64) -> f64 {
        (4.0 * x * x - 2.0) * (-x * x).exp()
    }
}

/// A constant function.
#[derive(Debug, Clone, Copy)]
pub struct Constant(pub f64);

impl TestFunction for Constant {
    fn value(&self, _x: f64) -> f64 {
        self.0
    }
    fn far_field(&self) -> FarField {
        FarField::Decays {
            radius: 0.0,
            limit: self.0,
        }
    }
    fn second_derivative(&self, _x: f64) -> f64 {
        0.0
    }
}

/// Δ^{α/2} f(x) in one dimension, `α ∈ (0, 2]`.
///
/// Uses the symmetrized form `½∫(f(x+z)+f(x-z)-2f(x)) ν(dz)` split at
/// |z| = 1. The inner part is integrated against the weight `z^{1-α}` with
/// Gauss–Jacobi rules of increasing order applied to the smooth quotient
/// `(f(x+z)+f(x-z)-2f(x))/z²`; the outer part is integrated adaptively and
/// closed with the tail mass of ν. `α = 2` returns the classical second
/// derivative.
pub fn frac_laplacian<F: TestFunction + ?Sized>(f: &F, alpha: f64, x: f64, tol: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::domain("frac_laplacian", format!("alpha must lie in (0,2], got {alpha}")));
    }
    if alpha == 2.0 {
        return Ok(f.second_derivative(x));
    }
    let spec = LevyMeasureSpec::new(1, alpha)?;
    let c = levy_constant(spec)?;
    let fx = f.value(x);
    let second_diff = |z: f64| f.second_difference(x, z);
    // Integrals below are of z^{-1-α}·(...) over z > 0; the symmetric ½ and
    // the two half-lines cancel, leaving a factor 𝒞.
    let budget = tol / c.max(1e-300) / 4.0;

    // Inner: ∫_0^1 [D(z)/z²] z^{1-α} dz.
    let quotient = |z: f64| second_diff(z) / (z * z);
    let mut prev = f64::NAN;
    let mut inner = None;
    let mut n = 8;
    while n <= 256 {
        let (nodes, weights) = quad::gauss_jacobi_unit(n, 1.0 - alpha, 0.0)?;
        let v: f64 = nodes.iter().zip(&weights).map(|(z, w)| w * quotient(*z)).sum();
        if (v - prev).abs() <= budget {
            inner = Some(v);
            break;
        }
        prev = v;
        n *= 2;
    }
    let inner = inner.ok_or_else(|| {
        Error::numeric("frac_laplacian", "inner Gauss-Jacobi sequence did not settle", (prev).abs())
    })?;

    let weight = |z: f64| z.powf(-1.0 - alpha);
    let outer = match f.far_field() {
        FarField::Decays { radius, limit } => {
            let z_cut = (radius + x.abs()).max(1.0);
            let body = if z_cut > 1.0 {
                quad::integrate(&|z: f64| second_diff(z) * weight(z), 1.0, z_cut, budget, 0.0)?.value
            } else {
                0.0
            };
            // Beyond z_cut both f(x±z) equal the limit: ∫ (2·limit-2f(x)) z^{-1-α}.
            let tail_mass = levy_tail_integral(spec, z_cut, 0.0, TailRegion::Outside)? / (2.0 * c);
            body + (2.0 * limit - 2.0 * fx) * tail_mass
        }
        FarField::Periodic { period, mean } => {
            // ∫_1^∞ (D(z) - D̄) z^{-1-α} + D̄/α with D̄ = 2·mean - 2f(x).
            let dbar = 2.0 * mean - 2.0 * fx;
            let centred = |z: f64| (second_diff(z) - dbar) * weight(z);
            let mut sum = 0.0;
            let mut lo = 1.0;
            let mut k = 0usize;
            let mut last_panel;
            loop {
                let hi = lo + period;
                let r = quad::integrate(&centred, lo, hi, budget * 1e-3, 1e-12)?;
                sum += r.value;
                last_panel = r.value;
                k += 1;
                // Panel integrals of a zero-mean periodic factor against a
                // z^{-1-α} weight decay like k^{-2-α}; estimate the remainder.
                let tail = last_panel.abs() * k as f64 / (1.0 + alpha);
                if k > 4 && tail < budget {
                    sum += last_panel * k as f64 / (1.0 + alpha);
                    break;
                }
                if k > 2_000_000 {
                    return Err(Error::numeric("frac_laplacian", "periodic tail did not converge", tail));
                }
                lo = hi;
            }
            sum + dbar / alpha
        }
    };
    Ok(c * (inner + outer))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_trivial_values() {
        assert_relative_eq!(gamma_fn(1.0).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(gamma_fn(0.5).unwrap(), PI.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(gamma_fn(5.0).unwrap(), 24.0, max_relative = 1e-14);
        assert_relative_eq!(beta_fn(1.0, 1.0).unwrap(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn gamma_rejects_nonpositive_and_out_of_band() {
        assert!(matches!(gamma_fn(0.0), Err(Error::Domain { .. })));
        assert!(matches!(gamma_fn(-1.5), Err(Error::Domain { .. })));
        assert!(gamma_fn(0.01).is_err());
        assert!(gamma_fn(60.0).is_err());
        assert!(beta_fn(0.0, 1.0).is_err());
    }

    #[test]
    fn levy_constant_cauchy() {
        let c = levy_constant(LevyMeasureSpec::new(1, 1.0).unwrap()).unwrap();
        assert_relative_eq!(c, 1.0 / PI, max_relative = 1e-14);
        assert!(LevyMeasureSpec::new(1, 2.0).is_err());
    }

    #[test]
    fn levy_constant_vanishes_linearly_at_zero() {
        let c1 = levy_constant(LevyMeasureSpec::new(2, 1e-4).unwrap()).unwrap();
        let c2 = levy_constant(LevyMeasureSpec::new(2, 2e-4).unwrap()).unwrap();
        assert_relative_eq!(c2 / c1, 2.0, max_relative = 1e-3);
    }

    #[test]
    fn tail_integrals_closed_form() {
        let spec = LevyMeasureSpec::new(1, 1.0).unwrap();
        let inside = levy_tail_integral(spec, 1.0, 2.0, TailRegion::Inside).unwrap();
        let outside = levy_tail_integral(spec, 1.0, 0.0, TailRegion::Outside).unwrap();
        assert_relative_eq!(inside, 2.0 / PI, max_relative = 1e-14);
        assert_relative_eq!(outside, 2.0 / PI, max_relative = 1e-14);
        assert!(levy_tail_integral(spec, 1.0, 0.5, TailRegion::Inside).is_err());
        assert!(levy_tail_integral(spec, 1.0, 1.5, TailRegion::Outside).is_err());
    }

    #[test]
    fn rho_examples() {
        let p = BoundProfile::new(1, 0.0, 2.0, 2.0).unwrap();
        assert_eq!(rho(&p, 1.0, &[0.0]).unwrap(), 1.0);
        assert_relative_eq!(rho(&p, 1.0, &[2.0]).unwrap(), 0.125);
        assert!(rho(&p, 0.0, &[1.0]).is_err());
        assert!(BoundProfile::new(1, 0.0, 2.5, 1.0).is_err());
    }

    #[test]
    fn rho_mass_piecewise_integral() {
        let p = BoundProfile::new(1, 0.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(rho_mass(&p, 0.0, 1.0).unwrap(), 4.0, max_relative = 1e-10);
        assert!(rho_mass(&p, 1.0, 1.0).is_err());
    }

    #[test]
    fn frac_laplacian_constant_is_zero() {
        let v = frac_laplacian(&Constant(3.0), 1.3, 0.7, 1e-10).unwrap();
        assert!(v.abs() < 1e-10);
    }

    #[test]
    fn frac_laplacian_alpha_two_is_second_derivative() {
        let v = frac_laplacian(&Cosine { omega: 1.0 }, 2.0, PI / 2.0, 1e-10).unwrap();
        assert!(v.abs() < 1e-12);
    }
}
