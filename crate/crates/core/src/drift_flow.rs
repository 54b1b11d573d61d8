//! Drift catalog, mollification and the regularized flow `θ̇ = b₁(θ)`.
//!
//! Every catalog drift carries the Hölder data `(β, κ₀)` of
//! `|b(x)-b(y)| ≤ κ₀(|x-y|^β ∨ |x-y|)` and, where it holds, dissipativity
//! data `(c₀, c₁, r)` of `x·b(x) ≤ -c₀|x|^{2+r} + c₁`. The constants are
//! derived by hand for each family and spot-checked by the tests.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

/// Dissipativity triple `(c₀, c₁, r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dissipativity {
    pub c0: f64,
    pub c1: f64,
    pub r: f64,
}

/// The drift families that carry condition certificates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DriftKind {
    Zero,
    Constant { c: f64 },
    /// `b(x) = -x`.
    Ou,
    /// `b(x) = -x + a|sin x|^β`.
    SinPerturbed { a: f64, beta: f64 },
    /// `b(x) = -x + a·sign(x)·min(|x|^β, 1)`.
    HolderBump { a: f64, beta: f64 },
}

/// A one-dimensional drift with its declared condition data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftSpec {
    pub kind: DriftKind,
    pub beta: f64,
    pub kappa0: f64,
    pub dissipative: Option<Dissipativity>,
}

fn perturbation_params(a: f64, beta: f64) -> Result<()> {
    if !(a.abs() < 1.0) || !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::Config(format!(
            "perturbed drift needs |a| < 1 and beta in (0,1], got a={a}, beta={beta}"
        )));
    }
    Ok(())
}

impl DriftSpec {
    pub fn zero() -> Self {
        Self {
            kind: DriftKind::Zero,
            beta: 1.0,
            kappa0: 1.0,
            dissipative: None,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            kind: DriftKind::Constant { c },
            beta: 1.0,
            kappa0: 1.0,
            dissipative: None,
        }
    }

    pub fn ou() -> Self {
        Self {
            kind: DriftKind::Ou,
            beta: 1.0,
            kappa0: 1.0,
            // c₁ is slack: x·(-x) = -x² ≤ -x² + c₁ for any c₁ > 0.
            dissipative: Some(Dissipativity {
                c0: 1.0,
                c1: 1.0,
                r: 0.0,
            }),
        }
    }

    pub fn sin_perturbed(a: f64, beta: f64) -> Result<Self> {
        perturbation_params(a, beta)?;
        Ok(Self {
            kind: DriftKind::SinPerturbed { a, beta },
            beta,
            kappa0: 1.0 + a.abs(),
            dissipative: Some(perturbed_dissipativity(a)),
        })
    }

    pub fn holder_bump(a: f64, beta: f64) -> Result<Self> {
        perturbation_params(a, beta)?;
        Ok(Self {
            kind: DriftKind::HolderBump { a, beta },
            beta,
            kappa0: 1.0 + a.abs() * 2f64.powf(1.0 - beta),
            dissipative: Some(perturbed_dissipativity(a)),
        })
    }

    /// Catalog lookup by name (`zero`, `constant`, `ou`, `sin`, `bump`).
    pub fn from_name(name: &str, a: f64, beta: f64) -> Result<Self> {
        match name {
            "zero" => Ok(Self::zero()),
            "constant" => Ok(Self::constant(a)),
            "ou" => Ok(Self::ou()),
            "sin" => Self::sin_perturbed(a, beta),
            "bump" => Self::holder_bump(a, beta),
            other => Err(Error::Config(format!("unknown drift `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            DriftKind::Zero => "zero",
            DriftKind::Constant { .. } => "constant",
            DriftKind::Ou => "ou",
            DriftKind::SinPerturbed { .. } => "sin",
            DriftKind::HolderBump { .. } => "bump",
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.kind {
            DriftKind::Zero => 0.0,
            DriftKind::Constant { c } => c,
            DriftKind::Ou => -x,
            DriftKind::SinPerturbed { a, beta } => -x + a * x.sin().abs().powf(beta),
            DriftKind::HolderBump { a, beta } => -x + a * x.signum() * x.abs().powf(beta).min(1.0),
        }
    }

    /// `(slope, intercept)` when the drift is affine.
    pub fn affine(&self) -> Option<(f64, f64)> {
        match self.kind {
            DriftKind::Zero => Some((0.0, 0.0)),
            DriftKind::Constant { c } => Some((0.0, c)),
            DriftKind::Ou => Some((-1.0, 0.0)),
            _ => None,
        }
    }

    /// Points in `[lo, hi]` where the drift is not smooth.
    fn cusps(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out = Vec::new();
        match self.kind {
            DriftKind::SinPerturbed { .. } => {
                let mut k = (lo / PI).ceil();
                while k * PI < hi {
                    out.push(k * PI);
                    k += 1.0;
                }
            }
            DriftKind::HolderBump { .. } => {
                out.extend([-1.0, 0.0, 1.0].into_iter().filter(|c| *c > lo && *c < hi));
            }
            _ => {}
        }
        out
    }

    /// Checks the declared Hölder inequality at one pair; returns LHS/RHS.
    pub fn holder_ratio(&self, x: f64, y: f64) -> f64 {
        let d = (x - y).abs();
        if d == 0.0 {
            return 0.0;
        }
        (self.eval(x) - self.eval(y)).abs() / (self.kappa0 * d.powf(self.beta).max(d))
    }

    /// `x·b(x) + c₀|x|^{2+r} - c₁`, nonpositive when the certificate holds.
    pub fn dissipativity_margin(&self, x: f64) -> Option<f64> {
        self.dissipative
            .map(|d| x * self.eval(x) + d.c0 * x.abs().powf(2.0 + d.r) - d.c1)
    }
}

fn perturbed_dissipativity(a: f64) -> Dissipativity {
    // x·b(x) ≤ -x² + |a||x| ≤ -x²/2 + a²/2.
    Dissipativity {
        c0: 0.5,
        c1: if a == 0.0 { 0.5 } else { a * a / 2.0 },
        r: 0.0,
    }
}

/// Standard bump mollifier `ρ_ε(z) = ε^{-1}ρ(z/ε)`, `ρ ∝ exp(-1/(1-z²))` on `|z| < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MollifierSpec {
    pub epsilon: f64,
}

impl Default for MollifierSpec {
    fn default() -> Self {
        Self { epsilon: 1.0 }
    }
}

fn bump_raw(z: f64) -> f64 {
    if z.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - z * z)).exp()
    }
}

fn bump_normalizer() -> f64 {
    static NORM: OnceLock<f64> = OnceLock::new();
    *NORM.get_or_init(|| {
        let mass = quad::integrate(&bump_raw, -1.0, 1.0, 1e-15, 1e-15)
            .expect("bump integral converges")
            .value;
        1.0 / mass
    })
}

impl MollifierSpec {
    pub fn density(&self, z: f64) -> f64 {
        bump_raw(z / self.epsilon) * bump_normalizer() / self.epsilon
    }
}

/// `b_ε(x) = ∫ b(y) ρ_ε(x-y) dy`.
pub fn mollify(drift: &DriftSpec, moll: &MollifierSpec, x: f64) -> Result<f64> {
    if !(moll.epsilon > 0.0) {
        return Err(Error::domain("mollify", "epsilon must be positive"));
    }
    if let Some((slope, intercept)) = drift.affine() {
        // Symmetric unit-mass kernel reproduces affine functions.
        return Ok(slope * x + intercept);
    }
    let eps = moll.epsilon;
    let (lo, hi) = (x - eps, x + eps);
    let mut pts = vec![lo];
    pts.extend(drift.cusps(lo, hi));
    pts.push(hi);
    let f = |y: f64| drift.eval(y) * moll.density(x - y);
    quad::integrate_points(&f, &pts, 1e-13, 1e-13)
        .map(|r| r.value)
        .map_err(|e| match e {
            Error::Numeric { msg, achieved, .. } => Error::numeric("mollify", msg, achieved),
            other => other,
        })
}

/// `∂_x b_ε(x) = ∫ b(y) ∂_xρ_ε(x-y) dy`.
fn mollify_derivative(drift: &DriftSpec, moll: &MollifierSpec, x: f64) -> Result<f64> {
    if let Some((slope, _)) = drift.affine() {
        return Ok(slope);
    }
    let eps = moll.epsilon;
    let norm = bump_normalizer() / (eps * eps);
    let d_rho = |z: f64| {
        let u = z / eps;
        if u.abs() >= 1.0 {
            0.0
        } else {
            let s = 1.0 - u * u;
            norm * (-1.0 / s).exp() * (-2.0 * u / (s * s))
        }
    };
    let (lo, hi) = (x - eps, x + eps);
    let mut pts = vec![lo];
    pts.extend(drift.cusps(lo, hi));
    pts.push(hi);
    let f = |y: f64| drift.eval(y) * d_rho(x - y);
    Ok(quad::integrate_points(&f, &pts, 1e-12, 1e-12)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Extension {
    /// Periodic with the table length as period.
    Periodic,
    /// Constant beyond the table ends.
    Constant,
}

/// Cubic Hermite table of `x ↦ b_ε(x) + x` (the bounded part of a
/// perturbed-OU drift).
#[derive(Debug, Clone)]
struct CorrectionTable {
    lo: f64,
    h: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
    ext: Extension,
}

impl CorrectionTable {
    fn eval(&self, x: f64) -> (f64, f64) {
        let n = self.values.len();
        let span = self.h * (n - 1) as f64;
        let mut u = x - self.lo;
        match self.ext {
            Extension::Periodic => u = u.rem_euclid(span),
            Extension::Constant => {
                if u <= 0.0 {
                    return (self.values[0], 0.0);
                }
                if u >= span {
                    return (self.values[n - 1], 0.0);
                }
            }
        }
        let k = ((u / self.h) as usize).min(n - 2);
        let s = u / self.h - k as f64;
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (m0, m1) = (self.slopes[k] * self.h, self.slopes[k + 1] * self.h);
        let s2 = s * s;
        let s3 = s2 * s;
        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * m1;
        let dv = ((6.0 * s2 - 6.0 * s) * y0
            + (3.0 * s2 - 4.0 * s + 1.0) * m0
            + (-6.0 * s2 + 6.0 * s) * y1
            + (3.0 * s2 - 2.0 * s) * m1)
            / self.h;
        (v, dv)
    }
}

/// A mollified drift ready for repeated evaluation: exact for affine drifts,
/// otherwise `-x + table(x)`.
#[derive(Debug, Clone)]
pub struct MollifiedDrift {
    drift: DriftSpec,
    table: Option<CorrectionTable>,
}

impl MollifiedDrift {
    pub fn new(drift: &DriftSpec, moll: &MollifierSpec) -> Result<Self> {
        if drift.affine().is_some() {
            return Ok(Self {
                drift: *drift,
                table: None,
            });
        }
        let eps = moll.epsilon;
        let (lo, hi, ext) = match drift.kind {
            DriftKind::SinPerturbed { .. } => (0.0, PI, Extension::Periodic),
            DriftKind::HolderBump { .. } => (-(1.0 + eps), 1.0 + eps, Extension::Constant),
            _ => unreachable!("non-affine catalog drifts are handled above"),
        };
        let n = ((hi - lo) / 0.01).ceil() as usize + 1;
        let h = (hi - lo) / (n - 1) as f64;
        let mut values = Vec::with_capacity(n);
        let mut slopes = Vec::with_capacity(n);
        for i in 0..n {
            let x = lo + i as f64 * h;
            values.push(mollify(drift, moll, x)? + x);
            slopes.push(mollify_derivative(drift, moll, x)? + 1.0);
        }
        Ok(Self {
            drift: *drift,
            table: Some(CorrectionTable {
                lo,
                h,
                values,
                slopes,
                ext,
            }),
        })
    }

    pub fn drift(&self) -> &DriftSpec {
        &self.drift
    }

    /// `b_ε(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        match &self.table {
            None => {
                let (a, c) = self.drift.affine().expect("affine drift");
                a * x + c
            }
            Some(t) => -x + t.eval(x).0,
        }
    }

    /// `b_ε'(x)`.
    pub fn derivative(&self, x: f64) -> f64 {
        match &self.table {
            None => self.drift.affine().expect("affine drift").0,
            Some(t) => -1.0 + t.eval(x).1,
        }
    }
}

// Dormand–Prince 5(4) tableau for autonomous systems.
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates the autonomous system `y' = f(y)` from `t0` to `t1` (either
/// direction) with adaptive Dormand–Prince steps and local tolerance `tol`.
pub fn integrate_ode<const N: usize, F: Fn(&[f64; N]) -> [f64; N]>(
    f: F,
    y0: [f64; N],
    t0: f64,
    t1: f64,
    tol: f64,
) -> Result<[f64; N]> {
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(y0);
    }
    let dir = span.signum();
    let mut t = 0.0;
    let total = span.abs();
    let mut h = (total * 0.1).min(0.1);
    let mut y = y0;
    let mut k = [[0.0; N]; 7];
    k[0] = f(&y);
    let mut steps = 0usize;
    while t < total {
        if t + h > total {
            h = total - t;
        }
        let mut y_new = y;
        for s in 1..7 {
            let mut ys = y;
            for (i, v) in ys.iter_mut().enumerate() {
                let mut acc = 0.0;
                for j in 0..s {
                    acc += DP_A[s][j] * k[j][i];
                }
                *v += dir * h * acc;
            }
            k[s] = f(&ys);
            // The last stage point is the fifth-order solution (FSAL).
            y_new = ys;
        }
        let mut err: f64 = 0.0;
        for i in 0..N {
            let e: f64 = (0..7).map(|s| DP_E[s] * k[s][i]).sum();
            let scale = tol * (1.0 + y[i].abs().max(y_new[i].abs()));
            err = err.max((h * e).abs() / scale);
        }
        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("flow", "non-finite state", f64::NAN));
        }
        if err <= 1.0 {
            t += h;
            y = y_new;
            k[0] = k[6];
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h < 1e-14 * total.max(1.0) && t < total {
            return Err(Error::numeric("flow", "step size underflow", err));
        }
        steps += 1;
        if steps > 10_000_000 {
            return Err(Error::numeric("flow", "step budget exhausted", err));
        }
    }
    Ok(y)
}

/// Flow tolerance used throughout.
pub const FLOW_TOL: f64 = 1e-12;

/// `θ_{s,t}(x)`: solution at time `t` of `θ̇ = b_ε(θ)` started from `x` at time `s`.
pub fn flow(drift: &MollifiedDrift, s: f64, t: f64, x: f64) -> Result<f64> {
    if !(s >= 0.0 && t >= 0.0) {
        return Err(Error::domain("flow", "times must be nonnegative"));
    }
    if let Some((a, c)) = drift.drift().affine() {
        // Linear ODE in closed form.
        let w = t - s;
        return Ok(if a == 0.0 {
            x + c * w
        } else {
            (x + c / a) * (a * w).exp() - c / a
        });
    }
    Ok(integrate_ode(|y: &[f64; 1]| [drift.eval(y[0])], [x], s, t, FLOW_TOL)?[0])
}

/// `|θ_{t,s}(θ_{s,t}(x)) - x|`.
pub fn flow_inverse_check(drift: &MollifiedDrift, s: f64, t: f64, x: f64) -> Result<f64> {
    let there = flow(drift, s, t, x)?;
    Ok((flow(drift, t, s, there)? - x).abs())
}

/// Outcome of [`comparability_ratio`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Comparability {
    Ratios(f64, f64),
    /// A denominator vanished.
    Excluded,
}

/// `(|θ_{s,t}(x)-y| / |x-θ_{t,s}(y)|, |θ_{s,t}(x)-θ_{s,t}(y)| / |x-y|)`.
pub fn comparability_ratio(
    drift: &MollifiedDrift,
    s: f64,
    t: f64,
    x: f64,
    y: f64,
) -> Result<Comparability> {
    let fwd_x = flow(drift, s, t, x)?;
    let back_y = flow(drift, t, s, y)?;
    let fwd_y = flow(drift, s, t, y)?;
    let d1 = (x - back_y).abs();
    let d2 = (x - y).abs();
    if d1 == 0.0 || d2 == 0.0 {
        return Ok(Comparability::Excluded);
    }
    Ok(Comparability::Ratios((fwd_x - y).abs() / d1, (fwd_x - fwd_y).abs() / d2))
}
