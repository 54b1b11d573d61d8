//! Grid construction of the transition density of `dX = b(X) dt + dL^(α)`
//! in one dimension by the parametrix (Duhamel) series
//!
//! ```text
//! p̂_b = p̂₀ + p̂₀ ⊗ q,   q = Σ_n q_n,   q_n = q₀ ⊗ q_{n-1}.
//! ```
//!
//! The drift does not depend on time, so every kernel `k(s,t;x,y)` depends
//! on the lag `t - s` only and is stored as one matrix per lag `u_n = nΔt`.
//! Rows are start points `x_i = -L + ih`; columns are averages over the
//! destination cells `[y_k - h/2, y_k + h/2]`, computed in closed form from
//! the stable CDF so that kernels narrower than a cell are still resolved.
//!
//! The frozen kernel is centred at `m_w(y) = y - ∫₀^w b(φ_r(y)) dr`, where
//! `φ` is the backward regularized flow `φ' = -b₁(φ)`, `φ_0 = y`. That is the
//! mean of the process with the drift frozen along `θ_{t,·}(y)`; it equals
//! `θ_{t,s}(y)` for affine drifts and keeps the Duhamel identity exact with
//! `q₀ = (b(x) - b(θ_{t,s}(y)))·∂_x p(t-s, x - m(y))`.
//!
//! Time integrals of `⊗` use product integration: each factor is written
//! as `u^{η-1}·K̃(u)` with `K̃` linear between lags, and the weights
//! `∫(k+λ)^{η_F-1}(n-k-λ)^{η_G-1}ℓ_a(λ)ℓ_b(λ)dλ` are computed with
//! Gauss–Jacobi rules on the singular end intervals.

use std::io::{Read, Write};
use std::sync::Arc;

use ndarray::{linalg::general_mat_mul, Array2};
use serde::{Deserialize, Serialize};

use crate::drift_flow::{self, integrate_ode, DriftSpec, MollifiedDrift, MollifierSpec, FLOW_TOL};
use crate::error::{Error, Result};
use crate::kernel_math::BoundProfile;
use crate::metrics::RateFit;
use crate::profile::StableProfile;
use crate::quad;

/// Space-time discretization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeGrid {
    /// Half width `L` of the spatial domain `[-L, L]`.
    pub half_width: f64,
    pub n_x: usize,
    pub horizon: f64,
    /// Number of time nodes `0, Δt, ..., T`.
    pub n_t: usize,
    /// Sub-cells per destination cell for the flow linearization.
    pub subcells: usize,
    /// Nodes of the time product-integration rules.
    pub time_nodes: usize,
}

/// Default number of spatial nodes.
pub const DEFAULT_NX: usize = 513;
/// Default number of time nodes.
pub const DEFAULT_NT: usize = 65;

impl SpaceTimeGrid {
    pub fn new(half_width: f64, n_x: usize, horizon: f64, n_t: usize) -> Result<Self> {
        if !(half_width > 0.0) || n_x < 5 || !(horizon > 0.0) || n_t < 2 {
            return Err(Error::Config(format!(
                "space-time grid needs L > 0, n_x >= 5, T > 0, n_t >= 2; got L={half_width}, n_x={n_x}, T={horizon}, n_t={n_t}"
            )));
        }
        Ok(Self {
            half_width,
            n_x,
            horizon,
            n_t,
            subcells: 4,
            time_nodes: 12,
        })
    }

    /// Grid with `L = 10·max(T^{1/α}, 1)` for the smallest α given.
    pub fn for_alphas(alphas: &[f64], horizon: f64, n_x: usize, n_t: usize) -> Result<Self> {
        let a = alphas.iter().copied().fold(2.0, f64::min);
        Self::new(min_half_width(a, horizon), n_x, horizon, n_t)
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_width / (self.n_x - 1) as f64
    }

    pub fn dt(&self) -> f64 {
        self.horizon / (self.n_t - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.h()
    }

    pub fn lag(&self, n: usize) -> f64 {
        n as f64 * self.dt()
    }

    fn n_sub(&self) -> usize {
        self.subcells * self.n_x + 1
    }

    /// Sub-node `j` of the destination cells, `j = k·S + s`.
    fn sub_node(&self, j: usize) -> f64 {
        -self.half_width - 0.5 * self.h() + j as f64 * self.h() / self.subcells as f64
    }

    /// Indices of rows with `|x_i| ≤ fraction·L`.
    pub fn probe_rows(&self, fraction: f64) -> Vec<usize> {
        (0..self.n_x)
            .filter(|&i| self.x(i).abs() <= fraction * self.half_width + 1e-12)
            .collect()
    }
}

/// `10·max(T^{1/α}, 1)`.
pub fn min_half_width(alpha: f64, horizon: f64) -> f64 {
    10.0 * horizon.powf(1.0 / alpha).max(1.0)
}

/// What a tabulated kernel represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelLabel {
    Frozen,
    Q0,
    Qn(u32),
    Q,
    HeatKernel,
    Difference,
    Exact,
    Custom,
}

impl KernelLabel {
    fn code(&self) -> u32 {
        match self {
            KernelLabel::Frozen => 1,
            KernelLabel::Q0 => 2,
            KernelLabel::Qn(n) => 100 + n,
            KernelLabel::Q => 3,
            KernelLabel::HeatKernel => 4,
            KernelLabel::Difference => 5,
            KernelLabel::Exact => 6,
            KernelLabel::Custom => 0,
        }
    }

    fn from_code(c: u32) -> Self {
        match c {
            1 => KernelLabel::Frozen,
            2 => KernelLabel::Q0,
            3 => KernelLabel::Q,
            4 => KernelLabel::HeatKernel,
            5 => KernelLabel::Difference,
            6 => KernelLabel::Exact,
            c if c >= 100 => KernelLabel::Qn(c - 100),
            _ => KernelLabel::Custom,
        }
    }

    fn is_density(&self) -> bool {
        matches!(self, KernelLabel::Frozen | KernelLabel::HeatKernel | KernelLabel::Exact)
    }
}

/// A time-homogeneous kernel tabulated on a [`SpaceTimeGrid`].
#[derive(Debug, Clone)]
pub struct SpaceTimeKernel {
    pub grid: SpaceTimeGrid,
    pub label: KernelLabel,
    /// Singular exponent: the kernel behaves like `u^{η-1}` in the lag.
    pub eta: f64,
    /// Whether the kernel tends to the identity as the lag vanishes.
    pub identity_like: bool,
    /// `lags[n-1]` holds the matrix at lag `u_n`, `n = 1..n_t-1`.
    pub lags: Vec<Array2<f64>>,
    /// Largest per-row mass removed by clipping negative entries.
    pub clipped_mass: f64,
    /// Smallest captured mass over the probe region (density kernels only).
    pub captured_mass: f64,
    pub truncated: bool,
}

/// Magnitude below which kernel entries are stored as zero.
pub const FLUSH_BELOW: f64 = 1e-150;

/// Captured mass below which a kernel is flagged as truncated.
pub const TRUNCATION_THRESHOLD: f64 = 0.995;

impl SpaceTimeKernel {
    pub fn from_lags(
        grid: SpaceTimeGrid,
        label: KernelLabel,
        eta: f64,
        identity_like: bool,
        lags: Vec<Array2<f64>>,
    ) -> Result<Self> {
        if lags.len() != grid.n_t - 1 || lags.iter().any(|m| m.dim() != (grid.n_x, grid.n_x)) {
            return Err(Error::Config("kernel shape does not match its grid".into()));
        }
        Ok(Self {
            grid,
            label,
            eta,
            identity_like,
            lags,
            clipped_mass: 0.0,
            captured_mass: 1.0,
            truncated: false,
        })
    }

    /// Matrix at lag `u_n`, `n ≥ 1`.
    pub fn at(&self, n: usize) -> &Array2<f64> {
        &self.lags[n - 1]
    }

    /// Row mass `∫ k(0,u_n; x_i, y) dy`.
    pub fn row_mass(&self, n: usize, i: usize) -> f64 {
        self.grid.h() * self.at(n).row(i).sum()
    }

    /// Column mass `∫ k(0,u_n; x, y_k) dx` by the trapezoid rule.
    pub fn column_mass(&self, n: usize, k: usize) -> f64 {
        let col = self.at(n).column(k);
        let last = col.len() - 1;
        self.grid.h() * (col.sum() - 0.5 * (col[0] + col[last]))
    }

    fn zeros_like(&self, label: KernelLabel, eta: f64) -> Self {
        let n = self.grid.n_x;
        Self {
            grid: self.grid,
            label,
            eta,
            identity_like: false,
            lags: vec![Array2::zeros((n, n)); self.grid.n_t - 1],
            clipped_mass: 0.0,
            captured_mass: 1.0,
            truncated: false,
        }
    }

    /// `max |k|` over all lags and entries.
    pub fn sup_abs(&self) -> f64 {
        self.lags
            .iter()
            .flat_map(|m| m.iter())
            .fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// Zeroes entries below [`FLUSH_BELOW`] so that products in `⊗` never
    /// reach subnormal range, where matrix products slow down severalfold.
    fn flush_tiny(&mut self) {
        for m in &mut self.lags {
            m.mapv_inplace(|v| if v.abs() < FLUSH_BELOW { 0.0 } else { v });
        }
    }

    fn check_finite(&self) -> Result<()> {
        if self.lags.iter().any(|m| m.iter().any(|v| !v.is_finite())) {
            return Err(Error::numeric("parametrix", "non-finite kernel entry", f64::NAN));
        }
        Ok(())
    }

    /// Marks the kernel as truncated when the probe-region mass is short.
    fn account_mass(&mut self, by_rows: bool) {
        let rows = self.grid.probe_rows(0.5);
        let mut min_mass = f64::INFINITY;
        for n in 1..self.grid.n_t {
            for &i in &rows {
                let m = if by_rows { self.row_mass(n, i) } else { self.column_mass(n, i) };
                min_mass = min_mass.min(m);
            }
        }
        self.captured_mass = min_mass;
        self.truncated = min_mass < TRUNCATION_THRESHOLD;
    }
}

/// Frozen means `m_w(y)` and drift values
/// `b(φ_w(y))` at the destination sub-nodes, and forward flows of the start
/// nodes, for every lag.
#[derive(Debug, Clone)]
struct FlowTable {
    mean: Vec<Vec<f64>>,
    drift_at_phi: Vec<Vec<f64>>,
    forward: Vec<Vec<f64>>,
}

impl FlowTable {
    fn new(drift: &MollifiedDrift, grid: &SpaceTimeGrid) -> Result<Self> {
        let b = *drift.drift();
        let n_sub = grid.n_sub();
        let mut mean = vec![vec![0.0; n_sub]; grid.n_t];
        let mut drift_at_phi = vec![vec![0.0; n_sub]; grid.n_t];
        let mut forward = vec![vec![0.0; grid.n_x]; grid.n_t];
        for j in 0..n_sub {
            let y = grid.sub_node(j);
            let mut state = [y, y];
            for n in 0..grid.n_t {
                if n > 0 {
                    state = match b.affine() {
                        Some(_) => {
                            let back = drift_flow::flow(drift, grid.lag(n), 0.0, y)?;
                            [back, back]
                        }
                        None => integrate_ode(
                            |s: &[f64; 2]| [-drift.eval(s[0]), -b.eval(s[0])],
                            state,
                            grid.lag(n - 1),
                            grid.lag(n),
                            FLOW_TOL,
                        )?,
                    };
                }
                mean[n][j] = state[1];
                drift_at_phi[n][j] = b.eval(state[0]);
            }
        }
        for i in 0..grid.n_x {
            let x = grid.x(i);
            let mut cur = x;
            for n in 0..grid.n_t {
                if n > 0 {
                    cur = drift_flow::flow(drift, grid.lag(n - 1), grid.lag(n), cur)?;
                }
                forward[n][i] = cur;
            }
        }
        Ok(Self {
            mean,
            drift_at_phi,
            forward,
        })
    }
}

/// `G(a) - G(b)` from survival values `qa = Q(|a|)`, `qb = Q(|b|)`.
fn cdf_diff_from_survival(a: f64, qa: f64, b: f64, qb: f64) -> f64 {
    match (a >= 0.0, b >= 0.0) {
        (true, true) => qb - qa,
        (false, false) => qa - qb,
        (true, false) => (1.0 - qa) - qb,
        (false, true) => qa - (1.0 - qb),
    }
}

/// Everything needed to build kernels for one α and one drift.
#[derive(Debug, Clone)]
pub struct Parametrix {
    pub alpha: f64,
    pub drift: DriftSpec,
    pub grid: SpaceTimeGrid,
    profile: Arc<StableProfile>,
    mollified: MollifiedDrift,
    flows: Arc<FlowTable>,
}

// Three-point Gauss–Legendre on [0, 1].
const GL3_X: [f64; 3] = [0.112_701_665_379_258_3, 0.5, 0.887_298_334_620_741_7];
const GL3_W: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
// Cells narrower than this (in units of the kernel width) use Gauss–Legendre
// instead of the CDF closed forms, which cancel for narrow cells.
const NARROW_CELL: f64 = 0.05;

impl Parametrix {
    pub fn new(alpha: f64, drift: &DriftSpec, grid: &SpaceTimeGrid) -> Result<Self> {
        let profile = Arc::new(StableProfile::new(alpha)?);
        Self::with_profile(profile, drift, grid)
    }

    /// Reuses a profile table (they take a few seconds to build).
    pub fn with_profile(profile: Arc<StableProfile>, drift: &DriftSpec, grid: &SpaceTimeGrid) -> Result<Self> {
        let alpha = profile.alpha();
        if !(alpha > 1.0 && alpha <= 2.0) {
            return Err(Error::domain("parametrix", format!("alpha must lie in (1,2], got {alpha}")));
        }
        let need = min_half_width(alpha, grid.horizon);
        if grid.half_width < need - 1e-12 {
            return Err(Error::Config(format!(
                "spatial half width {} below 10·max(T^(1/alpha), 1) = {need}",
                grid.half_width
            )));
        }
        let mollified = MollifiedDrift::new(drift, &MollifierSpec::default())?;
        let flows = Arc::new(FlowTable::new(&mollified, grid)?);
        Ok(Self {
            alpha,
            drift: *drift,
            grid: *grid,
            profile,
            mollified,
            flows,
        })
    }

    /// Shares the flow tabulation of `other` (same drift and grid) with a
    /// different α, so that flow interpolation errors cancel in differences.
    pub fn with_alpha(&self, profile: Arc<StableProfile>) -> Result<Self> {
        let alpha = profile.alpha();
        if !(alpha > 1.0 && alpha <= 2.0) {
            return Err(Error::domain("parametrix", format!("alpha must lie in (1,2], got {alpha}")));
        }
        Ok(Self {
            alpha,
            drift: self.drift,
            grid: self.grid,
            profile,
            mollified: self.mollified.clone(),
            flows: Arc::clone(&self.flows),
        })
    }

    pub fn profile(&self) -> &StableProfile {
        &self.profile
    }

    pub fn mollified(&self) -> &MollifiedDrift {
        &self.mollified
    }

    /// `η₀ = (α + β - 1)/α`.
    pub fn eta0(&self) -> f64 {
        (self.alpha + self.drift.beta - 1.0) / self.alpha
    }

    /// Forward flow `θ_{0,u_n}(x_i)`.
    pub fn forward_flow(&self, n: usize, i: usize) -> f64 {
        self.flows.forward[n][i]
    }

    fn tabulate<F>(&self, label: KernelLabel, eta: f64, identity_like: bool, cell: F) -> Result<SpaceTimeKernel>
    where
        F: Fn(usize, usize, &mut [f64]) + Sync,
    {
        let g = self.grid;
        let n_x = g.n_x;
        let mut lags = Vec::with_capacity(g.n_t - 1);
        for n in 1..g.n_t {
            let mut m = Array2::<f64>::zeros((n_x, n_x));
            let fill = |(i, mut row): (usize, ndarray::ArrayViewMut1<f64>)| {
                let slice = row.as_slice_mut().expect("rows are contiguous");
                cell(n, i, slice);
            };
            #[cfg(feature = "parallel")]
            {
                use ndarray::parallel::prelude::*;
                let _ = &fill;
                m.axis_iter_mut(ndarray::Axis(0))
                    .into_par_iter()
                    .enumerate()
                    .for_each(|(i, row)| fill((i, row)));
            }
            #[cfg(not(feature = "parallel"))]
            m.axis_iter_mut(ndarray::Axis(0)).enumerate().for_each(fill);
            lags.push(m);
        }
        let mut k = SpaceTimeKernel::from_lags(g, label, eta, identity_like, lags)?;
        k.check_finite()?;
        k.flush_tiny();
        Ok(k)
    }

    /// `p̂₀(0,u;x,y) = p(u, x - m_u(y))`, averaged over destination cells.
    pub fn frozen_kernel(&self) -> Result<SpaceTimeKernel> {
        let g = self.grid;
        let (h, s_count) = (g.h(), g.subcells);
        let hs = h / s_count as f64;
        let alpha = self.alpha;
        let prof = &*self.profile;
        let flows = &*self.flows;
        let mut k = self.tabulate(KernelLabel::Frozen, 1.0, true, |n, i, row| {
            let w = g.lag(n);
            let sc = w.powf(-1.0 / alpha);
            let x = g.x(i);
            let mean = &flows.mean[n];
            let us: Vec<f64> = mean.iter().map(|m| (x - m) * sc).collect();
            let qs: Vec<f64> = us.iter().map(|u| 1.0 - prof.cdf(u.abs())).collect();
            for (kc, out) in row.iter_mut().enumerate() {
                let mut acc = 0.0;
                for s in 0..s_count {
                    let j = kc * s_count + s;
                    let dm = mean[j + 1] - mean[j];
                    if dm * sc > NARROW_CELL {
                        // (h_s/Δm)·∫_{m_j}^{m_{j+1}} p(w, x - m) dm.
                        acc += hs / dm * cdf_diff_from_survival(us[j], qs[j], us[j + 1], qs[j + 1]);
                    } else {
                        for (xq, wq) in GL3_X.iter().zip(GL3_W) {
                            let m = mean[j] + xq * dm;
                            acc += wq * hs * sc * prof.g((x - m) * sc);
                        }
                    }
                }
                *out = acc / h;
            }
        })?;
        k.account_mass(false);
        Ok(k)
    }

    /// `q₀(0,u;x,y) = (b(x) - b(θ_{u,0}(y)))·∂_x p(u, x - m_u(y))`, averaged
    /// over destination cells.
    pub fn q0(&self) -> Result<SpaceTimeKernel> {
        let g = self.grid;
        let (h, s_count) = (g.h(), g.subcells);
        let hs = h / s_count as f64;
        let alpha = self.alpha;
        let prof = &*self.profile;
        let flows = &*self.flows;
        let drift = self.drift;
        if let Some((0.0, _)) = drift.affine() {
            // Constant drift: b(x) - b(·) vanishes.
            let n = g.n_x;
            return SpaceTimeKernel::from_lags(g, KernelLabel::Q0, self.eta0(), false, vec![Array2::zeros((n, n)); g.n_t - 1]);
        }
        self.tabulate(KernelLabel::Q0, self.eta0(), false, |n, i, row| {
            let w = g.lag(n);
            let sc = w.powf(-1.0 / alpha);
            let x = g.x(i);
            let bx = drift.eval(x);
            let mean = &flows.mean[n];
            let bphi = &flows.drift_at_phi[n];
            let us: Vec<f64> = mean.iter().map(|m| (x - m) * sc).collect();
            let qs: Vec<f64> = us.iter().map(|u| 1.0 - prof.cdf(u.abs())).collect();
            let ps: Vec<f64> = us.iter().map(|u| sc * prof.g(*u)).collect();
            for (kc, out) in row.iter_mut().enumerate() {
                let mut acc = 0.0;
                for s in 0..s_count {
                    let j = kc * s_count + s;
                    let dm = mean[j + 1] - mean[j];
                    let f0 = bx - bphi[j];
                    let f1 = -(bphi[j + 1] - bphi[j]) / hs;
                    if dm * sc > NARROW_CELL {
                        let c = dm / hs;
                        let mass = cdf_diff_from_survival(us[j], qs[j], us[j + 1], qs[j + 1]);
                        let i0 = -(ps[j + 1] - ps[j]) / c;
                        let i1 = -(hs / c) * ps[j + 1] + mass / (c * c);
                        acc += f0 * i0 + f1 * i1;
                    } else {
                        for (xq, wq) in GL3_X.iter().zip(GL3_W) {
                            let sv = xq * hs;
                            let m = mean[j] + xq * dm;
                            acc += wq * hs * (f0 + f1 * sv) * sc * sc * prof.dg((x - m) * sc);
                        }
                    }
                }
                *out = acc / h;
            }
        })
    }

    /// `φ^{(η)}_{γ1,γ2}(0, u_n; x_i, y_k)` with the forward flow of `x_i`.
    fn phi_grid(&self, eta: f64, profile: &BoundProfile, n: usize, i: usize, k: usize) -> f64 {
        let u = self.grid.lag(n);
        u.powf(eta - 1.0) * profile.eval_radius_unchecked(u, self.flows.forward[n][i] - self.grid.x(k))
    }

    /// Sum of `q_n` until the φ-weighted norm of a term drops below
    /// `tail_tol` times that of `q₀`, or `n_max` terms.
    pub fn q_series(&self, n_max: usize, tail_tol: f64) -> Result<QSeries> {
        let eta0 = self.eta0();
        if !(eta0 > 0.0) {
            return Err(Error::domain("q_series", "need alpha + beta > 1"));
        }
        let q0 = self.q0()?;
        let mut total = q0.clone();
        total.label = KernelLabel::Q;
        let mut norms = vec![self.weighted_norm(&q0, eta0)?];
        if norms[0] == 0.0 {
            return Ok(QSeries {
                q: total,
                norms,
                converged: true,
            });
        }
        let mut term = q0.clone();
        let mut converged = false;
        for n in 1..=n_max {
            term = tensor_convolve(&q0, &term)?;
            term.label = KernelLabel::Qn(n as u32);
            let nrm = self.weighted_norm(&term, (n as f64 + 1.0) * eta0)?;
            norms.push(nrm);
            for (acc, t) in total.lags.iter_mut().zip(&term.lags) {
                *acc += t;
            }
            if nrm <= tail_tol * norms[0] {
                converged = true;
                break;
            }
            let k = norms.len();
            if k >= 5 && norms[k - 1] > norms[k - 2] && norms[k - 2] > norms[k - 3] {
                return Err(Error::Divergence { norms });
            }
        }
        Ok(QSeries {
            q: total,
            norms,
            converged,
        })
    }

    /// `sup |k| / φ^{(η)}_{α,α}` over the grid.
    pub fn weighted_norm(&self, k: &SpaceTimeKernel, eta: f64) -> Result<f64> {
        let prof = BoundProfile::stable(1, self.alpha)?;
        let mut sup: f64 = 0.0;
        for n in 1..self.grid.n_t {
            let m = k.at(n);
            for ((i, kc), v) in m.indexed_iter() {
                if *v != 0.0 {
                    sup = sup.max(v.abs() / self.phi_grid(eta, &prof, n, i, kc));
                }
            }
        }
        Ok(sup)
    }

    /// `p̂_b = p̂₀ + p̂₀ ⊗ q` with negative entries clipped.
    pub fn heat_kernel(&self, n_max: usize, tail_tol: f64) -> Result<HeatKernel> {
        let frozen = self.frozen_kernel()?;
        let series = self.q_series(n_max, tail_tol)?;
        let mut p = frozen.clone();
        if series.norms[0] > 0.0 {
            let corr = tensor_convolve(&frozen, &series.q)?;
            for (a, c) in p.lags.iter_mut().zip(&corr.lags) {
                *a += c;
            }
        }
        p.label = KernelLabel::HeatKernel;
        p.eta = 1.0;
        clip_negative(&mut p)?;
        p.account_mass(true);
        Ok(HeatKernel {
            kernel: p,
            series_norms: series.norms,
            converged: series.converged,
        })
    }
}

/// Output of [`Parametrix::q_series`].
#[derive(Debug, Clone)]
pub struct QSeries {
    pub q: SpaceTimeKernel,
    /// `sup|q_n| / φ^{((n+1)η₀)}` for each computed term.
    pub norms: Vec<f64>,
    pub converged: bool,
}

/// Output of [`Parametrix::heat_kernel`].
#[derive(Debug, Clone)]
pub struct HeatKernel {
    pub kernel: SpaceTimeKernel,
    pub series_norms: Vec<f64>,
    pub converged: bool,
}

/// Largest clipped mass accepted by [`Parametrix::heat_kernel`].
pub const CLIP_LIMIT: f64 = 1e-3;

fn clip_negative(k: &mut SpaceTimeKernel) -> Result<()> {
    let h = k.grid.h();
    let mut worst: f64 = 0.0;
    for m in &mut k.lags {
        for mut row in m.rows_mut() {
            let mut clipped = 0.0;
            for v in row.iter_mut() {
                if *v < 0.0 {
                    clipped -= *v;
                    *v = 0.0;
                }
            }
            worst = worst.max(clipped * h);
        }
    }
    k.clipped_mass = worst;
    if worst > CLIP_LIMIT {
        return Err(Error::Resolution(format!(
            "negative mass {worst:.3e} clipped from the heat kernel exceeds {CLIP_LIMIT:.0e}"
        )));
    }
    Ok(())
}

/// Product-integration weights `c^{ab}(k, n)` for singular exponents
/// `(η_F, η_G)`, indexed `[n][k][2a+b]`.
fn product_weights(grid: &SpaceTimeGrid, eta_f: f64, eta_g: f64) -> Result<Vec<Vec<[f64; 4]>>> {
    let nq = grid.time_nodes;
    let dt = grid.dt();
    let scale = dt.powf(eta_f + eta_g - 1.0);
    let (gl_x, gl_w) = quad::gauss_legendre(nq);
    let gl: Vec<(f64, f64)> = gl_x.iter().zip(&gl_w).map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect();
    let rule = |p: f64, q: f64| -> Result<Vec<(f64, f64)>> {
        if p == 0.0 && q == 0.0 {
            return Ok(gl.clone());
        }
        let (x, w) = quad::gauss_jacobi_unit(nq, p, q)?;
        Ok(x.into_iter().zip(w).collect())
    };
    let (pf, pg) = (eta_f - 1.0, eta_g - 1.0);
    let first = rule(pf, 0.0)?;
    let last = rule(0.0, pg)?;
    let both = rule(pf, pg)?;
    let mut out = vec![Vec::new(); grid.n_t];
    for (n, slot) in out.iter_mut().enumerate().skip(1) {
        let mut row = Vec::with_capacity(n);
        for k in 0..n {
            let nf = n as f64;
            let kf = k as f64;
            // Factors not absorbed into the Jacobi weight.
            let (nodes, fk, gk): (&[(f64, f64)], bool, bool) = match (k == 0, k + 1 == n) {
                (true, true) => (&both, false, false),
                (true, false) => (&first, false, true),
                (false, true) => (&last, true, false),
                (false, false) => (&gl, true, true),
            };
            let mut c = [0.0; 4];
            for &(lam, wq) in nodes {
                let mut v = wq;
                if fk {
                    v *= (kf + lam).powf(pf);
                }
                if gk {
                    v *= (nf - kf - lam).powf(pg);
                }
                let l = [1.0 - lam, lam];
                for a in 0..2 {
                    for b in 0..2 {
                        c[2 * a + b] += v * l[a] * l[b];
                    }
                }
            }
            row.push(c.map(|v| v * scale));
        }
        *slot = row;
    }
    Ok(out)
}

/// `(F ⊗ G)(0,u;x,y) = ∫₀^u ∫ F(0,r;x,z) G(r,u;z,y) dz dr`.
///
/// The space integral is the cell sum `h·Σ_j F[i,j]G[j,k]`; the time
/// integral uses product integration with the singular exponents stored in
/// the kernels. The result carries exponent `η_F + η_G`.
pub fn tensor_convolve(f: &SpaceTimeKernel, g: &SpaceTimeKernel) -> Result<SpaceTimeKernel> {
    if f.grid != g.grid {
        return Err(Error::Config("tensor_convolve: kernels live on different grids".into()));
    }
    let grid = f.grid;
    let h = grid.h();
    let (eta_f, eta_g) = (f.eta, g.eta);
    let weights = product_weights(&grid, eta_f, eta_g)?;
    let mut out = f.zeros_like(KernelLabel::Custom, eta_f + eta_g);
    // Regularized node value K̃_m = K_m·u_m^{1-η} as (source lag, factor);
    // K̃_0 is I/h for identity-like kernels and K̃_1 otherwise.
    let reg = |eta: f64, m: usize| -> (usize, f64) {
        let m_src = m.max(1);
        (m_src, grid.lag(m_src).powf(1.0 - eta))
    };
    let n_x = grid.n_x;
    let mut mix = Array2::<f64>::zeros((n_x, n_x));
    for n in 1..grid.n_t {
        let w = &weights[n];
        let acc = &mut out.lags[n - 1];
        for m in 0..=n {
            // M_m = Σ_b c^{0b}(m, n) G̃_{n-m-b} + Σ_b c^{1b}(m-1, n) G̃_{n-m+1-b}.
            mix.fill(0.0);
            let mut add = |coef: f64, gi: usize| {
                if coef == 0.0 {
                    return;
                }
                let (src, fac) = reg(eta_g, gi);
                mix.scaled_add(coef * fac, g.at(src));
            };
            if m < n {
                add(w[m][0], n - m);
                add(w[m][1], n - m - 1);
            }
            if m >= 1 {
                add(w[m - 1][2], n - m + 1);
                add(w[m - 1][3], n - m);
            }
            if m == 0 && f.identity_like {
                // (I/h) ⊙ M = M.
                *acc += &mix;
            } else {
                let (src, fac) = reg(eta_f, m);
                general_mat_mul(h * fac, f.at(src), &mix, 1.0, acc);
            }
        }
    }
    out.check_finite()?;
    out.flush_tiny();
    Ok(out)
}

/// `(A ⊙ B)[i,k] = h·Σ_j A[i,j]B[j,k]`.
pub fn compose(a: &Array2<f64>, b: &Array2<f64>, h: f64) -> Array2<f64> {
    let mut out = Array2::zeros((a.nrows(), b.ncols()));
    general_mat_mul(h, a, b, 0.0, &mut out);
    out
}

/// `φ^{(η)}_{γ1,γ2}(s,t;x,y) = (t-s)^{η-1} ϱ_{γ1,γ2}(t-s, θ_{s,t}(x) - y)`.
#[allow(clippy::too_many_arguments)]
pub fn phi(
    eta: f64,
    gamma1: f64,
    gamma2: f64,
    s: f64,
    t: f64,
    x: f64,
    y: f64,
    drift: &MollifiedDrift,
) -> Result<f64> {
    if !(s < t) {
        return Err(Error::domain("phi", format!("need s < t, got s={s}, t={t}")));
    }
    let prof = BoundProfile::new(1, 0.0, gamma1, gamma2)?;
    let moved = drift_flow::flow(drift, s, t, x)?;
    Ok((t - s).powf(eta - 1.0) * prof.eval_radius_unchecked(t - s, moved - y))
}

/// The OU transition density `p(τ_α(u), x e^{-u} - y)`, `τ_α(u) = (1-e^{-αu})/α`,
/// averaged over destination cells.
pub fn ou_exact_kernel(profile: &StableProfile, grid: &SpaceTimeGrid) -> Result<SpaceTimeKernel> {
    let alpha = profile.alpha();
    let h = grid.h();
    let mut lags = Vec::with_capacity(grid.n_t - 1);
    for n in 1..grid.n_t {
        let u = grid.lag(n);
        let tau = (1.0 - (-alpha * u).exp()) / alpha;
        let shrink = (-u).exp();
        let m = Array2::from_shape_fn((grid.n_x, grid.n_x), |(i, k)| {
            let c = grid.x(i) * shrink - grid.x(k);
            profile.mass_between(tau, c - 0.5 * h, c + 0.5 * h) / h
        });
        lags.push(m);
    }
    let mut k = SpaceTimeKernel::from_lags(*grid, KernelLabel::Exact, 1.0, true, lags)?;
    k.account_mass(true);
    Ok(k)
}

/// Largest row-wise L1 distance `h·Σ_k |a - b|` over lags `≥ from_lag` and
/// the given rows.
pub fn kernel_l1(a: &SpaceTimeKernel, b: &SpaceTimeKernel, rows: &[usize], from_lag: usize) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::Config("kernel_l1: kernels live on different grids".into()));
    }
    let h = a.grid.h();
    let mut worst: f64 = 0.0;
    for n in from_lag.max(1)..a.grid.n_t {
        let (ma, mb) = (a.at(n), b.at(n));
        for &i in rows {
            let d: f64 = ma.row(i).iter().zip(mb.row(i)).map(|(x, y)| (x - y).abs()).sum();
            worst = worst.max(h * d);
        }
    }
    Ok(worst)
}

/// Chapman–Kolmogorov defect: `max_i h·Σ_k |(K_{m} ⊙ K_{m})[i,k] - K_{2m}[i,k]|`
/// with `2m = n_t - 1`.
pub fn chapman_kolmogorov_l1(k: &SpaceTimeKernel, rows: &[usize]) -> Result<f64> {
    let last = k.grid.n_t - 1;
    if last % 2 != 0 {
        return Err(Error::Config("Chapman-Kolmogorov check needs an even number of time steps".into()));
    }
    let h = k.grid.h();
    let half = k.at(last / 2);
    let two = compose(half, half, h);
    let full = k.at(last);
    let mut worst: f64 = 0.0;
    for &i in rows {
        let d: f64 = two.row(i).iter().zip(full.row(i)).map(|(x, y)| (x - y).abs()).sum();
        worst = worst.max(h * d);
    }
    Ok(worst)
}

/// Exponents `η₀ = (α+β-1)/α`, `η₁ = (1+β)/2 + 2(α-2)/α`, `η₂ = η₁ + (α-2)/α`.
pub fn exponents(alpha: f64, beta: f64) -> (f64, f64, f64) {
    let eta0 = (alpha + beta - 1.0) / alpha;
    let eta1 = (1.0 + beta) / 2.0 + 2.0 * (alpha - 2.0) / alpha;
    (eta0, eta1, eta1 + (alpha - 2.0) / alpha)
}

/// Exponent `(7α - 12)/(2α)` of the α-continuity envelope.
pub fn continuity_exponent(alpha: f64) -> f64 {
    (7.0 * alpha - 12.0) / (2.0 * alpha)
}

/// Probe region for certification: rows with `|x| ≤ L/2`, lags from `from_lag`.
#[derive(Debug, Clone)]
pub struct Probe {
    pub rows: Vec<usize>,
    pub from_lag: usize,
}

impl Probe {
    pub fn central(grid: &SpaceTimeGrid) -> Self {
        Self {
            rows: grid.probe_rows(0.5),
            from_lag: 1,
        }
    }
}

/// `sup p̂_b / ϱ_α(u, θ_{0,u}(x) - y)` over the probe region.
pub fn uniform_ratio(pm: &Parametrix, kernel: &SpaceTimeKernel, probe: &Probe) -> Result<f64> {
    let prof = BoundProfile::stable(1, pm.alpha)?;
    let mut sup: f64 = 0.0;
    for n in probe.from_lag.max(1)..pm.grid.n_t {
        let m = kernel.at(n);
        for &i in &probe.rows {
            for k in 0..pm.grid.n_x {
                sup = sup.max(m[[i, k]] / pm.phi_grid(1.0, &prof, n, i, k));
            }
        }
    }
    Ok(sup)
}

/// `sup |a - b| / Σ_{γ1,γ2∈{α,2}} φ^{(η)}_{γ1,γ2}` with `η = (7α-12)/(2α)`,
/// `a` built with index α and `b` with index 2 on the same grid and flow.
pub fn continuity_statistic(
    pm: &Parametrix,
    a: &SpaceTimeKernel,
    b: &SpaceTimeKernel,
    probe: &Probe,
) -> Result<f64> {
    let alpha = pm.alpha;
    let eta = continuity_exponent(alpha);
    let mut profiles = Vec::with_capacity(4);
    for g1 in [alpha, 2.0] {
        for g2 in [alpha, 2.0] {
            profiles.push(BoundProfile::new(1, 0.0, g1, g2)?);
        }
    }
    let mut sup: f64 = 0.0;
    for n in probe.from_lag.max(1)..pm.grid.n_t {
        let (ma, mb) = (a.at(n), b.at(n));
        for &i in &probe.rows {
            for k in 0..pm.grid.n_x {
                let env: f64 = profiles.iter().map(|p| pm.phi_grid(eta, p, n, i, k)).sum();
                sup = sup.max((ma[[i, k]] - mb[[i, k]]).abs() / env);
            }
        }
    }
    Ok(sup)
}

/// Closed-form counterpart of [`continuity_statistic`] for `b(x) = -x`,
/// evaluated pointwise on the grid nodes.
pub fn ou_continuity_statistic(alpha: f64, grid: &SpaceTimeGrid, probe: &Probe) -> Result<f64> {
    let pa = StableProfile::new(alpha)?;
    let p2 = StableProfile::new(2.0)?;
    ou_continuity_statistic_with(&pa, &p2, grid, probe)
}

pub fn ou_continuity_statistic_with(
    pa: &StableProfile,
    p2: &StableProfile,
    grid: &SpaceTimeGrid,
    probe: &Probe,
) -> Result<f64> {
    let alpha = pa.alpha();
    let eta = continuity_exponent(alpha);
    let mut profiles = Vec::with_capacity(4);
    for g1 in [alpha, 2.0] {
        for g2 in [alpha, 2.0] {
            profiles.push(BoundProfile::new(1, 0.0, g1, g2)?);
        }
    }
    let mut sup: f64 = 0.0;
    for n in probe.from_lag.max(1)..grid.n_t {
        let u = grid.lag(n);
        let shrink = (-u).exp();
        let ta = (1.0 - (-alpha * u).exp()) / alpha;
        let t2 = (1.0 - (-2.0 * u).exp()) / 2.0;
        for &i in &probe.rows {
            let c = grid.x(i) * shrink;
            for k in 0..grid.n_x {
                let z = c - grid.x(k);
                let diff = pa.density(ta, z) - p2.density(t2, z);
                let env: f64 = profiles
                    .iter()
                    .map(|p| u.powf(eta - 1.0) * p.eval_radius_unchecked(u, z))
                    .sum();
                sup = sup.max(diff.abs() / env);
            }
        }
    }
    Ok(sup)
}

/// Result of [`certify_theorem_1_1`].
#[derive(Debug, Clone)]
pub struct TheoremCertificate {
    /// `(α, sup p̂_b/ϱ_α)` for every α, including 2.
    pub uniform: Vec<(f64, f64)>,
    /// `(α, D(α))` for α < 2.
    pub continuity_points: Vec<(f64, f64)>,
    /// Fit of `log D` against `log(2-α)` (needs ≥ 3 α values below 2).
    pub continuity: Option<RateFit>,
    /// Parametrix series norms per α.
    pub series_norms: Vec<(f64, Vec<f64>)>,
}

/// Builds `p̂_b` for each α and for α = 2 on one grid and flow, then reports
/// the uniform ratios and the α-continuity fit.
pub fn certify_theorem_1_1(
    alphas: &[f64],
    drift: &DriftSpec,
    grid: &SpaceTimeGrid,
    n_max: usize,
    tail_tol: f64,
) -> Result<TheoremCertificate> {
    if alphas.is_empty() {
        return Err(Error::Config("certify_theorem_1_1: no alpha values".into()));
    }
    let rate_alphas: Vec<f64> = alphas.iter().copied().filter(|a| *a < 2.0).collect();
    for &a in &rate_alphas {
        if !(a > 12.0 / 7.0) {
            return Err(Error::Config(format!("certify_theorem_1_1: alpha {a} not in (12/7, 2)")));
        }
        let (e0, e1, e2) = exponents(a, drift.beta);
        if !(1.0 >= e0 && e0 >= e1 && e1 >= e2 && e2 > 0.0) {
            return Err(Error::Config(format!(
                "exponent ordering 1 >= η0 >= η1 >= η2 > 0 fails at alpha {a}: ({e0}, {e1}, {e2})"
            )));
        }
    }
    let base = Parametrix::new(2.0, drift, grid)?;
    let gauss = base.heat_kernel(n_max, tail_tol)?;
    let probe = Probe::central(grid);
    let mut uniform = vec![(2.0, uniform_ratio(&base, &gauss.kernel, &probe)?)];
    let mut series_norms = vec![(2.0, gauss.series_norms.clone())];
    let mut points = Vec::new();
    for &a in &rate_alphas {
        let pm = base.with_alpha(Arc::new(StableProfile::new(a)?))?;
        let hk = pm.heat_kernel(n_max, tail_tol)?;
        uniform.push((a, uniform_ratio(&pm, &hk.kernel, &probe)?));
        points.push((a, continuity_statistic(&pm, &hk.kernel, &gauss.kernel, &probe)?));
        series_norms.push((a, hk.series_norms));
    }
    let continuity = if points.len() >= 3 {
        let (al, d): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
        Some(RateFit::from_alphas(&al, &d, 3)?)
    } else {
        None
    };
    Ok(TheoremCertificate {
        uniform,
        continuity_points: points,
        continuity,
        series_norms,
    })
}

/// `sup |∂_x log p̂_b|·u^{1/α}` over the probe rows, restricted in each row to
/// the cells holding the central 80% of its mass.
pub fn log_gradient_check(kernel: &SpaceTimeKernel, alpha: f64, probe: &Probe) -> Result<f64> {
    let g = kernel.grid;
    let h = g.h();
    let mut sup: f64 = 0.0;
    for n in probe.from_lag.max(1)..g.n_t {
        let m = kernel.at(n);
        let scale = g.lag(n).powf(1.0 / alpha);
        for &i in &probe.rows {
            if i == 0 || i + 1 >= g.n_x {
                continue;
            }
            let row = m.row(i);
            let total: f64 = row.sum();
            let mut acc = 0.0;
            for k in 0..g.n_x {
                let before = acc;
                acc += row[k];
                if acc < 0.1 * total || before > 0.9 * total {
                    continue;
                }
                let (lo, mid, hi) = (m[[i - 1, k]], row[k], m[[i + 1, k]]);
                if !(lo > 0.0 && mid > 0.0 && hi > 0.0) {
                    return Err(Error::Resolution(format!(
                        "kernel not positive on the probe region at lag {n}, row {i}, cell {k}"
                    )));
                }
                let grad = (hi.ln() - lo.ln()) / (2.0 * h);
                sup = sup.max(grad.abs() * scale);
            }
        }
    }
    Ok(sup)
}

const PANEL_MAGIC: &[u8; 8] = b"SKPANEL1";

/// Writes a kernel as a binary panel: magic `SKPANEL1`; `u32` label code;
/// `u32` identity flag; `u64` `n_x`, `n_t`; `f64` `L`, `T`, `η`; then the
/// matrices for lags `1..n_t-1`, row-major. All little-endian.
pub fn write_panel<W: Write>(k: &SpaceTimeKernel, mut w: W) -> std::io::Result<()> {
    w.write_all(PANEL_MAGIC)?;
    w.write_all(&k.label.code().to_le_bytes())?;
    w.write_all(&(k.identity_like as u32).to_le_bytes())?;
    w.write_all(&(k.grid.n_x as u64).to_le_bytes())?;
    w.write_all(&(k.grid.n_t as u64).to_le_bytes())?;
    for v in [k.grid.half_width, k.grid.horizon, k.eta] {
        w.write_all(&v.to_le_bytes())?;
    }
    for m in &k.lags {
        for v in m.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads a panel written by [`write_panel`].
pub fn read_panel<R: Read>(mut r: R) -> Result<SpaceTimeKernel> {
    let io = |e: std::io::Error| Error::Config(format!("panel read failed: {e}"));
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != PANEL_MAGIC {
        return Err(Error::Config("not a kernel panel".into()));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4).map_err(io)?;
    let label = KernelLabel::from_code(u32::from_le_bytes(b4));
    r.read_exact(&mut b4).map_err(io)?;
    let identity_like = u32::from_le_bytes(b4) != 0;
    r.read_exact(&mut b8).map_err(io)?;
    let n_x = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b8).map_err(io)?;
    let n_t = u64::from_le_bytes(b8) as usize;
    let mut f = [0.0; 3];
    for v in &mut f {
        r.read_exact(&mut b8).map_err(io)?;
        *v = f64::from_le_bytes(b8);
    }
    let grid = SpaceTimeGrid::new(f[0], n_x, f[1], n_t)?;
    let mut lags = Vec::with_capacity(n_t - 1);
    for _ in 1..n_t {
        let mut data = vec![0.0; n_x * n_x];
        for v in &mut data {
            r.read_exact(&mut b8).map_err(io)?;
            *v = f64::from_le_bytes(b8);
        }
        lags.push(Array2::from_shape_vec((n_x, n_x), data).expect("shape matches"));
    }
    let mut k = SpaceTimeKernel::from_lags(grid, label, f[2], identity_like, lags)?;
    if label.is_density() {
        k.account_mass(label != KernelLabel::Frozen);
    }
    Ok(k)
}

/// Writes `y,value` for one start node and lag.
pub fn write_slice_csv<W: Write>(k: &SpaceTimeKernel, n: usize, i: usize, mut w: W) -> std::io::Result<()> {
    writeln!(w, "y,value")?;
    for (kc, v) in k.at(n).row(i).iter().enumerate() {
        writeln!(w, "{},{}", k.grid.x(kc), v)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid() -> SpaceTimeGrid {
        SpaceTimeGrid::new(10.0, 65, 0.5, 9).unwrap()
    }

    #[test]
    fn grid_geometry() {
        let g = small_grid();
        assert!((g.h() - 20.0 / 64.0).abs() < 1e-15);
        assert!((g.x(64) - 10.0).abs() < 1e-12);
        assert!((g.sub_node(0) + 10.0 + g.h() / 2.0).abs() < 1e-12);
        assert!(SpaceTimeGrid::new(10.0, 3, 1.0, 9).is_err());
    }

    #[test]
    fn rejects_narrow_domain() {
        let g = SpaceTimeGrid::new(5.0, 65, 0.5, 9).unwrap();
        assert!(Parametrix::new(1.9, &DriftSpec::zero(), &g).is_err());
    }

    #[test]
    fn constant_drift_has_vanishing_q0() {
        let pm = Parametrix::new(2.0, &DriftSpec::constant(0.7), &small_grid()).unwrap();
        let q = pm.q0().unwrap();
        assert_eq!(q.sup_abs(), 0.0);
    }

    #[test]
    fn beta_law_of_time_weights() {
        let g = SpaceTimeGrid::new(10.0, 5, 1.0, 17).unwrap();
        for (a, b) in [(0.6, 0.8), (1.0, 0.5), (0.9, 1.7)] {
            let w = product_weights(&g, a, b).unwrap();
            for n in [1usize, 5, 16] {
                let total: f64 = w[n].iter().map(|c| c.iter().sum::<f64>()).sum();
                let u = g.lag(n);
                let exact = crate::kernel_math::beta_fn(a, b).unwrap() * u.powf(a + b - 1.0);
                assert!((total - exact).abs() < 1e-10 * exact, "{a} {b} {n}: {total} vs {exact}");
            }
        }
    }

    #[test]
    fn panel_round_trip() {
        let g = SpaceTimeGrid::new(10.0, 5, 1.0, 3).unwrap();
        let lags = vec![Array2::from_elem((5, 5), 0.25), Array2::from_elem((5, 5), -1.5)];
        let k = SpaceTimeKernel::from_lags(g, KernelLabel::Qn(3), 0.7, false, lags).unwrap();
        let mut buf = Vec::new();
        write_panel(&k, &mut buf).unwrap();
        let back = read_panel(buf.as_slice()).unwrap();
        assert_eq!(back.label, KernelLabel::Qn(3));
        assert_eq!(back.lags, k.lags);
        assert_eq!(back.eta, 0.7);
        assert!(read_panel(&b"NOTPANEL"[..]).is_err());
    }
}
