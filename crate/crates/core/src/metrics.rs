//! Distances between laws on the line, invariant-measure estimation and
//! rate fits.
//!
//! `‖μ₁ - μ₂‖_var` is the supremum of `|μ₁(h) - μ₂(h)|` over `|h| ≤ 1`, which
//! for densities is `∫|f - g|` (twice the usual total variation).

use serde::{Deserialize, Serialize};

use crate::drift_flow::DriftSpec;
use crate::error::{Error, Result};
use crate::grid::{GridDensity, UniformGrid};
use crate::sampling::{self, PathConfig, RngStream};
use crate::stable_density::{density_1d, StableKernelSpec};

/// Least-squares fit of `log D` against `log(2 - α)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `(log(2-α), log D)` pairs used in the fit.
    pub points: Vec<(f64, f64)>,
    /// α values dropped because their distance was not positive.
    pub excluded: Vec<f64>,
}

impl RateFit {
    /// Fits the positive entries; fails with fewer than `min_points` of them.
    pub fn from_alphas(alphas: &[f64], values: &[f64], min_points: usize) -> Result<Self> {
        if alphas.len() != values.len() {
            return Err(Error::Config("rate fit: alphas and values differ in length".into()));
        }
        let mut points = Vec::new();
        let mut excluded = Vec::new();
        for (&a, &v) in alphas.iter().zip(values) {
            if v > 0.0 && v.is_finite() && a < 2.0 {
                points.push(((2.0 - a).ln(), v.ln()));
            } else {
                excluded.push(a);
            }
        }
        if points.len() < min_points.max(2) {
            return Err(Error::Config(format!(
                "rate fit needs at least {} usable points, got {}",
                min_points.max(2),
                points.len()
            )));
        }
        let n = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
        let my = points.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
        if sxx == 0.0 {
            return Err(Error::Config("rate fit: alpha values coincide".into()));
        }
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let r_squared = if syy == 0.0 {
            1.0
        } else {
            (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
        };
        Ok(Self {
            slope,
            intercept,
            r_squared,
            points,
            excluded,
        })
    }
}

/// Lower end of the α range for invariant-measure rates.
pub const ALPHA_FLOOR: f64 = 12.0 / 7.0;

/// Rate fit for strictly increasing α in `(12/7, 2)`; needs ≥ 4 usable points.
pub fn rate_fit(alphas: &[f64], distances: &[f64]) -> Result<RateFit> {
    if alphas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("rate_fit: alphas must be strictly increasing".into()));
    }
    if let Some(a) = alphas.iter().find(|a| !(**a > ALPHA_FLOOR && **a < 2.0)) {
        return Err(Error::Config(format!("rate_fit: alpha {a} outside (12/7, 2)")));
    }
    RateFit::from_alphas(alphas, distances, 4)
}

fn weighted_l1(f: &GridDensity, g: &GridDensity, weight: impl Fn(f64) -> f64, op: &str) -> Result<f64> {
    f.grid.require_same(&g.grid, op)?;
    let diff: Vec<f64> = f
        .values
        .iter()
        .zip(&g.values)
        .enumerate()
        .map(|(i, (a, b))| weight(f.grid.point(i)) * (a - b).abs())
        .collect();
    Ok(f.grid.trapezoid(&diff))
}

/// `∫|f - g|` on a common grid.
pub fn var_distance(f: &GridDensity, g: &GridDensity) -> Result<f64> {
    weighted_l1(f, g, |_| 1.0, "var_distance")
}

/// `∫(1 + |x|^p)|f - g|` on a common grid.
pub fn weighted_var_distance(f: &GridDensity, g: &GridDensity, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 2.0) {
        return Err(Error::domain("weighted_var_distance", format!("p must lie in (0,2), got {p}")));
    }
    weighted_l1(f, g, |x| 1.0 + x.abs().powf(p), "weighted_var_distance")
}

/// A finitely supported probability measure on the line.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    pub atoms: Vec<f64>,
    pub weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Normalizes the weights to unit mass.
    pub fn new(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::Config("discrete measure needs matching, nonempty atoms and weights".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) || atoms.iter().any(|a| !a.is_finite()) {
            return Err(Error::domain("DiscreteMeasure", "atoms finite and weights nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::domain("DiscreteMeasure", "total weight must be positive"));
        }
        Ok(Self {
            atoms,
            weights: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    /// Empirical measure with equal weights.
    pub fn empirical(samples: &[f64]) -> Result<Self> {
        Self::new(samples.to_vec(), vec![1.0; samples.len()])
    }

    /// Atoms at the grid nodes with trapezoid weights, normalized.
    pub fn from_grid(f: &GridDensity) -> Result<Self> {
        let h = f.grid.step();
        let n = f.grid.n;
        let weights = f
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| if i == 0 || i + 1 == n { 0.5 * h * v } else { h * v })
            .collect();
        Self::new(f.grid.points(), weights)
    }

    fn sorted(&self) -> Vec<(f64, f64)> {
        let mut v: Vec<(f64, f64)> = self.atoms.iter().copied().zip(self.weights.iter().copied()).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    }
}

/// How a transport cost was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransportMethod {
    /// Monotone (quantile) coupling; optimal for convex costs.
    Quantile,
    /// Exact discrete optimal transport.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportCost {
    pub value: f64,
    pub method: TransportMethod,
    /// Cost of the quantile coupling; an upper bound when `p < 1`.
    pub quantile_upper_bound: f64,
}

/// Largest support size accepted by the exact solver.
pub const MAX_EXACT_ATOMS: usize = 512;

fn quantile_coupling_cost(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> f64 {
    let a = mu.sorted();
    let b = nu.sorted();
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (a[0].1, b[0].1);
    let mut cost = 0.0;
    while i < a.len() && j < b.len() {
        let m = ra.min(rb);
        cost += m * (a[i].0 - b[j].0).abs().powf(p);
        ra -= m;
        rb -= m;
        if ra <= rb {
            i += 1;
            if i < a.len() {
                ra = a[i].1;
            }
        } else {
            j += 1;
            if j < b.len() {
                rb = b[j].1;
            }
        }
    }
    cost
}

/// `T_p(μ, ν) = inf E|X - Y|^p` over couplings.
pub fn transport_cost(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<TransportCost> {
    if !(p > 0.0 && p < 2.0) {
        return Err(Error::domain("transport_cost", format!("p must lie in (0,2), got {p}")));
    }
    let quantile = quantile_coupling_cost(mu, nu, p);
    if p >= 1.0 {
        return Ok(TransportCost {
            value: quantile,
            method: TransportMethod::Quantile,
            quantile_upper_bound: quantile,
        });
    }
    if mu.atoms.len() > MAX_EXACT_ATOMS || nu.atoms.len() > MAX_EXACT_ATOMS {
        return Err(Error::Config(format!(
            "transport_cost: exact solve for p < 1 accepts at most {MAX_EXACT_ATOMS} atoms per measure; resample"
        )));
    }
    let value = min_cost_flow(&mu.atoms, &mu.weights, &nu.atoms, &nu.weights, p);
    Ok(TransportCost {
        value: value.min(quantile),
        method: TransportMethod::Exact,
        quantile_upper_bound: quantile,
    })
}

/// Successive shortest paths with Dijkstra on reduced costs for the dense
/// transportation problem with cost `|x_i - y_j|^p`.
fn min_cost_flow(xs: &[f64], a: &[f64], ys: &[f64], b: &[f64], p: f64) -> f64 {
    let (n, m) = (xs.len(), ys.len());
    let cost: Vec<f64> = xs
        .iter()
        .flat_map(|x| ys.iter().map(move |y| (x - y).abs().powf(p)))
        .collect();
    let mut flow = vec![0.0; n * m];
    let mut supply = a.to_vec();
    let mut demand = b.to_vec();
    // Potentials: sources 0..n, sinks n..n+m.
    let mut pot = vec![0.0; n + m];
    let eps = 1e-15;
    let mut dist = vec![0.0; n + m];
    let mut prev = vec![usize::MAX; n + m];
    let mut done = vec![false; n + m];
    loop {
        let remaining: f64 = supply.iter().sum();
        if remaining <= 1e-13 {
            break;
        }
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        prev.iter_mut().for_each(|q| *q = usize::MAX);
        done.iter_mut().for_each(|d| *d = false);
        for i in 0..n {
            if supply[i] > eps {
                dist[i] = 0.0;
            }
        }
        // Dense Dijkstra over n + m nodes.
        loop {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for (k, d) in dist.iter().enumerate() {
                if !done[k] && *d < best {
                    best = *d;
                    u = k;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            if u < n {
                for j in 0..m {
                    let v = n + j;
                    if done[v] {
                        continue;
                    }
                    let rc = (cost[u * m + j] + pot[u] - pot[v]).max(0.0);
                    if best + rc < dist[v] {
                        dist[v] = best + rc;
                        prev[v] = u;
                    }
                }
            } else {
                let j = u - n;
                for i in 0..n {
                    if done[i] || flow[i * m + j] <= eps {
                        continue;
                    }
                    let rc = (-cost[i * m + j] + pot[u] - pot[i]).max(0.0);
                    if best + rc < dist[i] {
                        dist[i] = best + rc;
                        prev[i] = u;
                    }
                }
            }
        }
        let target = (0..m)
            .filter(|j| demand[*j] > eps && dist[n + j].is_finite())
            .min_by(|x, y| dist[n + x].total_cmp(&dist[n + y]));
        let Some(jt) = target else { break };
        let far = dist[n + jt];
        for k in 0..n + m {
            pot[k] += dist[k].min(far);
        }
        // Trace back to a source and find the bottleneck.
        let mut bottleneck = demand[jt];
        let mut v = n + jt;
        while prev[v] != usize::MAX {
            let u = prev[v];
            if u >= n {
                // Sink u -> source v runs backward along flow[v][u-n].
                bottleneck = bottleneck.min(flow[v * m + (u - n)]);
            }
            v = u;
        }
        bottleneck = bottleneck.min(supply[v]);
        let source = v;
        let mut v = n + jt;
        while prev[v] != usize::MAX {
            let u = prev[v];
            if u < n {
                flow[u * m + (v - n)] += bottleneck;
            } else {
                flow[v * m + (u - n)] -= bottleneck;
            }
            v = u;
        }
        supply[source] -= bottleneck;
        demand[jt] -= bottleneck;
    }
    flow.iter().zip(&cost).map(|(f, c)| f * c).sum()
}

/// Density of the invariant law `α^{-1/α}L₁` of `dX = -X dt + dL^(α)`.
pub fn ou_exact_stationary(alpha: f64, grid: &UniformGrid) -> Result<GridDensity> {
    let spec = StableKernelSpec::new(1, alpha)?;
    let s = alpha.powf(1.0 / alpha);
    let mut values = vec![0.0; grid.n];
    // Symmetric grids reuse the mirrored half.
    let symmetric = (grid.lo + grid.hi).abs() <= 1e-12 * grid.hi.abs();
    for i in 0..grid.n {
        let j = grid.n - 1 - i;
        if symmetric && j < i {
            values[i] = values[j];
            continue;
        }
        values[i] = s * density_1d(&spec, 1.0, s * grid.point(i))?;
    }
    let mass = grid.trapezoid(&values).min(1.0);
    Ok(GridDensity {
        grid: *grid,
        values,
        captured_mass: mass,
        mass_deficit: mass < crate::grid::MASS_DEFICIT_THRESHOLD,
    })
}

/// `|e^{-1/α} - e^{-1/2}|`, a lower bound for the variation distance between
/// the OU invariant laws at α and 2 (test function `cos`).
pub fn ou_char_lower_bound(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::domain("ou_char_lower_bound", "alpha must lie in (0,2]"));
    }
    Ok(((-1.0 / alpha).exp() - (-0.5f64).exp()).abs())
}

/// `∫_R^∞ cos(x) x^{-ν} dx` by its asymptotic expansion in `1/R` (large `R`).
fn cos_power_tail(nu: f64, r: f64) -> f64 {
    let (sin_r, cos_r) = r.sin_cos();
    let pattern = [-sin_r, cos_r, sin_r, -cos_r];
    let mut coef = r.powf(-nu);
    let mut sum = 0.0;
    for j in 0..24 {
        let term = pattern[j % 4] * coef;
        sum += term;
        let next = coef * (nu + j as f64) / r;
        if next.abs() < 1e-20 * sum.abs().max(1e-300) || next > coef {
            break;
        }
        coef = next;
    }
    sum
}

/// `∫ cos(x) μ^(α)(dx)` for the OU invariant law: trapezoid rule on a
/// symmetric grid plus the power tails beyond it. Equals `e^{-1/α}` exactly.
pub fn ou_stationary_cos_moment(alpha: f64, grid: &UniformGrid) -> Result<f64> {
    if (grid.lo + grid.hi).abs() > 1e-12 * grid.hi.abs() {
        return Err(Error::Config("ou_stationary_cos_moment needs a symmetric grid".into()));
    }
    let f = ou_exact_stationary(alpha, grid)?;
    let w: Vec<f64> = f
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| grid.point(i).cos() * v)
        .collect();
    let body = grid.trapezoid(&w);
    if alpha >= 2.0 {
        return Ok(body);
    }
    // μ^(α) has density α^{1/α} p(1, α^{1/α} x), so its tail terms are c_k α^{-k} x^{-(kα+1)}.
    let mut tail = 0.0;
    for (k, (c, nu)) in crate::stable_density::tail_expansion(alpha, 3)?.into_iter().enumerate() {
        tail += c * alpha.powi(-(k as i32 + 1)) * cos_power_tail(nu, grid.hi);
    }
    Ok(body + 2.0 * tail)
}

/// Time discretization of [`estimate_invariant`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantScheme {
    pub t_burn: f64,
    pub t_sample: f64,
    /// Euler steps per unit time.
    pub n_steps: usize,
    pub n_chains: usize,
}

impl Default for InvariantScheme {
    fn default() -> Self {
        Self {
            t_burn: 20.0,
            t_sample: 200.0,
            n_steps: 128,
            n_chains: 64,
        }
    }
}

/// Result of [`estimate_invariant`].
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantEstimate {
    pub density: GridDensity,
    /// Pointwise standard error from chain-to-chain spread.
    pub stderr: Vec<f64>,
}

fn run_chain(
    drift: &DriftSpec,
    alpha: f64,
    scheme: &InvariantScheme,
    grid: &UniformGrid,
    seed: u64,
    chain: usize,
) -> Result<(Vec<f64>, usize)> {
    let mut rng = RngStream::new(seed, chain as u64);
    let h = 1.0 / scheme.n_steps as f64;
    let burn = (scheme.t_burn * scheme.n_steps as f64).round() as usize;
    let keep = (scheme.t_sample * scheme.n_steps as f64).round() as usize;
    let warm = PathConfig {
        x0: 0.0,
        horizon: (burn.max(1)) as f64 * h,
        n_steps: burn.max(1),
        alpha,
        drift,
    };
    let x0 = sampling::euler_maruyama(&warm, &mut rng)?;
    let cfg = PathConfig {
        x0,
        horizon: keep as f64 * h,
        n_steps: keep,
        alpha,
        drift,
    };
    let path = sampling::euler_path(&cfg, &mut rng)?;
    let mut bins = vec![0.0; grid.n];
    sampling::linear_bin(&path[1..], grid, &mut bins);
    Ok((bins, keep))
}

/// Time-averaged Euler chains smoothed by a Gaussian kernel.
///
/// Each chain burns in for `t_burn`, then every Euler state over `t_sample`
/// is binned. The bandwidth follows Silverman's rule with one effective
/// sample per unit time per chain.
pub fn estimate_invariant(
    drift: &DriftSpec,
    alpha: f64,
    scheme: &InvariantScheme,
    grid: &UniformGrid,
    seed: u64,
) -> Result<InvariantEstimate> {
    if drift.dissipative.is_none() {
        return Err(Error::Config(format!(
            "estimate_invariant: drift `{}` has no dissipativity certificate",
            drift.name()
        )));
    }
    if scheme.n_chains < 2 || scheme.n_steps == 0 || !(scheme.t_sample > 0.0) || !(scheme.t_burn >= 0.0) {
        return Err(Error::Config("estimate_invariant: need >= 2 chains and positive times".into()));
    }
    let chains: Vec<usize> = (0..scheme.n_chains).collect();
    let run = |c: &usize| run_chain(drift, alpha, scheme, grid, seed, *c);
    #[cfg(feature = "parallel")]
    let results: Vec<Result<(Vec<f64>, usize)>> = {
        use rayon::prelude::*;
        chains.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<(Vec<f64>, usize)>> = chains.iter().map(run).collect();
    let mut per_chain = Vec::with_capacity(results.len());
    for r in results {
        per_chain.push(r?);
    }
    let per_chain_count = per_chain[0].1 as f64;

    // Bandwidth from the pooled binned law (mean and quartiles on the grid).
    let mut pooled = vec![0.0; grid.n];
    for (b, _) in &per_chain {
        for (p, v) in pooled.iter_mut().zip(b) {
            *p += v;
        }
    }
    let inside: f64 = pooled.iter().sum();
    let total = per_chain_count * scheme.n_chains as f64;
    let n_eff = scheme.t_sample * scheme.n_chains as f64;
    let bw = binned_silverman(&pooled, grid, n_eff);

    let chain_densities: Vec<Vec<f64>> = per_chain
        .iter()
        .map(|(b, _)| {
            sampling::smooth_bins(b, grid, bw)
                .into_iter()
                .map(|v| v / per_chain_count)
                .collect()
        })
        .collect();
    let k = scheme.n_chains as f64;
    let mut mean = vec![0.0; grid.n];
    for d in &chain_densities {
        for (m, v) in mean.iter_mut().zip(d) {
            *m += v / k;
        }
    }
    let stderr: Vec<f64> = (0..grid.n)
        .map(|i| {
            let var = chain_densities.iter().map(|d| (d[i] - mean[i]).powi(2)).sum::<f64>() / (k - 1.0);
            (var / k).sqrt()
        })
        .collect();
    let captured = inside / total;
    let density = GridDensity::new(*grid, mean, captured)?;
    Ok(InvariantEstimate { density, stderr })
}

fn binned_silverman(bins: &[f64], grid: &UniformGrid, n_eff: f64) -> f64 {
    let total: f64 = bins.iter().sum();
    let xs = grid.points();
    let mean = bins.iter().zip(&xs).map(|(b, x)| b * x).sum::<f64>() / total;
    let var = bins.iter().zip(&xs).map(|(b, x)| b * (x - mean).powi(2)).sum::<f64>() / total;
    let quantile = |q: f64| {
        let mut acc = 0.0;
        for (b, x) in bins.iter().zip(&xs) {
            acc += b;
            if acc >= q * total {
                return *x;
            }
        }
        grid.hi
    };
    let iqr = quantile(0.75) - quantile(0.25);
    let spread = if iqr > 0.0 { var.sqrt().min(iqr / 1.34) } else { var.sqrt() };
    (0.9 * spread * n_eff.powf(-0.2)).max(grid.step())
}

/// `∫|x|^γ f(x) dx` on the grid.
pub fn grid_moment(f: &GridDensity, gamma: f64) -> f64 {
    let w: Vec<f64> = f
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| f.grid.point(i).abs().powf(gamma) * v)
        .collect();
    f.grid.trapezoid(&w)
}

/// Moments `∫|x|^γ dμ̂^(α)` of estimated invariant laws.
pub fn moment_sweep(
    drift: &DriftSpec,
    gamma: f64,
    alphas: &[f64],
    scheme: &InvariantScheme,
    grid: &UniformGrid,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    if !(gamma > 0.0 && gamma < 2.0) {
        return Err(Error::domain("moment_sweep", "gamma must lie in (0,2)"));
    }
    let floor = (gamma + 2.0) / 2.0;
    let mut out = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        if alpha < floor || alpha > 2.0 {
            return Err(Error::domain(
                "moment_sweep",
                format!("alpha {alpha} below the admissible floor {floor}"),
            ));
        }
        let est = estimate_invariant(drift, alpha, scheme, grid, seed)?;
        out.push((alpha, grid_moment(&est.density, gamma)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_power_law_fit() {
        let alphas = [1.9, 1.95, 1.98, 1.99];
        let d: Vec<f64> = alphas.iter().map(|a| 3.0 * (2.0 - a)).collect();
        let fit = rate_fit(&alphas, &d).unwrap();
        assert_relative_eq!(fit.slope, 1.0, epsilon = 1e-12);
        assert_relative_eq!(fit.intercept, 3f64.ln(), epsilon = 1e-12);
        assert_relative_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn fit_excludes_nonpositive_points() {
        let alphas = [1.8, 1.9, 1.95, 1.98, 1.99];
        let d = [0.2, 0.0, 0.05, 0.02, 0.01];
        let fit = rate_fit(&alphas, &d).unwrap();
        assert_eq!(fit.excluded, vec![1.9]);
        assert!(rate_fit(&alphas[..4], &d[..4]).is_err());
        assert!(rate_fit(&[1.9, 1.8, 1.95, 1.99], &[1.0; 4]).is_err());
        assert!(rate_fit(&[1.5, 1.8, 1.95, 1.99], &[1.0; 4]).is_err());
    }

    #[test]
    fn point_mass_transport() {
        let a = DiscreteMeasure::new(vec![0.0], vec![1.0]).unwrap();
        let b = DiscreteMeasure::new(vec![1.0], vec![1.0]).unwrap();
        assert_relative_eq!(transport_cost(&a, &b, 1.0).unwrap().value, 1.0);
        assert_relative_eq!(transport_cost(&a, &b, 0.5).unwrap().value, 1.0);
        assert_eq!(transport_cost(&a, &a, 0.5).unwrap().value, 0.0);
    }

    #[test]
    fn concave_cost_prefers_staying_put() {
        // μ = ½δ₀ + ½δ₁, ν = ½δ₁ + ½δ₂: the quantile coupling moves both halves
        // by 1; for p < 1 it is cheaper to move one half by 2.
        let mu = DiscreteMeasure::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        let nu = DiscreteMeasure::new(vec![1.0, 2.0], vec![0.5, 0.5]).unwrap();
        let c = transport_cost(&mu, &nu, 0.5).unwrap();
        assert_relative_eq!(c.quantile_upper_bound, 1.0);
        assert_relative_eq!(c.value, 0.5 * 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn lower_bound_values() {
        assert_eq!(ou_char_lower_bound(2.0).unwrap(), 0.0);
        assert!((ou_char_lower_bound(1.9).unwrap() - 0.015_753_145_811_401_75).abs() < 1e-15);
    }

    #[test]
    fn estimate_requires_certificate() {
        let g = UniformGrid::symmetric(5.0, 101).unwrap();
        assert!(estimate_invariant(&DriftSpec::zero(), 1.9, &InvariantScheme::default(), &g, 1).is_err());
    }
}
