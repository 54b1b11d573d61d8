//! One runner per command. Each returns the rows it checked; files other
//! than `results.csv`/`summary.json` (slices, panels) are written here.

use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use rand::Rng;
use stablekern::drift_flow::DriftSpec;
use stablekern::kernel_math::{self, check_3p, frac_laplacian, BoundProfile, Cosine, GaussianBump, TestFunction};
use stablekern::metrics::{self, DiscreteMeasure, InvariantScheme, RateFit};
use stablekern::parametrix::{self, Parametrix, Probe, SpaceTimeGrid, SpaceTimeKernel};
use stablekern::profile::StableProfile;
use stablekern::sampling::{self, RngStream};
use stablekern::stable_density::{self as sd, StableKernelSpec};
use stablekern::{Error, GridDensity, UniformGrid};

use crate::config::{Command, ExperimentConfig};
use crate::report::{params, Check, Report};

type Result<T> = std::result::Result<T, Error>;

fn io_err(e: std::io::Error) -> Error {
    Error::Config(format!("output: {e}"))
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn spread(values: impl IntoIterator<Item = f64>) -> f64 {
    let (lo, hi) = values
        .into_iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    hi / lo
}

fn tag(v: f64) -> String {
    format!("{v}").replace('-', "m")
}

struct Out<'a> {
    cfg: &'a ExperimentConfig,
    dir: &'a Path,
}

impl Out<'_> {
    fn slice(&self, name: &str, write: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
        if !self.cfg.output.slices {
            return Ok(());
        }
        let dir = self.dir.join("slices");
        fs::create_dir_all(&dir).map_err(io_err)?;
        let mut w = BufWriter::new(File::create(dir.join(name)).map_err(io_err)?);
        write(&mut w).map_err(io_err)
    }

    fn xy_slice(&self, name: &str, xs: &[f64], ys: &[f64]) -> Result<()> {
        self.slice(name, |w| {
            use std::io::Write;
            writeln!(w, "x,value")?;
            for (x, y) in xs.iter().zip(ys) {
                writeln!(w, "{x},{y}")?;
            }
            Ok(())
        })
    }

    fn panel(&self, name: &str, k: &SpaceTimeKernel) -> Result<()> {
        if !self.cfg.output.panels {
            return Ok(());
        }
        let dir = self.dir.join("panels");
        fs::create_dir_all(&dir).map_err(io_err)?;
        let w = BufWriter::new(File::create(dir.join(name)).map_err(io_err)?);
        parametrix::write_panel(k, w).map_err(io_err)
    }
}

pub(crate) fn dispatch(cfg: &ExperimentConfig, dir: &Path) -> Result<Report> {
    let out = Out { cfg, dir };
    let mode = cfg.experiment.mode.as_str();
    match (cfg.experiment.command, mode) {
        (Command::DensityEval, "scaling") => density_scaling(&out),
        (Command::DensityEval, _) => density_oracle(&out),
        (Command::CertifyKernelBounds, "inequalities") => inequalities(&out),
        (Command::CertifyKernelBounds, _) => uniform_bounds(&out),
        (Command::RateKernel, "generator") => generator_rate(&out),
        (Command::RateKernel, _) => kernel_rate(&out),
        (Command::ParametrixBuild, _) => parametrix_build(&out),
        (Command::RateSde, _) => sde_rate(&out),
        (Command::RateInvariant, "monte-carlo") => invariant_monte_carlo(&out),
        (Command::RateInvariant, _) => invariant_exact(&out),
        (Command::InvariantMoments, _) => invariant_moments(&out),
    }
}

fn experiment_id(cfg: &ExperimentConfig) -> String {
    format!("{}/{}", cfg.experiment.command, cfg.experiment.mode)
}

fn cauchy(t: f64, x: f64) -> f64 {
    t / (PI * (t * t + x * x))
}

fn gauss(t: f64, x: f64) -> f64 {
    (-x * x / (4.0 * t)).exp() / (4.0 * PI * t).sqrt()
}

/// Densities on an x grid, compared with the Cauchy and Gaussian closed
/// forms where α ∈ {1, 2}.
fn density_oracle(out: &Out) -> Result<Report> {
    let cfg = out.cfg;
    let tol = &cfg.tolerances;
    let mut rep = Report::new(experiment_id(cfg));
    let xs = linspace(-cfg.grid.x_max, cfg.grid.x_max, cfg.grid.n_x);
    for &alpha in &cfg.experiment.alphas {
        let spec = StableKernelSpec::new(1, alpha)?;
        for &t in &cfg.grid.times {
            let vals = xs.iter().map(|&x| sd::density_1d(&spec, t, x)).collect::<Result<Vec<_>>>()?;
            let p = params(&[("alpha", alpha), ("t", t)]);
            let oracle: Option<fn(f64, f64) -> f64> = if alpha == 1.0 {
                Some(cauchy)
            } else if alpha == 2.0 {
                Some(gauss)
            } else {
                None
            };
            if let Some(exact) = oracle {
                let err = xs
                    .iter()
                    .zip(&vals)
                    .map(|(&x, v)| (v - exact(t, x)).abs() / exact(t, x))
                    .fold(0.0, f64::max);
                rep.check(p.clone(), "max_rel_err", err, Check::AtMost(tol.oracle_rel));
            }
            if let Some(exact) = oracle {
                // The Fourier route has an absolute floor; below fourier_abs/oracle_rel the
                // error is measured relative to that floor.
                let floor = tol.fourier_abs / tol.oracle_rel;
                let mut err: f64 = 0.0;
                for &x in &xs {
                    let f = sd::density_fourier_1d(&spec, t, x)?;
                    let g = exact(t, x);
                    err = err.max((f - g).abs() / g.max(floor));
                }
                rep.check(p.clone(), "fourier_route_rel_err", err, Check::AtMost(tol.oracle_rel));
            }
            let grid = UniformGrid::symmetric(cfg.grid.x_max, cfg.grid.n_x)?;
            rep.info(p, "grid_mass", grid.trapezoid(&vals));
            out.xy_slice(&format!("density_a{}_t{}.csv", tag(alpha), tag(t)), &xs, &vals)?;
        }
    }
    Ok(rep)
}

/// `p(t, x) = t^{-1/α} p(1, t^{-1/α} x)` on random triples.
fn density_scaling(out: &Out) -> Result<Report> {
    let cfg = out.cfg;
    let mut rep = Report::new(experiment_id(cfg));
    let mut rng = RngStream::new(cfg.experiment.seed, 0);
    let alphas = &cfg.experiment.alphas;
    let specs = alphas.iter().map(|&a| StableKernelSpec::new(1, a)).collect::<Result<Vec<_>>>()?;
    let (t_lo, t_hi) = (cfg.grid.times.iter().copied().fold(f64::INFINITY, f64::min), cfg.grid.times.iter().copied().fold(0.0, f64::max));
    let mut worst: f64 = 0.0;
    let mut at = (f64::NAN, f64::NAN, f64::NAN);
    for _ in 0..cfg.sampling.draws {
        let k = rng.random_range(0..specs.len());
        let t = if t_hi > t_lo { (t_lo.ln() + rng.random::<f64>() * (t_hi / t_lo).ln()).exp() } else { t_lo };
        let x = cfg.grid.x_max * (2.0 * rng.random::<f64>() - 1.0);
        let spec = &specs[k];
        let direct = sd::density_1d(spec, t, x)?;
        let s = t.powf(-1.0 / spec.alpha);
        let scaled = s * sd::density_1d(spec, 1.0, s * x)?;
        let err = (direct - scaled).abs() / direct.abs().max(f64::MIN_POSITIVE);
        if err > worst {
            worst = err;
            at = (spec.alpha, t, x);
        }
    }
    rep.info(params(&[("alpha", at.0), ("t", at.1), ("x", at.2)]), "worst_triple", worst);
    rep.check(
        params(&[("draws", cfg.sampling.draws as f64)]),
        "max_rel_err",
        worst,
        Check::AtMost(cfg.tolerances.scaling_rel),
    );
    Ok(rep)
}

/// `sup p^(α)/ϱ_α` per α and its spread across α.
fn uniform_bounds(out: &Out) -> Result<Report> {
    let cfg = out.cfg;
    let mut rep = Report::new(experiment_id(cfg));
    let xs = linspace(-cfg.grid.x_max, cfg.grid.x_max, cfg.grid.n_x);
    let mut ratios = Vec::new();
    for &alpha in &cfg.experiment.alphas {
        let spec = StableKernelSpec::new(1, alpha)?;
        let (ratio, (t, x)) = sd::certify_uniform_bound(&spec, &cfg.grid.times, &xs)?;
        rep.info(params(&[("alpha", alpha), ("t", t), ("x", x)]), "sup_ratio", ratio);
        ratios.push(ratio);
    }
    rep.check("", "ratio_spread", spread(ratios), Check::AtMost(cfg.tolerances.ratio_spread));
    Ok(rep)
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi / lo).ln()).exp()
}

/// (3P) ratios, `rho_mass` scaling exponents and subordinator moments.
fn inequalities(out: &Out) -> Result<Report> {
    let cfg = out.cfg;
    let tol = &cfg.tolerances;
    let seed = cfg.experiment.seed;
    let mut rep = Report::new(experiment_id(cfg));
    let alphas = &cfg.experiment.alphas;
    let draws = cfg.sampling.draws;

    let draw_3p = |rng: &mut RngStream, gammas: &dyn Fn(&mut RngStream) -> [f64; 4]| -> Result<f64> {
        let mut worst: f64 = 0.0;
        for _ in 0..draws {
            let t = log_uniform(rng, 1e-3, 10.0);
            let s = log_uniform(rng, 1e-3, 10.0);
            let sign = |r: &mut RngStream| if r.random::<bool>() { 1.0 } else { -1.0 };
            let x = sign(rng) * log_uniform(rng, 1e-3, 1e3);
            let y = sign(rng) * log_uniform(rng, 1e-3, 1e3);
            let g = gammas(rng);
            worst = worst.max(check_3p(t, s, &[x], &[y], g)?);
        }
        Ok(worst)
    };
    for (k, &alpha) in alphas.iter().enumerate() {
        let mut rng = RngStream::new(seed, 100 + k as u64);
        let worst = draw_3p(&mut rng, &|_| [alpha; 4])?;
        rep.check(params(&[("alpha", alpha), ("draws", draws as f64)]), "3p_max_ratio", worst, Check::Finite);
    }
    let lo = alphas.iter().copied().fold(2.0, f64::min);
    let mut rng = RngStream::new(seed, 99);
    let worst = draw_3p(&mut rng, &|r| {
        let mut g = [0.0; 4];
        for v in &mut g {
            *v = lo + (2.0 - lo) * r.random::<f64>();
        }
        g
    })?;
    rep.check(params(&[("gamma_lo", lo), ("draws", draws as f64)]), "3p_max_ratio_mixed", worst, Check::Finite);

    // ∫ min(1, |x|^{-2}) dx = 4.
    let unit = kernel_math::rho_mass(&BoundProfile::new(1, 0.0, 1.0, 1.0)?, 0.0, 1.0)?;
    rep.check("gamma1=1;gamma2=1;theta=0;t=1", "rho_mass_unit", unit, Check::Within { target: 4.0, tol: tol.power_rel });
    for &alpha in alphas {
        for (d, g1, g2, theta) in [(1, alpha, alpha, 0.0), (1, alpha, 2.0, 0.5 * alpha), (1, 2.0, alpha, 0.25), (2, alpha, alpha, 0.5)] {
            let prof = BoundProfile::new(d, 0.0, g1, g2)?;
            let dd = d as f64;
            let power = 1.0 - (g2 - theta) * (dd + g1) / (g1 * (dd + g2));
            let base = kernel_math::rho_mass(&prof, theta, 1.0)?;
            let mut worst: f64 = 0.0;
            for lambda in [0.01, 0.5, 2.0, 100.0] {
                let v = kernel_math::rho_mass(&prof, theta, lambda)?;
                let predicted = base * lambda.powf(power);
                worst = worst.max((v / predicted - 1.0).abs());
            }
            rep.check(
                params(&[("d", dd), ("gamma1", g1), ("gamma2", g2), ("theta", theta)]),
                "rho_mass_power_rel_err",
                worst,
                Check::AtMost(tol.power_rel),
            );
        }
    }

    // E S_1^θ = Γ(1 - 2θ/α)/Γ(1 - θ) for θ < α/2.
    for (k, &alpha) in alphas.iter().enumerate() {
        if !(alpha < 2.0) {
            continue;
        }
        let mut rng = RngStream::new(seed, 200 + k as u64);
        let s = sampling::sample_subordinator(alpha, 1.0, cfg.sampling.samples, &mut rng)?;
        for theta in [-1.0, -0.5, alpha / 8.0] {
            let exact = kernel_math::gamma_fn(1.0 - 2.0 * theta / alpha)? / kernel_math::gamma_fn(1.0 - theta)?;
            let n = s.len() as f64;
            let vals: Vec<f64> = s.iter().map(|v| v.powf(theta)).collect();
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let se = (var / n).sqrt();
            rep.info_err(params(&[("alpha", alpha), ("theta", theta)]), "subordinator_moment", mean, se);
            rep.check(
                params(&[("alpha", alpha), ("theta", theta)]),
                "subordinator_moment_z",
                (mean - exact).abs() / se,
                Check::AtMost(tol.mc_sigmas),
            );
        }
    }
    Ok(rep)
}

fn slope_check(rep: &mut Report, name: &str, fit: &RateFit, tol: f64, r2_min: Option<f64>) {
    rep.check(name, "slope", fit.slope, Check::Within { target: 1.0, tol });
    match r2_min {
        Some(m) => rep.check(name, "r_squared", fit.r_squared, Check::AtLeast(m)),
        None => {
            rep.info(name, "r_squared", fit.r_squared);
            true
        }
    };
}

fn fit_rows(rep: &mut Report, metric: &str, alphas: &[f64], values: &[f64]) {
    for (a, v) in alphas.iter().zip(values) {
        rep.info(params(&[("alpha", *a)]), metric, *v);
    }
}

/// Normalized sup-difference `D(α)` of the kernels against `2 - α`.
fn kernel_rate(out: &Out) -> Result<Report> {
    let cfg = out.cfg;
    let mut rep = Report::new(experiment_id(cfg));
    let xs = linspace(-cfg.grid.x_max, cfg.grid.x_max, cfg.grid.n_x);
    let t = cfg.grid.times[0];
    let specs = cfg.experiment.alphas.iter().map(|&a| StableKernelSpec::new(1, a)).collect::<Result<Vec<_>>>()?;
    let fit = sd::certify_diff_rate(&specs, t, &xs)?;
    let values: Vec<f64> = fit.points.iter().map(|p| p.1.exp()).collect();
    fit_rows(&mut rep, "diff_statistic", &cfg.experiment.alphas, &values);
    slope_check(&mut rep, "kernel", &fit, cfg.tolerances.slope_tol, Some(cfg.tolerances.r_squared_min));
    rep.fit("kernel", fit);
    Ok(rep)
}

/// `sup |Δ^{α/2} f - Δ f|` for `f = exp(-x²)` against `2 - α`, and the
/// eigenfunction check `Δ^{α/2} cos = -cos`.
fn generator_rate(out: &Out) -> Result<Report> {
    let cfg = out.cfg;
    let tol = &cfg.tolerances;
    let mut rep = Report::new(experiment_id(cfg));
    let xs = linspace(-cfg.grid.x_max, cfg.grid.x_max, cfg.grid.n_x);
    let alphas = &cfg.experiment.alphas;
    let mut sups = Vec::new();
    let mut spectral: f64 = 0.0;
    let cosine = Cosine { omega: 1.0 };
    for &alpha in alphas {
        let mut sup: f64 = 0.0;
        for &x in &xs {
            let v = frac_laplacian(&GaussianBump, alpha, x, tol.quadrature)?;
            sup = sup.max((v - GaussianBump.second_derivative(x)).abs());
            let c = frac_laplacian(&cosine, alpha, x, tol.quadrature)?;
            spectral = spectral.max((c + x.cos()).abs());
        }
        sups.push(sup);
    }
    for alpha in [0.5, 1.0, 1.5, 1.9, 2.0] {
        for x in [0.0, 1.0, PI / 2.0] {
            let c = frac_laplacian(&cosine, alpha, x, tol.quadrature)?;
            spectral = spectral.max((c + x.cos()).abs());
        }
    }
    fit_rows(&mut rep, "generator_sup_diff", alphas, &sups);
    let fit = RateFit::from_alphas(alphas, &sups, 4)?;
    slope_check(&mut rep, "generator", &fit, tol.generator_slope_tol, None);
    rep.fit("generator", fit);
    rep.check("omega=1", "spectral_max_err", spectral, Check::AtMost(tol.spectral_abs));
    Ok(rep)
}

fn space_time_grid(cfg: &ExperimentConfig) -> Result<SpaceTimeGrid> {
    let p = &cfg.parametrix;
    if p.half_width > 0.0 {
        SpaceTimeGrid::new(p.half_width, p.n_x, p.horizon, p.n_t)
    } else {
        SpaceTimeGrid::for_alphas(&cfg.experiment.alphas, p.horizon, p.n_x, p.n_t)
    }
}

fn drift(cfg: &ExperimentConfig) -> Result<DriftSpec> {
    DriftSpec::from_name(&cfg.drift.name, cfg.drift.a, cfg.drift.beta)
}

fn kernel_slice(out: &Out, name: &str, k: &SpaceTimeKernel, n: usize, i: usize) -> Result<()> {
    out.slice(name, |w| parametrix::write_slice_csv(k, n, i, w))
}

/// Largest `|∫ k dy - 1|` over the probe rows and all lags.
fn row_mass_defect(k: &SpaceTimeKernel, rows: &[usize]) -> f64 {
    let mut worst: f64 = 0.0;
    for n in 1..k.grid.n_t {
        for &i in rows {
            worst = worst.max((k.row_mass(n, i) - 1.0).abs());
        }
    }
    worst
}

/// Builds `p̂_b` per α; for `b(x) = -x` compares with the exact OU kernel.
fn parametrix_build(out: &Out) -> Result<Report> {
    let cfg = out.cfg;
    let tol = &cfg.tolerances;
    let mut rep = Report::new(experiment_id(cfg));
    let grid = space_time_grid(cfg)?;
    let b = drift(cfg)?;
    let probe = Probe::central(&grid);
    let last = grid.n_t - 1;
    let centre = grid.n_x / 2;
    for &alpha in &cfg.experiment.alphas {
        let pm = Parametrix::new(alpha, &b, &grid)?;
        let hk = pm.heat_kernel(cfg.parametrix.n_max, cfg.parametrix.tail_tol)?;
        let k = &hk.kernel;
        let p = params(&[("alpha", alpha), ("T", grid.horizon), ("n_x", grid.n_x as f64), ("n_t", grid.n_t as f64)]);
        for (n, v) in hk.series_norms.iter().enumerate() {
            rep.info(format!("{p};n={n}"), "series_weighted_norm", *v);
        }
        rep.check(p.clone(), "series_converged", hk.converged as u8 as f64, Check::AtLeast(1.0));
        rep.info(p.clone(), "clipped_mass", k.clipped_mass);
        rep.check(p.clone(), "row_mass_defect", row_mass_defect(k, &probe.rows), Check::AtMost(1e-3));
        rep.info(p.clone(), "uniform_ratio", parametrix::uniform_ratio(&pm, k, &probe)?);
        rep.info(p.clone(), "log_gradient_sup", parametrix::log_gradient_check(k, alpha, &probe)?);
        let ck = parametrix::chapman_kolmogorov_l1(k, &probe.rows)?;
        rep.check(p.clone(), "chapman_kolmogorov_l1", ck, Check::AtMost(tol.chapman_kolmogorov));
        if b.affine() == Some((-1.0, 0.0)) {
            let exact = parametrix::ou_exact_kernel(pm.profile(), &grid)?;
            let l1 = parametrix::kernel_l1(k, &exact, &probe.rows, 1)?;
            rep.check(p.clone(), "ou_kernel_l1", l1, Check::AtMost(tol.kernel_l1));
            rep.info(p.clone(), "ou_kernel_l1_at_T", parametrix::kernel_l1(k, &exact, &probe.rows, last)?);
            kernel_slice(out, &format!("ou_exact_a{}_x0.csv", tag(alpha)), &exact, last, centre)?;
        }
        kernel_slice(out, &format!("heat_a{}_x0.csv", tag(alpha)), k, last, centre)?;
        kernel_slice(out, &format!("heat_a{}_xq.csv", tag(alpha)), k, last, centre + grid.n_x / 8)?;
        out.panel(&format!("heat_a{}.skp", tag(alpha)), k)?;
    }
    Ok(rep)
}

/// Uniform ratios and the α-continuity rate of `p̂_b`, plus the closed-form
/// OU counterpart of the rate.
fn sde_rate(out: &Out) -> Result<Report> {
    let cfg = out.cfg;
    let tol = &cfg.tolerances;
    let mut rep = Report::new(experiment_id(cfg));
    let alphas = &cfg.experiment.alphas;
    let mut grid_alphas = alphas.clone();
    grid_alphas.push(2.0);
    let p = &cfg.parametrix;
    let grid = if p.half_width > 0.0 {
        SpaceTimeGrid::new(p.half_width, p.n_x, p.horizon, p.n_t)?
    } else {
        SpaceTimeGrid::for_alphas(&grid_alphas, p.horizon, p.n_x, p.n_t)?
    };
    let b = drift(cfg)?;
    let cert = parametrix::certify_theorem_1_1(alphas, &b, &grid, p.n_max, p.tail_tol)?;
    for (a, r) in &cert.uniform {
        rep.info(params(&[("alpha", *a)]), "uniform_ratio", *r);
    }
    rep.check("", "uniform_ratio_spread", spread(cert.uniform.iter().map(|u| u.1)), Check::AtMost(tol.ratio_spread));
    for (a, norms) in &cert.series_norms {
        rep.info(params(&[("alpha", *a)]), "series_terms", norms.len() as f64);
    }
    let (al, d): (Vec<f64>, Vec<f64>) = cert.continuity_points.iter().copied().unzip();
    fit_rows(&mut rep, "continuity_statistic", &al, &d);
    let fit = cert
        .continuity
        .ok_or_else(|| Error::Config("rate-sde needs at least 3 alpha values below 2".into()))?;
    rep.check("parametrix", "slope", fit.slope, Check::AtLeast(tol.sde_slope_min));
    rep.info("parametrix", "r_squared", fit.r_squared);
    rep.fit("parametrix", fit);

    let probe = Probe::central(&grid);
    let p2 = StableProfile::new(2.0)?;
    let mut ou = Vec::new();
    for &a in alphas {
        let pa = StableProfile::new(a)?;
        ou.push(parametrix::ou_continuity_statistic_with(&pa, &p2, &grid, &probe)?);
    }
    fit_rows(&mut rep, "ou_closed_form_statistic", alphas, &ou);
    let ou_fit = RateFit::from_alphas(alphas, &ou, 3)?;
    slope_check(&mut rep, "ou_closed_form", &ou_fit, tol.slope_tol, None);
    rep.fit("ou_closed_form", ou_fit);
    Ok(rep)
}

/// Distances between exact OU invariant laws at α and at 2.
fn invariant_exact(out: &Out) -> Result<Report> {
    let cfg = out.cfg;
    let tol = &cfg.tolerances;
    let inv = &cfg.invariant;
    let mut rep = Report::new(experiment_id(cfg));
    let grid = UniformGrid::symmetric(inv.x_max, inv.n_x)?;
    let gauss = metrics::ou_exact_stationary(2.0, &grid)?;
    let cos2 = metrics::ou_stationary_cos_moment(2.0, &grid)?;
    let alphas = &cfg.experiment.alphas;
    let (mut var, mut wvar) = (Vec::new(), Vec::new());
    for &alpha in alphas {
        let f = metrics::ou_exact_stationary(alpha, &grid)?;
        let p = params(&[("alpha", alpha)]);
        let v = metrics::var_distance(&f, &gauss)?;
        let w = metrics::weighted_var_distance(&f, &gauss, inv.p)?;
        let lb = metrics::ou_char_lower_bound(alpha)?;
        let gap = (metrics::ou_stationary_cos_moment(alpha, &grid)? - cos2).abs();
        rep.info(p.clone(), "var_distance", v);
        rep.info(format!("{p};p={}", inv.p), "weighted_var_distance", w);
        rep.info(p.clone(), "lower_bound", lb);
        rep.check(p.clone(), "lower_bound_reproduction_err", (gap - lb).abs(), Check::AtMost(tol.lower_bound_abs));
        rep.check(p.clone(), "var_minus_lower_bound", v - lb, Check::AtLeast(0.0));
        let t1 = metrics::transport_cost(&DiscreteMeasure::from_grid(&f)?, &DiscreteMeasure::from_grid(&gauss)?, 1.0)?;
        rep.info(p.clone(), "transport_cost_p1", t1.value);
        out.xy_slice(&format!("stationary_a{}.csv", tag(alpha)), &grid.points(), &f.values)?;
        var.push(v);
        wvar.push(w);
    }
    out.xy_slice("stationary_a2.csv", &grid.points(), &gauss.values)?;
    let fit = metrics::rate_fit(alphas, &var)?;
    slope_check(&mut rep, "var", &fit, tol.slope_tol, None);
    rep.fit("var", fit);
    let fit = metrics::rate_fit(alphas, &wvar)?;
    slope_check(&mut rep, "weighted_var", &fit, tol.slope_tol, None);
    rep.fit("weighted_var", fit);
    Ok(rep)
}

fn scheme(cfg: &ExperimentConfig) -> InvariantScheme {
    let inv = &cfg.invariant;
    InvariantScheme {
        t_burn: inv.t_burn,
        t_sample: inv.t_sample,
        n_steps: inv.n_steps,
        n_chains: inv.n_chains,
    }
}

/// Euler-chain estimates of the invariant law, checked against the exact OU
/// law when `b(x) = -x`, with a same-seed rerun and an independent seed.
fn invariant_monte_carlo(out: &Out) -> Result<Report> {
    let cfg = out.cfg;
    let tol = &cfg.tolerances;
    let inv = &cfg.invariant;
    let mut rep = Report::new(experiment_id(cfg));
    let grid = UniformGrid::symmetric(inv.x_max, inv.n_x)?;
    let b = drift(cfg)?;
    let sch = scheme(cfg);
    let seed = cfg.experiment.seed;
    for &alpha in &cfg.experiment.alphas {
        let p = params(&[("alpha", alpha), ("n_chains", sch.n_chains as f64), ("t_sample", sch.t_sample)]);
        let est = metrics::estimate_invariant(&b, alpha, &sch, &grid, seed)?;
        let again = metrics::estimate_invariant(&b, alpha, &sch, &grid, seed)?;
        let repro = est
            .density
            .values
            .iter()
            .zip(&again.density.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        rep.check(p.clone(), "same_seed_max_abs_diff", repro, Check::AtMost(0.0));
        let other = metrics::estimate_invariant(&b, alpha, &sch, &grid, seed.wrapping_add(1))?;
        let z = est
            .density
            .values
            .iter()
            .zip(&other.density.values)
            .zip(est.stderr.iter().zip(&other.stderr))
            .filter(|(_, (s1, s2))| **s1 > 0.0 || **s2 > 0.0)
            .map(|((a, b), (s1, s2))| (a - b).abs() / (s1 * s1 + s2 * s2).sqrt())
            .fold(0.0, f64::max);
        rep.info(p.clone(), "seed_pair_max_z", z);
        rep.info(p.clone(), "captured_mass", est.density.captured_mass);
        if b.affine() == Some((-1.0, 0.0)) {
            let exact = metrics::ou_exact_stationary(alpha, &grid)?;
            let l1 = metrics::var_distance(&est.density, &exact)?;
            rep.check(p.clone(), "l1_to_exact", l1, Check::AtMost(tol.invariant_l1));
        }
        out.xy_slice(&format!("invariant_mc_a{}.csv", tag(alpha)), &grid.points(), &est.density.values)?;
    }
    Ok(rep)
}

/// `∫|x|^γ dμ̂^(α)` across α, with exact OU moments for reference.
fn invariant_moments(out: &Out) -> Result<Report> {
    let cfg = out.cfg;
    let inv = &cfg.invariant;
    let mut rep = Report::new(experiment_id(cfg));
    let grid = UniformGrid::symmetric(inv.x_max, inv.n_x)?;
    let b = drift(cfg)?;
    let sweep = metrics::moment_sweep(&b, inv.gamma, &cfg.experiment.alphas, &scheme(cfg), &grid, cfg.experiment.seed)?;
    for (alpha, m) in &sweep {
        let p = params(&[("alpha", *alpha), ("gamma", inv.gamma)]);
        rep.info(p.clone(), "moment", *m);
        if b.affine() == Some((-1.0, 0.0)) {
            let exact: GridDensity = metrics::ou_exact_stationary(*alpha, &grid)?;
            rep.info(p, "exact_grid_moment", metrics::grid_moment(&exact, inv.gamma));
        }
    }
    rep.check(
        params(&[("gamma", inv.gamma)]),
        "moment_spread",
        spread(sweep.iter().map(|s| s.1)),
        Check::AtMost(cfg.tolerances.moment_spread),
    );
    Ok(rep)
}
