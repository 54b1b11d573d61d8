use stablekern::drift_flow::DriftSpec;
use stablekern::parametrix::{chapman_kolmogorov_l1, exponents, kernel_l1, ou_exact_kernel, Parametrix, Probe, SpaceTimeGrid};
use stablekern::stable_density::{density_1d, StableKernelSpec};

fn grid() -> SpaceTimeGrid {
    SpaceTimeGrid::new(10.0, 129, 0.5, 17).unwrap()
}

#[test]
fn zero_drift_gives_the_stable_kernel() {
    let g = grid();
    let alpha = 1.7;
    let pm = Parametrix::new(alpha, &DriftSpec::zero(), &g).unwrap();
    let hk = pm.heat_kernel(10, 1e-4).unwrap();
    assert_eq!(hk.series_norms.iter().copied().fold(0.0, f64::max), 0.0);
    let spec = StableKernelSpec::new(1, alpha).unwrap();
    let n = g.n_t - 1;
    let i = g.n_x / 2;
    let l1: f64 = (0..g.n_x)
        .map(|k| (hk.kernel.at(n)[[i, k]] - density_1d(&spec, g.lag(n), g.x(i) - g.x(k)).unwrap()).abs() * g.h())
        .sum();
    assert!(l1 < 5e-3, "L1 {l1}");
}

#[test]
fn frozen_kernel_has_unit_column_mass() {
    let g = grid();
    let pm = Parametrix::new(1.9, &DriftSpec::ou(), &g).unwrap();
    let k = pm.frozen_kernel().unwrap();
    // Columns whose backward flow stays inside the probe region, away from
    // the truncation at ±L.
    for n in [1, 8, 16] {
        for col in [50, 64, 78] {
            assert!((k.column_mass(n, col) - 1.0).abs() < 1e-3, "n={n} col={col}: {}", k.column_mass(n, col));
        }
    }
}

#[test]
fn ou_heat_kernel_matches_closed_form() {
    let g = grid();
    let pm = Parametrix::new(1.9, &DriftSpec::ou(), &g).unwrap();
    let hk = pm.heat_kernel(20, 1e-4).unwrap();
    assert!(hk.converged);
    let exact = ou_exact_kernel(pm.profile(), &g).unwrap();
    let probe = Probe::central(&g);
    assert!(kernel_l1(&hk.kernel, &exact, &probe.rows, 1).unwrap() < 2e-2);
    assert!(chapman_kolmogorov_l1(&hk.kernel, &probe.rows).unwrap() < 2e-2);
}

fn bump_row_mass_defect(n_t: usize) -> f64 {
    let g = SpaceTimeGrid::new(10.0, 129, 0.5, n_t).unwrap();
    let pm = Parametrix::new(1.9, &DriftSpec::holder_bump(0.5, 0.5).unwrap(), &g).unwrap();
    let hk = pm.heat_kernel(20, 1e-4).unwrap();
    let probe = Probe::central(&g);
    (1..g.n_t)
        .flat_map(|n| probe.rows.iter().map(move |&i| (n, i)))
        .map(|(n, i)| (hk.kernel.row_mass(n, i) - 1.0).abs())
        .fold(0.0, f64::max)
}

#[test]
fn perturbed_kernel_is_nonnegative_and_asymmetric() {
    let g = grid();
    let pm = Parametrix::new(1.9, &DriftSpec::holder_bump(0.5, 0.5).unwrap(), &g).unwrap();
    let hk = pm.heat_kernel(20, 1e-4).unwrap();
    let k = &hk.kernel;
    let mut asym: f64 = 0.0;
    for n in 1..g.n_t {
        let m = k.at(n);
        assert!(m.iter().all(|v| *v >= 0.0));
        for i in 0..g.n_x {
            for j in 0..g.n_x {
                asym = asym.max((m[[i, j]] - m[[j, i]]).abs());
            }
        }
    }
    assert!(asym > 1e-3 * k.sup_abs());
}

// The time quadrature in ⊗ is first order, and so is the row mass defect.
#[test]
fn perturbed_row_mass_defect_is_first_order_in_time_step() {
    let coarse = bump_row_mass_defect(17);
    let fine = bump_row_mass_defect(33);
    assert!(coarse < 2e-2, "{coarse}");
    let ratio = coarse / fine;
    assert!((1.7..2.3).contains(&ratio), "{coarse} {fine}");
}

#[test]
fn series_norms_decay_after_first_term() {
    let g = grid();
    let pm = Parametrix::new(1.9, &DriftSpec::sin_perturbed(0.5, 0.5).unwrap(), &g).unwrap();
    let s = pm.q_series(30, 1e-4).unwrap();
    assert!(s.converged);
    assert!(s.norms.iter().all(|v| v.is_finite()));
    assert!(s.norms[1..].windows(2).all(|w| w[1] <= w[0]), "{:?}", s.norms);
}

#[test]
fn exponent_ordering_on_admissible_range() {
    for alpha in [1.75, 1.8, 1.9, 1.99] {
        for beta in [0.5, 1.0] {
            let (e0, e1, e2) = exponents(alpha, beta);
            assert!((e0 - (alpha + beta - 1.0) / alpha).abs() < 1e-15);
            assert!((e2 - e1 - (alpha - 2.0) / alpha).abs() < 1e-15);
            assert!(1.0 + 1e-15 >= e0 && e0 >= e1 && e1 >= e2 && e2 > 0.0, "α={alpha} β={beta}");
        }
    }
}
