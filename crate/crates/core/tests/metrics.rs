use proptest::prelude::*;
use stablekern::metrics::{
    ou_char_lower_bound, ou_exact_stationary, transport_cost, var_distance, weighted_var_distance, DiscreteMeasure,
};
use stablekern::stable_density::tail_expansion;
use stablekern::{GridDensity, UniformGrid};

fn density(grid: UniformGrid, raw: &[f64]) -> GridDensity {
    GridDensity::new(grid, raw.to_vec(), 1.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn var_is_a_metric(
        a in proptest::collection::vec(0.01f64..1.0, 41),
        b in proptest::collection::vec(0.01f64..1.0, 41),
        c in proptest::collection::vec(0.01f64..1.0, 41),
    ) {
        let g = UniformGrid::symmetric(4.0, 41).unwrap();
        let (f, h, k) = (density(g, &a), density(g, &b), density(g, &c));
        let fh = var_distance(&f, &h).unwrap();
        prop_assert_eq!(fh, var_distance(&h, &f).unwrap());
        prop_assert_eq!(var_distance(&f, &f).unwrap(), 0.0);
        let via = var_distance(&f, &k).unwrap() + var_distance(&k, &h).unwrap();
        prop_assert!(fh <= via + 1e-12);
        prop_assert!(weighted_var_distance(&f, &h, 0.5).unwrap() >= fh);
    }

    #[test]
    fn transport_is_shift_invariant(
        atoms in proptest::collection::vec(-5.0f64..5.0, 2..30),
        other in proptest::collection::vec(-5.0f64..5.0, 2..30),
        shift in -100.0f64..100.0,
        p in 1.0f64..2.0,
    ) {
        let mu = DiscreteMeasure::empirical(&atoms).unwrap();
        let nu = DiscreteMeasure::empirical(&other).unwrap();
        let moved = |v: &[f64]| DiscreteMeasure::empirical(&v.iter().map(|x| x + shift).collect::<Vec<_>>()).unwrap();
        let a = transport_cost(&mu, &nu, p).unwrap().value;
        let b = transport_cost(&moved(&atoms), &moved(&other), p).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a) * (1.0 + shift.abs()));
    }

    // Equal-weight 3-atom measures: the optimum is a permutation.
    #[test]
    fn transport_matches_brute_force(
        x in proptest::array::uniform3(-3.0f64..3.0),
        y in proptest::array::uniform3(-3.0f64..3.0),
        p in 0.2f64..1.9,
    ) {
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let best = perms
            .iter()
            .map(|s| (0..3).map(|i| (x[i] - y[s[i]]).abs().powf(p)).sum::<f64>() / 3.0)
            .fold(f64::INFINITY, f64::min);
        let got = transport_cost(&DiscreteMeasure::empirical(&x).unwrap(), &DiscreteMeasure::empirical(&y).unwrap(), p)
            .unwrap()
            .value;
        prop_assert!((got - best).abs() <= 1e-12, "{got} vs {best}");
    }
}

// Grid mass plus the two tails beyond ±R.
#[test]
fn ou_stationary_mass_with_tails() {
    let r = 200.0;
    let grid = UniformGrid::symmetric(r, 40001).unwrap();
    for alpha in [1.5, 1.9] {
        let f = ou_exact_stationary(alpha, &grid).unwrap();
        let s = f64::powf(alpha, 1.0 / alpha);
        let u = s * r;
        let tail: f64 = tail_expansion(alpha, 12)
            .unwrap()
            .iter()
            .map(|(c, e)| c * u.powf(1.0 - e) / (e - 1.0))
            .sum();
        let total = f.mass() + 2.0 * tail;
        assert!((total - 1.0).abs() <= 1e-6, "α={alpha}: {total}");
    }
}

#[test]
fn lower_bound_is_dominated() {
    let grid = UniformGrid::symmetric(100.0, 20001).unwrap();
    let gauss = ou_exact_stationary(2.0, &grid).unwrap();
    for alpha in [1.6, 1.8, 1.95] {
        let v = var_distance(&ou_exact_stationary(alpha, &grid).unwrap(), &gauss).unwrap();
        assert!(ou_char_lower_bound(alpha).unwrap() <= v);
    }
}
