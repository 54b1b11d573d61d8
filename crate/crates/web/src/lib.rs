//! WebAssembly bindings for the page in `www/`.
//!
//! Every function returns a flat `Float64Array`; errors surface as thrown
//! strings.

use stablekern::metrics::{ou_char_lower_bound, ou_exact_stationary, var_distance};
use stablekern::sampling::{sample_stable_1d, RngStream};
use stablekern::stable_density::{density_1d, StableKernelSpec};
use stablekern::UniformGrid;
use wasm_bindgen::prelude::*;

fn js(e: stablekern::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// `[x_0, p_0, g_0, x_1, p_1, g_1, ...]`: the α-stable density at time `t`
/// and the Gaussian (α = 2) density at the same time.
#[wasm_bindgen]
pub fn density_curve(alpha: f64, t: f64, x_max: f64, n: usize) -> Result<Vec<f64>, JsValue> {
    let grid = UniformGrid::symmetric(x_max, n).map_err(js)?;
    let spec = StableKernelSpec::new(1, alpha).map_err(js)?;
    let gauss = StableKernelSpec::new(1, 2.0).map_err(js)?;
    let mut out = Vec::with_capacity(3 * n);
    for x in grid.points() {
        out.push(x);
        out.push(density_1d(&spec, t, x).map_err(js)?);
        out.push(density_1d(&gauss, t, x).map_err(js)?);
    }
    Ok(out)
}

/// `[α, var distance, lower bound, ...]` between the OU invariant laws at α
/// and at 2, for `n` values of α spread evenly over `[alpha_lo, alpha_hi]`.
#[wasm_bindgen]
pub fn ou_invariant_distances(alpha_lo: f64, alpha_hi: f64, n: usize) -> Result<Vec<f64>, JsValue> {
    let grid = UniformGrid::symmetric(60.0, 6001).map_err(js)?;
    let gauss = ou_exact_stationary(2.0, &grid).map_err(js)?;
    let mut out = Vec::with_capacity(3 * n);
    for i in 0..n {
        let alpha = if n == 1 {
            alpha_lo
        } else {
            alpha_lo + (alpha_hi - alpha_lo) * i as f64 / (n - 1) as f64
        };
        let f = ou_exact_stationary(alpha, &grid).map_err(js)?;
        out.push(alpha);
        out.push(var_distance(&f, &gauss).map_err(js)?);
        out.push(ou_char_lower_bound(alpha).map_err(js)?);
    }
    Ok(out)
}

/// Histogram of `n` stable draws on `bins` cells of `[-x_max, x_max]`,
/// normalized as a density, as `[centre, height, ...]`. Draws outside the
/// window are dropped from the counts but not from the normalization.
#[wasm_bindgen]
pub fn sample_histogram(alpha: f64, t: f64, n: usize, seed: u64, bins: usize, x_max: f64) -> Result<Vec<f64>, JsValue> {
    if bins == 0 || !(x_max > 0.0) {
        return Err(JsValue::from_str("need bins >= 1 and x_max > 0"));
    }
    let mut rng = RngStream::new(seed, 0);
    let draws = sample_stable_1d(alpha, t, n, &mut rng).map_err(js)?;
    let width = 2.0 * x_max / bins as f64;
    let mut counts = vec![0usize; bins];
    for x in draws {
        let k = ((x + x_max) / width).floor();
        if k >= 0.0 && (k as usize) < bins {
            counts[k as usize] += 1;
        }
    }
    Ok(counts
        .iter()
        .enumerate()
        .flat_map(|(k, c)| [-x_max + (k as f64 + 0.5) * width, *c as f64 / (n as f64 * width)])
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_layout() {
        let v = density_curve(1.5, 1.0, 5.0, 11).unwrap();
        assert_eq!(v.len(), 33);
        assert_eq!(v[15], 0.0);
        assert!(v[16] > v[17]);
    }

    #[test]
    fn histogram_integrates_to_captured_fraction() {
        let v = sample_histogram(1.8, 1.0, 20_000, 7, 40, 8.0).unwrap();
        let mass: f64 = v.chunks(2).map(|c| c[1] * 0.4).sum();
        assert!(mass > 0.97 && mass <= 1.0 + 1e-12);
    }

    #[test]
    fn distances_shrink_toward_two() {
        let v = ou_invariant_distances(1.8, 1.98, 3).unwrap();
        assert!(v[1] > v[4] && v[4] > v[7]);
        assert!(v.chunks(3).all(|c| c[2] <= c[1]));
    }
}
