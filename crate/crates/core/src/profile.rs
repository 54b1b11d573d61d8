//! Tabulated one-dimensional stable profile `g = p^(α)(1, ·)`.
//!
//! The parametrix tabulates the stable kernel at many lags and offsets; it
//! reads `g`, `g'` and the survival function `Q(u) = ∫_u^∞ g` from Hermite
//! tables and rescales with `p(w, u) = w^{-1/α} g(u w^{-1/α})`.
//! Nodes are uniform on `[0, 20]` and geometric out to `10³`; beyond that the
//! leading power tail `g(u) ≈ c u^{-1-α}` is used.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::stable_density::{density_1d, density_derivative, StableKernelSpec};

const CORE_END: f64 = 20.0;
const CORE_STEP: f64 = 0.02;
const TAIL_RATIO: f64 = 1.02;
const TABLE_END: f64 = 1.0e3;

#[derive(Debug, Clone)]
enum Repr {
    Gaussian,
    Table {
        nodes: Vec<f64>,
        g: Vec<f64>,
        dg: Vec<f64>,
        d2g: Vec<f64>,
        q: Vec<f64>,
        /// `g(u) ≈ tail_c·u^{-1-α}` beyond the last node.
        tail_c: f64,
    },
}

/// Lookup table for `p^(α)(1, ·)`, its derivative and its survival function.
#[derive(Debug, Clone)]
pub struct StableProfile {
    alpha: f64,
    repr: Repr,
}

fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let s = (x - x0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * h * d0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * h * d1
}

/// Quintic Hermite interpolation from values, first and second derivatives.
fn hermite5(x0: f64, x1: f64, y: [f64; 2], d: [f64; 2], dd: [f64; 2], x: f64) -> f64 {
    let h = x1 - x0;
    let s = (x - x0) / h;
    let (s2, s3) = (s * s, s * s * s);
    let (s4, s5) = (s3 * s, s3 * s2);
    let h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    let h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    let h2 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5);
    let h3 = 0.5 * (s3 - 2.0 * s4 + s5);
    let h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    let h5 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
    h0 * y[0] + h1 * h * d[0] + h2 * h * h * dd[0] + h3 * h * h * dd[1] + h4 * h * d[1] + h5 * y[1]
}

impl StableProfile {
    pub fn new(alpha: f64) -> Result<Self> {
        let spec = StableKernelSpec::new(1, alpha)?;
        if alpha == 2.0 {
            return Ok(Self {
                alpha,
                repr: Repr::Gaussian,
            });
        }
        let mut nodes = Vec::new();
        let n_core = (CORE_END / CORE_STEP).round() as usize;
        for i in 0..=n_core {
            nodes.push(i as f64 * CORE_STEP);
        }
        let mut u = CORE_END;
        while u < TABLE_END {
            u = (u * TAIL_RATIO).min(TABLE_END);
            nodes.push(u);
        }
        let mut g = Vec::with_capacity(nodes.len());
        let mut dg = Vec::with_capacity(nodes.len());
        let mut d2g = Vec::with_capacity(nodes.len());
        for &u in &nodes {
            g.push(density_1d(&spec, 1.0, u)?);
            dg.push(density_derivative(&spec, 1, 1.0, u)?);
            d2g.push(density_derivative(&spec, 2, 1.0, u)?);
        }
        let last = nodes.len() - 1;
        let tail_c = g[last] * nodes[last].powf(1.0 + alpha);
        // Survival function by integrating the quintic interpolant of g from
        // the tail inward.
        let mut q = vec![0.0; nodes.len()];
        q[last] = tail_c * nodes[last].powf(-alpha) / alpha;
        for k in (0..last).rev() {
            let h = nodes[k + 1] - nodes[k];
            let piece = h / 2.0 * (g[k] + g[k + 1])
                + h * h / 10.0 * (dg[k] - dg[k + 1])
                + h * h * h / 120.0 * (d2g[k] + d2g[k + 1]);
            q[k] = q[k + 1] + piece;
        }
        let half = q[0];
        if (half - 0.5).abs() > 1e-7 {
            return Err(Error::numeric(
                "StableProfile",
                format!("table mass check failed: Q(0) = {half}"),
                (half - 0.5).abs(),
            ));
        }
        Ok(Self {
            alpha,
            repr: Repr::Table {
                nodes,
                g,
                dg,
                d2g,
                q,
                tail_c,
            },
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn locate(nodes: &[f64], u: f64) -> usize {
        if u < CORE_END {
            ((u / CORE_STEP) as usize).min(nodes.len() - 2)
        } else {
            match nodes.binary_search_by(|n| n.total_cmp(&u)) {
                Ok(k) => k.min(nodes.len() - 2),
                Err(k) => (k - 1).min(nodes.len() - 2),
            }
        }
    }

    /// `g(u) = p(1, u)`.
    pub fn g(&self, u: f64) -> f64 {
        let u = u.abs();
        match &self.repr {
            Repr::Gaussian => (-u * u / 4.0).exp() / (4.0 * PI).sqrt(),
            Repr::Table { nodes, g, dg, d2g, tail_c, .. } => {
                if u >= TABLE_END {
                    return tail_c * u.powf(-1.0 - self.alpha);
                }
                let k = Self::locate(nodes, u);
                hermite5(nodes[k], nodes[k + 1], [g[k], g[k + 1]], [dg[k], dg[k + 1]], [d2g[k], d2g[k + 1]], u)
            }
        }
    }

    /// `g'(u)`.
    pub fn dg(&self, u: f64) -> f64 {
        let s = u.signum();
        let a = u.abs();
        let v = match &self.repr {
            Repr::Gaussian => -a / 2.0 * (-a * a / 4.0).exp() / (4.0 * PI).sqrt(),
            Repr::Table { nodes, dg, d2g, tail_c, .. } => {
                if a >= TABLE_END {
                    -(1.0 + self.alpha) * tail_c * a.powf(-2.0 - self.alpha)
                } else {
                    let k = Self::locate(nodes, a);
                    hermite(nodes[k], nodes[k + 1], dg[k], dg[k + 1], d2g[k], d2g[k + 1], a)
                }
            }
        };
        s * v
    }

    /// Survival function `Q(u) = ∫_u^∞ g` for `u ≥ 0`.
    pub(crate) fn survival_pos(&self, u: f64) -> f64 {
        match &self.repr {
            Repr::Gaussian => 0.5 * libm::erfc(u / 2.0),
            Repr::Table { nodes, g, dg, q, tail_c, .. } => {
                if u >= TABLE_END {
                    return tail_c * u.powf(-self.alpha) / self.alpha;
                }
                let k = Self::locate(nodes, u);
                hermite5(nodes[k], nodes[k + 1], [q[k], q[k + 1]], [-g[k], -g[k + 1]], [-dg[k], -dg[k + 1]], u)
            }
        }
    }

    /// CDF `G(u) = ∫_{-∞}^u g`.
    pub fn cdf(&self, u: f64) -> f64 {
        if u >= 0.0 {
            1.0 - self.survival_pos(u)
        } else {
            self.survival_pos(-u)
        }
    }

    /// `G(a) - G(b)` without cancellation in the tails.
    pub fn cdf_diff(&self, a: f64, b: f64) -> f64 {
        if a >= 0.0 && b >= 0.0 {
            self.survival_pos(b) - self.survival_pos(a)
        } else if a <= 0.0 && b <= 0.0 {
            self.survival_pos(-a) - self.survival_pos(-b)
        } else {
            self.cdf(a) - self.cdf(b)
        }
    }

    /// `p(w, u)`.
    pub fn density(&self, w: f64, u: f64) -> f64 {
        let s = w.powf(-1.0 / self.alpha);
        s * self.g(u * s)
    }

    /// `∂_u p(w, u)`.
    pub fn density_dx(&self, w: f64, u: f64) -> f64 {
        let s = w.powf(-1.0 / self.alpha);
        s * s * self.dg(u * s)
    }

    /// `∫_b^a p(w, u) du`.
    pub fn mass_between(&self, w: f64, b: f64, a: f64) -> f64 {
        let s = w.powf(-1.0 / self.alpha);
        self.cdf_diff(a * s, b * s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cauchy_table_matches_closed_form() {
        let p = StableProfile::new(1.0).unwrap();
        for u in [0.0, 0.013, 0.5, 3.7, 19.99, 25.0, 400.0, 5000.0] {
            let exact = 1.0 / (PI * (1.0 + u * u));
            assert!((p.g(u) - exact).abs() <= 1e-9 * exact.max(1e-3), "g({u}) = {} vs {exact}", p.g(u));
            let cdf = 0.5 + (u as f64).atan() / PI;
            assert!((p.cdf(u) - cdf).abs() < 1e-9, "G({u})");
            assert!((p.cdf(-u) - (1.0 - cdf)).abs() < 1e-9);
            let d = -2.0 * u / (PI * (1.0 + u * u).powi(2));
            assert!((p.dg(u) - d).abs() < 2e-9, "dg({u}) = {} vs {d}", p.dg(u));
        }
    }

    #[test]
    fn scaled_density_matches_quadrature() {
        let p = StableProfile::new(1.7).unwrap();
        let spec = StableKernelSpec::new(1, 1.7).unwrap();
        for (w, u) in [(0.01, 0.05), (0.3, -1.2), (2.0, 7.0)] {
            let direct = density_1d(&spec, w, u).unwrap();
            assert!((p.density(w, u) - direct).abs() < 1e-8 * direct.max(1.0));
        }
    }

    #[test]
    fn gaussian_profile() {
        let p = StableProfile::new(2.0).unwrap();
        assert!((p.cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((p.mass_between(0.5, -1e3, 1e3) - 1.0).abs() < 1e-15);
    }
}
