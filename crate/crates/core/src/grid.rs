//! Uniform one-dimensional grids and densities tabulated on them.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nodes `lo, lo + h, ..., hi` with `n ≥ 2` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl UniformGrid {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) || n < 2 {
            return Err(Error::Config(format!(
                "grid needs lo < hi and at least 2 nodes, got [{lo}, {hi}] with {n}"
            )));
        }
        Ok(Self { lo, hi, n })
    }

    /// Symmetric grid on `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n)
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.hi
        } else {
            self.lo + i as f64 * self.step()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    /// Trapezoid rule for values tabulated on the nodes.
    pub fn trapezoid(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n);
        let inner: f64 = values[1..self.n - 1].iter().sum();
        self.step() * (inner + 0.5 * (values[0] + values[self.n - 1]))
    }

    pub(crate) fn require_same(&self, other: &UniformGrid, op: &str) -> Result<()> {
        let tol = 1e-12 * (self.hi - self.lo);
        if self.n != other.n || (self.lo - other.lo).abs() > tol || (self.hi - other.hi).abs() > tol {
            return Err(Error::Config(format!("{op}: grids differ ({self:?} vs {other:?})")));
        }
        Ok(())
    }
}

/// Captured mass below which a density is flagged as truncated.
pub const MASS_DEFICIT_THRESHOLD: f64 = 0.999;

/// A probability density tabulated on a uniform grid.
///
/// `captured_mass` is the fraction of the underlying law that lies on the
/// grid; the trapezoid mass of `values` equals it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    pub grid: UniformGrid,
    pub values: Vec<f64>,
    pub captured_mass: f64,
    pub mass_deficit: bool,
}

impl GridDensity {
    /// Wraps tabulated values, rescaling them so their trapezoid mass equals
    /// `captured_mass`.
    pub fn new(grid: UniformGrid, mut values: Vec<f64>, captured_mass: f64) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::Config(format!(
                "density has {} values for a {}-node grid",
                values.len(),
                grid.n
            )));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::domain("GridDensity", "values must be finite and nonnegative"));
        }
        if !(captured_mass > 0.0 && captured_mass <= 1.0 + 1e-9) {
            return Err(Error::domain(
                "GridDensity",
                format!("captured mass must lie in (0, 1], got {captured_mass}"),
            ));
        }
        let mass = grid.trapezoid(&values);
        if !(mass > 0.0) {
            return Err(Error::domain("GridDensity", "values carry no mass"));
        }
        let scale = captured_mass / mass;
        values.iter_mut().for_each(|v| *v *= scale);
        Ok(Self {
            grid,
            values,
            captured_mass,
            mass_deficit: captured_mass < MASS_DEFICIT_THRESHOLD,
        })
    }

    /// Tabulates a density function as is; the captured mass is its
    /// trapezoid mass (capped at 1).
    pub fn from_fn<F: Fn(f64) -> f64>(grid: UniformGrid, f: F) -> Result<Self> {
        let values: Vec<f64> = grid.points().into_iter().map(f).collect();
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::domain("GridDensity", "values must be finite and nonnegative"));
        }
        let mass = grid.trapezoid(&values).min(1.0);
        Ok(Self {
            grid,
            values,
            captured_mass: mass,
            mass_deficit: mass < MASS_DEFICIT_THRESHOLD,
        })
    }

    pub fn mass(&self) -> f64 {
        self.grid.trapezoid(&self.values)
    }

    /// Writes an `x,value` CSV with a header row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", self.grid.point(i), v)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_is_exact_for_linear() {
        let g = UniformGrid::new(0.0, 2.0, 5).unwrap();
        let v: Vec<f64> = g.points().iter().map(|x| 3.0 * x + 1.0).collect();
        assert!((g.trapezoid(&v) - 8.0).abs() < 1e-14);
        assert_eq!(g.point(4), 2.0);
    }

    #[test]
    fn rejects_bad_grids_and_values() {
        assert!(UniformGrid::new(1.0, 1.0, 5).is_err());
        assert!(UniformGrid::new(0.0, 1.0, 1).is_err());
        let g = UniformGrid::new(0.0, 1.0, 3).unwrap();
        assert!(GridDensity::new(g, vec![1.0, -1.0, 1.0], 1.0).is_err());
        assert!(GridDensity::new(g, vec![1.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn renormalizes_to_captured_mass() {
        let g = UniformGrid::new(-1.0, 1.0, 11).unwrap();
        let d = GridDensity::new(g, vec![1.0; 11], 0.5).unwrap();
        assert!((d.mass() - 0.5).abs() < 1e-14);
        assert!(d.mass_deficit);
    }
}
