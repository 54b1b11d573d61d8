//! Isotropic α-stable heat kernels and the α → 2 transition.
//!
//! The crate evaluates the density `p^(α)(t, x)` of a rotationally invariant
//! α-stable process with characteristic function `exp(-t|ξ|^α)` (so that
//! `α = 2` is Brownian motion with variance `2t` per coordinate), builds
//! transition densities of `dX = b(X) dt + dL^(α)` on a space-time grid via
//! the parametrix series, and measures distances between invariant laws.
//!
//! Modules:
//!
//! * [`kernel_math`]: Γ/B, the Lévy-measure constant, bound profiles `ϱ`,
//!   the fractional Laplacian and inequality checkers.
//! * [`stable_density`]: densities, derivatives and α-differences.
//! * [`sampling`]: stable, subordinator and Euler–Maruyama samplers.
//! * [`drift_flow`]: the drift catalog, mollification and regularized flows.
//! * [`parametrix`]: grid construction of the SDE heat kernel.
//! * [`metrics`]: variation distances, transport costs and rate fits.

pub mod drift_flow;
pub mod error;
pub mod grid;
pub mod kernel_math;
pub mod metrics;
pub mod parametrix;
pub mod profile;
pub mod quad;
pub mod sampling;
pub mod stable_density;

pub use error::{Error, Result};
pub use grid::{GridDensity, UniformGrid};
pub use metrics::RateFit;
