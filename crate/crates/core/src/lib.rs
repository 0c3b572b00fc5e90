//! Dual volumes and intrinsic volumes of centered ellipsoids.
//!
//! The crate computes dual volumes `Ṽ_i` of any supported real order through
//! one-dimensional moment integrals, derives intrinsic volumes from them, and
//! recovers ellipsoids (up to isometry) from prescribed volume data.
//!
//! Module map:
//!
//! * [`geometry`] – [`Ellipsoid`], polar duality, support/radial/Minkowski functionals.
//! * [`special`] – Gamma function, unit-ball volumes, binomials.
//! * [`quadrature`] – adaptive Gauss–Kronrod integration on `[0, ∞)` and a seeded
//!   Monte Carlo sphere integrator used as an oracle.
//! * [`dual`] – regime dispatch for `Ṽ_i`, the polar relation, fractional derivatives,
//!   the dual Steiner polynomial.
//! * [`intrinsic`] – `V_1`, `V_n`, the polar relation for intrinsic volumes, the ℝ³
//!   triple, the zonoid Monte Carlo estimator and ellipsoids of revolution.
//! * [`moments`] – the gap function between two ellipsoids, its polynomial reduction
//!   and Sturm root counting.
//! * [`inverse`] – multistart Levenberg–Marquardt recovery and the revolution solvers.

pub mod dual;
pub mod error;
pub mod geometry;
pub mod intrinsic;
pub mod inverse;
pub mod moments;
pub mod quadrature;
pub mod special;

pub use dual::{DualOrder, Regime};
pub use error::{Error, Result};
pub use geometry::{Ellipsoid, RevolutionSpec};
pub use quadrature::{QuadratureConfig, QuadratureResult};
