//! Centered ellipsoids in canonical (sorted) form and their classical functionals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::kappa;

/// Smallest semi-axis accepted at construction.
pub const MIN_SEMI_AXIS: f64 = 1e-300;

/// Relative tolerance for congruence comparisons.
pub const CONGRUENCE_TOLERANCE: f64 = 1e-9;

/// A centered ellipsoid `{x : Σ x_j²/a_j² ≤ 1}` with its semi-axes sorted in
/// non-increasing order. Two ellipsoids are congruent iff their canonical
/// semi-axis vectors coincide.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Ellipsoid {
    semi_axes: Vec<f64>,
}

impl Ellipsoid {
    pub fn new(semi_axes: impl Into<Vec<f64>>) -> Result<Self> {
        let mut semi_axes = semi_axes.into();
        if semi_axes.len() < 2 {
            return Err(Error::InvalidEllipsoid(format!(
                "dimension must be at least 2, got {}",
                semi_axes.len()
            )));
        }
        if let Some(bad) = semi_axes
            .iter()
            .find(|a| !a.is_finite() || **a <= MIN_SEMI_AXIS)
        {
            return Err(Error::InvalidEllipsoid(format!(
                "semi-axis {bad} is not a finite positive number"
            )));
        }
        semi_axes.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { semi_axes })
    }

    /// The Euclidean unit ball of dimension `dim`.
    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        Self::new(vec![radius; dim])
    }

    pub fn dim(&self) -> usize {
        self.semi_axes.len()
    }

    /// Semi-axes, largest first.
    pub fn semi_axes(&self) -> &[f64] {
        &self.semi_axes
    }

    pub fn axis_product(&self) -> f64 {
        self.semi_axes.iter().product()
    }

    /// Volume κ_n · a_1 ⋯ a_n.
    pub fn volume(&self) -> f64 {
        kappa(self.dim()) * self.axis_product()
    }

    /// The polar body, again a centered ellipsoid with reciprocal semi-axes.
    /// Its canonical frame lists the coordinates of `self` in reverse order.
    pub fn polar(&self) -> Self {
        let mut semi_axes: Vec<f64> = self.semi_axes.iter().map(|a| 1.0 / a).collect();
        semi_axes.reverse();
        Self { semi_axes }
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.semi_axes.iter().map(|a| a * factor).collect::<Vec<_>>())
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// ‖x‖_E = (Σ x_j²/a_j²)^{1/2}.
    pub fn minkowski_functional(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.minkowski_unchecked(x))
    }

    pub(crate) fn minkowski_unchecked(&self, x: &[f64]) -> f64 {
        self.semi_axes
            .iter()
            .zip(x)
            .map(|(a, xj)| (xj / a) * (xj / a))
            .sum::<f64>()
            .sqrt()
    }

    /// h_E(x) = (Σ a_j² x_j²)^{1/2}.
    pub fn support_function(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self
            .semi_axes
            .iter()
            .zip(x)
            .map(|(a, xj)| (a * xj) * (a * xj))
            .sum::<f64>()
            .sqrt())
    }

    /// ρ_E(θ) = 1/‖θ‖_E for a unit vector θ.
    pub fn radial_function(&self, theta: &[f64]) -> Result<f64> {
        self.check_dim(theta)?;
        let norm = theta.iter().map(|t| t * t).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "direction must be a unit vector, |θ| = {norm}"
            )));
        }
        Ok(1.0 / self.minkowski_unchecked(theta))
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        Ok(self.minkowski_functional(x)? <= 1.0)
    }

    /// Congruence up to isometry, comparing canonical semi-axes with relative
    /// tolerance [`CONGRUENCE_TOLERANCE`].
    pub fn is_congruent(&self, other: &Self) -> bool {
        self.max_relative_axis_error(other)
            .is_some_and(|e| e <= CONGRUENCE_TOLERANCE)
    }

    /// Largest relative deviation between corresponding canonical semi-axes,
    /// `None` when the dimensions differ.
    pub fn max_relative_axis_error(&self, other: &Self) -> Option<f64> {
        if self.dim() != other.dim() {
            return None;
        }
        Some(
            self.semi_axes
                .iter()
                .zip(&other.semi_axes)
                .map(|(a, b)| (a - b).abs() / b)
                .fold(0.0, f64::max),
        )
    }
}

impl TryFrom<Vec<f64>> for Ellipsoid {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Ellipsoid> for Vec<f64> {
    fn from(e: Ellipsoid) -> Self {
        e.semi_axes
    }
}

/// An ellipsoid of revolution in ℝⁿ with semi-axes `(a, …, a, b)`, the
/// equatorial axis `a` repeated `n − 1` times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RevolutionSpec {
    pub dim: usize,
    pub a: f64,
    pub b: f64,
}

impl RevolutionSpec {
    pub fn new(dim: usize, a: f64, b: f64) -> Result<Self> {
        let spec = Self { dim, a, b };
        spec.ellipsoid()?;
        Ok(spec)
    }

    /// The unit-volume member `(a, …, a, a^{1−n})`.
    pub fn unit_volume(dim: usize, a: f64) -> Result<Self> {
        Self::new(dim, a, a.powi(1 - dim as i32))
    }

    pub fn ellipsoid(&self) -> Result<Ellipsoid> {
        if self.dim < 2 {
            return Err(Error::InvalidEllipsoid(format!(
                "dimension must be at least 2, got {}",
                self.dim
            )));
        }
        let mut axes = vec![self.a; self.dim - 1];
        axes.push(self.b);
        Ellipsoid::new(axes)
    }

    /// The ellipsoid `Q·B` with `Q = diag(b/a, …, b/a, 1, …, 1)`, the ratio
    /// occupying the first `k` slots.
    pub fn shape_ellipsoid(&self, k: usize) -> Result<Ellipsoid> {
        if k == 0 || k >= self.dim {
            return Err(Error::InvalidArgument(format!(
                "k must lie in 1..{}, got {k}",
                self.dim - 1
            )));
        }
        let ratio = self.b / self.a;
        let axes: Vec<f64> = (0..self.dim)
            .map(|j| if j < k { ratio } else { 1.0 })
            .collect();
        Ellipsoid::new(axes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(axes: &[f64]) -> Ellipsoid {
        Ellipsoid::new(axes.to_vec()).unwrap()
    }

    #[test]
    fn construction_sorts_and_validates() {
        assert_eq!(e(&[1.0, 3.0, 2.0]).semi_axes(), &[3.0, 2.0, 1.0]);
        assert!(Ellipsoid::new(vec![3.0]).is_err());
        assert!(Ellipsoid::new(vec![1.0, 0.0]).is_err());
        assert!(Ellipsoid::new(vec![1.0, -2.0]).is_err());
        assert!(Ellipsoid::new(vec![1.0, f64::NAN]).is_err());
        assert!(Ellipsoid::new(vec![1.0, f64::INFINITY]).is_err());
        assert!(Ellipsoid::new(vec![1.0, 1e-301]).is_err());
    }

    #[test]
    fn functionals() {
        // Semi-axes are stored sorted, so coordinates refer to the sorted order.
        let el = e(&[3.0, 2.0, 1.0]);
        assert_eq!(el.minkowski_functional(&[0.0, 0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(el.minkowski_functional(&[0.0, 2.0, 0.0]).unwrap(), 1.0);
        assert_eq!(e(&[2.0, 2.0]).minkowski_functional(&[3.0, 4.0]).unwrap(), 2.5);
        assert_eq!(el.support_function(&[1.0, 0.0, 0.0]).unwrap(), 3.0);
        assert!((e(&[1.0, 1.0]).support_function(&[0.6, 0.8]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(el.radial_function(&[1.0, 0.0, 0.0]).unwrap(), 3.0);
        assert!(matches!(
            el.minkowski_functional(&[1.0, 0.0]),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
        assert!(el.radial_function(&[1.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn radial_function_matches_boundary_bisection() {
        let el = e(&[2.0, 1.0]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let theta = [s, s];
        let rho = el.radial_function(&theta).unwrap();
        let (mut lo, mut hi) = (0.0, 10.0);
        for _ in 0..200 {
            let mid: f64 = 0.5 * (lo + hi);
            if el.contains(&[mid * s, mid * s]).unwrap() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((rho - (8.0f64 / 5.0).sqrt()).abs() < 1e-14);
        assert!((rho - lo).abs() < 1e-12);
    }

    #[test]
    fn polar_is_an_involution() {
        let el = e(&[1.0, 2.0, 4.0]);
        assert_eq!(el.polar().semi_axes(), &[1.0, 0.5, 0.25]);
        assert_eq!(el.polar().polar(), el);
        let ball = Ellipsoid::ball(4, 1.0).unwrap();
        assert_eq!(ball.polar(), ball);
    }

    #[test]
    fn congruence_is_permutation_invariant() {
        assert!(e(&[1.0, 2.0]).is_congruent(&e(&[2.0, 1.0])));
        assert!(!e(&[1.0, 2.0]).is_congruent(&e(&[1.0, 2.001])));
        assert!(!e(&[1.0, 2.0]).is_congruent(&e(&[1.0, 2.0, 3.0])));
    }

    #[test]
    fn revolution_shapes() {
        let spec = RevolutionSpec::new(3, 1.0, 2.0).unwrap();
        assert_eq!(spec.ellipsoid().unwrap().semi_axes(), &[2.0, 1.0, 1.0]);
        assert_eq!(spec.shape_ellipsoid(2).unwrap().semi_axes(), &[2.0, 2.0, 1.0]);
        assert!(spec.shape_ellipsoid(3).is_err());
        let unit = RevolutionSpec::unit_volume(4, 1.2).unwrap();
        assert!((unit.ellipsoid().unwrap().axis_product() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn try_from_vec_validates() {
        let el = Ellipsoid::try_from(vec![1.0, 2.0]).unwrap();
        assert_eq!(el.semi_axes(), &[2.0, 1.0]);
        assert!(Ellipsoid::try_from(vec![1.0]).is_err());
    }
}
