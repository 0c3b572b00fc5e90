//! Intrinsic volumes of centered ellipsoids.
//!
//! Exact routes reduce everything to dual volumes: the mean width through
//! `Ṽ_{−1}` of the polar, the surface-area term through the polar relation
//! for intrinsic volumes, and ellipsoids of revolution through a mean width
//! of an auxiliary ellipsoid. General `V_k` in higher dimensions is only
//! available from the zonoid Monte Carlo estimator.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::dual::dual_volume_at;
use crate::error::{Error, Result};
use crate::geometry::{Ellipsoid, RevolutionSpec};
use crate::quadrature::{block_monte_carlo, check_mc, random_direction, McEstimate, QuadratureConfig, MAX_MC_DIM};
use crate::special::{binomial, kappa};

/// `V_1(E) = (n/κ_{n−1}) Ṽ_{−1}(E°)`.
pub fn v1(e: &Ellipsoid, cfg: &QuadratureConfig) -> Result<f64> {
    let n = e.dim();
    Ok(n as f64 / kappa(n - 1) * dual_volume_at(&e.polar(), -1.0, cfg)?)
}

/// `V_n(E) = κ_n a_1⋯a_n`.
pub fn v_n(e: &Ellipsoid) -> f64 {
    e.volume()
}

fn kz_factor(n: usize, i: usize) -> f64 {
    kappa(i) / (kappa(n) * kappa(n - i))
}

/// `V_i(E) = κ_i/(κ_n κ_{n−i}) V_n(E) V_{n−i}(E°)`, supported when the right
/// side reaches `V_1` or `V_n`, i.e. for `i ∈ {1, n − 1}`.
pub fn v_via_kz(e: &Ellipsoid, i: usize, cfg: &QuadratureConfig) -> Result<f64> {
    let n = e.dim();
    if i == 0 || i >= n {
        return Err(Error::InvalidArgument(format!(
            "intrinsic index must lie in 1..{n}, got {i}"
        )));
    }
    let polar = e.polar();
    if n - i == 1 {
        return Ok(kz_factor(n, i) * e.volume() * v1(&polar, cfg)?);
    }
    if i == 1 {
        let polar_surface = kz_factor(n, n - 1) * polar.volume() * v1(e, cfg)?;
        return Ok(kz_factor(n, 1) * e.volume() * polar_surface);
    }
    Err(Error::Unsupported(format!(
        "V_{i} through the polar relation in dimension {n}"
    )))
}

/// `(V_1, V_2, V_3)` of an ellipsoid in ℝ³ from `Ṽ_4`, `Ṽ_{−1}` and `Ṽ_3`.
pub fn v3_triple(e: &Ellipsoid, cfg: &QuadratureConfig) -> Result<[f64; 3]> {
    if e.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: e.dim(),
        });
    }
    let v3 = dual_volume_at(e, 3.0, cfg)?;
    let v1 = 4.0 * dual_volume_at(e, 4.0, cfg)? / v3;
    let v2 = 9.0 / (8.0 * std::f64::consts::PI) * v3 * dual_volume_at(e, -1.0, cfg)?;
    Ok([v1, v2, v3])
}

/// Exact `V_k` of an ellipsoid of revolution `(a, …, a, b)`:
/// `C(n,k) κ_{n−1}/(n κ_{n−k}) · a^k · V_1(Q B)`,
/// `Q = diag(b/a ×k, 1 ×(n−k))`.
pub fn v_k_revolution(spec: &RevolutionSpec, k: usize, cfg: &QuadratureConfig) -> Result<f64> {
    let n = spec.dim;
    if k == n {
        return spec.ellipsoid().map(|e| e.volume());
    }
    let shape = spec.shape_ellipsoid(k)?;
    let c = binomial(n, k) * kappa(n - 1) / (n as f64 * kappa(n - k));
    Ok(c * spec.a.powi(k as i32) * v1(&shape, cfg)?)
}

/// `V_k` of the unit-volume ellipsoid `(a, …, a, a^{1−n})`.
pub fn unit_volume_profile(n: usize, k: usize, a: f64, cfg: &QuadratureConfig) -> Result<f64> {
    v_k_revolution(&RevolutionSpec::unit_volume(n, a)?, k, cfg)
}

/// Returns the spec if `e` has `n − 1` equal semi-axes.
pub fn as_revolution(e: &Ellipsoid) -> Option<RevolutionSpec> {
    let axes = e.semi_axes();
    let n = axes.len();
    let same = |x: &[f64]| x.iter().all(|a| (a - x[0]).abs() <= 1e-12 * x[0]);
    if same(&axes[..n - 1]) {
        Some(RevolutionSpec { dim: n, a: axes[0], b: axes[n - 1] })
    } else if same(&axes[1..]) {
        Some(RevolutionSpec { dim: n, a: axes[1], b: axes[0] })
    } else {
        None
    }
}

/// Exact `V_k(E)` wherever one of the deterministic routes applies.
pub fn intrinsic_volume(e: &Ellipsoid, k: usize, cfg: &QuadratureConfig) -> Result<f64> {
    let n = e.dim();
    match k {
        0 => Ok(1.0),
        k if k == n => Ok(v_n(e)),
        1 => v1(e, cfg),
        k if k == n - 1 => v_via_kz(e, k, cfg),
        k if k < n => match as_revolution(e) {
            Some(spec) => v_k_revolution(&spec, k, cfg),
            None => Err(Error::Unsupported(format!(
                "deterministic V_{k} of a general ellipsoid in dimension {n}; use the Monte Carlo estimator"
            ))),
        },
        _ => Err(Error::InvalidArgument(format!(
            "intrinsic index {k} exceeds dimension {n}"
        ))),
    }
}

fn uniform_in_ball(rng: &mut ChaCha8Rng, y: &mut [f64]) {
    random_direction(rng, y);
    let r = rng.random::<f64>().powf(1.0 / y.len() as f64);
    y.iter_mut().for_each(|t| *t *= r);
}

/// |det| of an n×n row-major matrix by Gaussian elimination with partial pivoting.
fn abs_det(m: &mut [[f64; MAX_MC_DIM]; MAX_MC_DIM], n: usize) -> f64 {
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| m[r][col].abs().total_cmp(&m[s][col].abs()))
            .expect("non-empty range");
        if m[pivot][col] == 0.0 {
            return 0.0;
        }
        m.swap(col, pivot);
        let p = m[col][col];
        det *= p;
        for r in col + 1..n {
            let factor = m[r][col] / p;
            for c in col + 1..n {
                m[r][c] -= factor * m[col][c];
            }
        }
    }
    det.abs()
}

/// Zonoid estimator of `V_k(E)`:
/// `V_k = C(n,k) (n+1)^n κ_n^n/(2κ_{n−1})^k · 𝔼|det(y_1,…,y_n)|`
/// with `y_1…y_k` uniform in `E` and `y_{k+1}…y_n` uniform in the unit ball.
pub fn v_k_zonoid_mc(e: &Ellipsoid, k: usize, samples: usize, seed: u64) -> Result<McEstimate> {
    let n = e.dim();
    check_mc(n, samples, 100_000)?;
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "intrinsic index must lie in 1..{n}, got {k}"
        )));
    }
    let nf = n as f64;
    let factorial: f64 = (1..=n).map(|j| j as f64).product();
    let c_nk = 2f64.powi(k as i32) * binomial(n, k)
        / (factorial * kappa(n - k) * kappa(n - 1).powi((n - k) as i32));
    let scale = c_nk * (nf + 1.0).powi(n as i32) * kappa(n).powi(n as i32)
        / (2.0 * kappa(n - 1)).powi(k as i32);
    let axes = e.semi_axes().to_vec();
    let mut est = block_monte_carlo(samples, seed, 1, scale, |rng, out| {
        let mut m = [[0.0; MAX_MC_DIM]; MAX_MC_DIM];
        let mut y = [0.0; MAX_MC_DIM];
        for col in 0..n {
            uniform_in_ball(rng, &mut y[..n]);
            for row in 0..n {
                let stretch = if col < k { axes[row] } else { 1.0 };
                m[row][col] = stretch * y[row];
            }
        }
        out[0] = abs_det(&mut m, n);
    });
    Ok(est.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn e(axes: &[f64]) -> Ellipsoid {
        Ellipsoid::new(axes.to_vec()).unwrap()
    }

    #[test]
    fn mean_width_of_balls() {
        assert!((v1(&Ellipsoid::ball(3, 1.0).unwrap(), &cfg()).unwrap() - 4.0).abs() < 1e-11);
        assert!((v1(&Ellipsoid::ball(2, 1.0).unwrap(), &cfg()).unwrap() - PI).abs() < 1e-11);
    }

    #[test]
    fn volumes() {
        assert!((v_n(&e(&[1.0, 2.0, 3.0])) - 8.0 * PI).abs() < 1e-13);
        assert!((v_n(&e(&[2.0, 3.0])) - 6.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn kz_route() {
        let ball = Ellipsoid::ball(3, 1.0).unwrap();
        assert!((v_via_kz(&ball, 2, &cfg()).unwrap() - 2.0 * PI).abs() < 1e-11);
        let disk = Ellipsoid::ball(2, 1.0).unwrap();
        assert!((v_via_kz(&disk, 1, &cfg()).unwrap() - PI).abs() < 1e-11);
        let el = e(&[0.8, 1.2, 1.5, 2.0]);
        assert!(matches!(v_via_kz(&el, 2, &cfg()), Err(Error::Unsupported(_))));
        let a = v_via_kz(&el, 1, &cfg()).unwrap();
        assert!((a - v1(&el, &cfg()).unwrap()).abs() < 1e-12 * a);
    }

    #[test]
    fn ellipse_perimeter() {
        // V_1 of an ellipse is half its perimeter; (2, 1) has perimeter 9.688448220547675.
        let v = v1(&e(&[2.0, 1.0]), &cfg()).unwrap();
        assert!((v - 9.688_448_220_547_675 / 2.0).abs() < 1e-10, "{v}");
    }

    #[test]
    fn triple_homogeneity() {
        let lambda = 1.7;
        let t = v3_triple(&Ellipsoid::ball(3, lambda).unwrap(), &cfg()).unwrap();
        let expected = [4.0 * lambda, 2.0 * PI * lambda.powi(2), 4.0 * PI / 3.0 * lambda.powi(3)];
        for (x, y) in t.iter().zip(expected) {
            assert!((x - y).abs() < 1e-10 * y);
        }
        assert!(v3_triple(&e(&[1.0, 2.0]), &cfg()).is_err());
    }

    #[test]
    fn revolution_ball_values() {
        let spec = RevolutionSpec::new(3, 1.0, 1.0).unwrap();
        assert!((v_k_revolution(&spec, 1, &cfg()).unwrap() - 4.0).abs() < 1e-11);
        assert!((v_k_revolution(&spec, 2, &cfg()).unwrap() - 2.0 * PI).abs() < 1e-11);
    }

    #[test]
    fn revolution_detection() {
        assert!(as_revolution(&e(&[1.0, 1.0, 2.0])).is_some());
        assert!(as_revolution(&e(&[1.0, 2.0, 2.0])).is_some());
        assert!(as_revolution(&e(&[1.0, 2.0, 3.0])).is_none());
        let el = e(&[1.0, 2.0, 2.0, 2.0]);
        let v = intrinsic_volume(&el, 2, &cfg()).unwrap();
        assert!(v > 0.0);
        assert!(intrinsic_volume(&e(&[1.0, 2.0, 3.0, 4.0]), 2, &cfg()).is_err());
    }

    #[test]
    fn determinant() {
        let mut m = [[0.0; MAX_MC_DIM]; MAX_MC_DIM];
        m[0][..3].copy_from_slice(&[0.0, 2.0, 1.0]);
        m[1][..3].copy_from_slice(&[1.0, 0.0, 0.0]);
        m[2][..3].copy_from_slice(&[3.0, 1.0, 4.0]);
        // det = −(1·(2·4 − 1·1)) = −7
        assert!((abs_det(&mut m, 3) - 7.0).abs() < 1e-14);
    }
}
