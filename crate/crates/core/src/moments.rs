//! The gap function between two ellipsoids, its polynomial reduction and
//! the counting machinery behind uniqueness from vanishing moments.

use serde::{Deserialize, Serialize};

use crate::dual::{moment_prefactor, profile_remainder, DualOrder};
use crate::error::{Error, Result};
use crate::geometry::Ellipsoid;
use crate::quadrature::{integrate_half_line, QuadratureConfig};

/// Relative tolerance under which two axis products count as equal.
pub const EQUAL_VOLUME_TOLERANCE: f64 = 1e-10;

/// Relative magnitude below which a gap coefficient is treated as zero.
pub const COEFFICIENT_CUTOFF: f64 = 1e-14;

/// A pair of ellipsoids of the same dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentGap {
    e1: Ellipsoid,
    e2: Ellipsoid,
    equal_volume: bool,
}

impl MomentGap {
    pub fn new(e1: &Ellipsoid, e2: &Ellipsoid) -> Result<Self> {
        check_dims(e1, e2)?;
        let (p1, p2) = (e1.axis_product(), e2.axis_product());
        let equal_volume = (p1 - p2).abs() <= EQUAL_VOLUME_TOLERANCE * p1.max(p2);
        Ok(Self {
            e1: e1.clone(),
            e2: e2.clone(),
            equal_volume,
        })
    }

    pub fn first(&self) -> &Ellipsoid {
        &self.e1
    }

    pub fn second(&self) -> &Ellipsoid {
        &self.e2
    }

    pub fn equal_volume(&self) -> bool {
        self.equal_volume
    }

    pub fn at(&self, u: f64) -> f64 {
        gap_unchecked(&self.e1, &self.e2, u)
    }

    pub fn polynomial(&self, constraint: GapConstraint) -> Result<GapPolynomial> {
        gap_polynomial_constrained(&self.e1, &self.e2, constraint)
    }

    pub fn moment(&self, order: f64, cfg: &QuadratureConfig) -> Result<f64> {
        moment_of_gap(&self.e1, &self.e2, order, cfg)
    }
}

fn check_dims(e1: &Ellipsoid, e2: &Ellipsoid) -> Result<()> {
    if e1.dim() != e2.dim() {
        return Err(Error::DimensionMismatch {
            expected: e1.dim(),
            got: e2.dim(),
        });
    }
    Ok(())
}

/// `F(u) = Π(1 + u²/a_j²)^{−1/2} − Π(1 + u²/b_j²)^{−1/2}`.
///
/// The evaluation is exactly antisymmetric in the pair and keeps full
/// relative accuracy near `u = 0`.
pub fn gap(e1: &Ellipsoid, e2: &Ellipsoid, u: f64) -> Result<f64> {
    check_dims(e1, e2)?;
    if !(u >= 0.0) || !u.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "gap argument must be finite and non-negative, got {u}"
        )));
    }
    Ok(gap_unchecked(e1, e2, u))
}

fn gap_unchecked(e1: &Ellipsoid, e2: &Ellipsoid, u: f64) -> f64 {
    let t = u * u;
    let log_profile = |e: &Ellipsoid| -> f64 {
        -0.5 * e
            .semi_axes()
            .iter()
            .map(|a| (t / (a * a)).ln_1p())
            .sum::<f64>()
    };
    let (l1, l2) = (log_profile(e1), log_profile(e2));
    // e^{l1} − e^{l2} = 2 e^{(l1+l2)/2} sinh((l1−l2)/2)
    2.0 * (0.5 * (l1 + l2)).exp() * (0.5 * (l1 - l2)).sinh()
}

/// Optional constraints applied when forming the gap polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GapConstraint {
    #[default]
    None,
    /// Equal `Ṽ_{−2}` and equal `Ṽ_n`: the linear and top coefficients
    /// vanish and are set to exactly zero.
    AnchoredMinus2,
}

/// `Σ_{m=1}^n c_m t^m` with `c_m = e_m({a_j^{−2}}) − e_m({b_j^{−2}})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapPolynomial {
    /// Coefficients by power of `t`; index 0 is always zero.
    coeffs: Vec<f64>,
    /// Per-coefficient magnitudes `max(e_m(a), e_m(b))`.
    scales: Vec<f64>,
    constraint: GapConstraint,
}

impl GapPolynomial {
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn constraint(&self) -> GapConstraint {
        self.constraint
    }

    pub fn degree_bound(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> f64 {
        *self.coeffs.last().expect("non-empty coefficients")
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    /// True when every coefficient lies below the cutoff.
    pub fn is_zero(&self) -> bool {
        self.coeffs
            .iter()
            .zip(&self.scales)
            .all(|(c, s)| c.abs() <= COEFFICIENT_CUTOFF * s)
    }
}

/// Elementary symmetric polynomials `e_0..e_n` by incremental product.
pub fn elementary_symmetric(values: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; values.len() + 1];
    e[0] = 1.0;
    for (j, x) in values.iter().enumerate() {
        for m in (1..=j + 1).rev() {
            e[m] += x * e[m - 1];
        }
    }
    e
}

pub fn gap_polynomial(e1: &Ellipsoid, e2: &Ellipsoid) -> Result<GapPolynomial> {
    gap_polynomial_constrained(e1, e2, GapConstraint::None)
}

pub fn gap_polynomial_constrained(
    e1: &Ellipsoid,
    e2: &Ellipsoid,
    constraint: GapConstraint,
) -> Result<GapPolynomial> {
    check_dims(e1, e2)?;
    let inv_sq = |e: &Ellipsoid| -> Vec<f64> { e.semi_axes().iter().map(|a| 1.0 / (a * a)).collect() };
    let ea = elementary_symmetric(&inv_sq(e1));
    let eb = elementary_symmetric(&inv_sq(e2));
    let mut coeffs: Vec<f64> = ea.iter().zip(&eb).map(|(x, y)| x - y).collect();
    let scales: Vec<f64> = ea.iter().zip(&eb).map(|(x, y)| x.max(*y)).collect();
    coeffs[0] = 0.0;
    if constraint == GapConstraint::AnchoredMinus2 {
        let n = coeffs.len() - 1;
        for m in [1, n] {
            if coeffs[m].abs() > EQUAL_VOLUME_TOLERANCE * scales[m] {
                return Err(Error::InvalidArgument(format!(
                    "anchored gap polynomial needs c_{m} = 0, got {}",
                    coeffs[m]
                )));
            }
            coeffs[m] = 0.0;
        }
    }
    Ok(GapPolynomial {
        coeffs,
        scales,
        constraint,
    })
}

/// Outcome of counting positive roots of a gap polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RootCount {
    /// The polynomial vanishes identically.
    Zero,
    Finite {
        roots: usize,
        /// Some non-zero coefficient fell below the cutoff and was dropped.
        truncated: bool,
    },
}

impl RootCount {
    pub fn roots(self) -> Option<usize> {
        match self {
            RootCount::Zero => None,
            RootCount::Finite { roots, .. } => Some(roots),
        }
    }
}

/// Number of distinct roots in `(0, ∞)` by a Sturm sequence.
pub fn count_positive_roots(p: &GapPolynomial) -> RootCount {
    let mut truncated = false;
    let mut c: Vec<f64> = p
        .coeffs
        .iter()
        .zip(&p.scales)
        .map(|(&c, &s)| {
            if c.abs() <= COEFFICIENT_CUTOFF * s {
                truncated |= c != 0.0;
                0.0
            } else {
                c
            }
        })
        .collect();
    while c.last() == Some(&0.0) {
        c.pop();
    }
    if c.is_empty() {
        return RootCount::Zero;
    }
    // t = 0 is not a positive root: divide out its multiplicity.
    let low = c.iter().position(|&x| x != 0.0).unwrap_or(0);
    c.drain(..low);
    RootCount::Finite {
        roots: sturm_count(&c),
        truncated,
    }
}

/// Distinct roots in `(0, ∞)` of a polynomial with non-zero constant term.
fn sturm_count(p: &[f64]) -> usize {
    if p.len() < 2 {
        return 0;
    }
    let mut seq: Vec<Vec<f64>> = vec![normalized(p.to_vec())];
    let deriv: Vec<f64> = p.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect();
    seq.push(normalized(deriv));
    loop {
        let k = seq.len();
        let r = remainder(&seq[k - 2], &seq[k - 1]);
        if r.is_empty() {
            break;
        }
        seq.push(normalized(r.into_iter().map(|x| -x).collect()));
        if seq.last().map_or(0, Vec::len) == 1 {
            break;
        }
    }
    let at_zero: Vec<f64> = seq.iter().map(|s| s[0]).collect();
    let at_inf: Vec<f64> = seq.iter().map(|s| *s.last().unwrap()).collect();
    sign_variations(&at_zero).saturating_sub(sign_variations(&at_inf))
}

fn normalized(mut p: Vec<f64>) -> Vec<f64> {
    let m = p.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if m > 0.0 {
        p.iter_mut().for_each(|x| *x /= m);
    }
    p
}

/// Remainder of `a` divided by `b` (low-to-high coefficients), with
/// relative cancellation residue trimmed.
fn remainder(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let lead = b[db];
    while r.len() > db {
        let q = r[r.len() - 1] / lead;
        let shift = r.len() - 1 - db;
        for (j, bj) in b.iter().enumerate() {
            r[shift + j] -= q * bj;
        }
        r.pop();
    }
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    while let Some(&last) = r.last() {
        if last.abs() <= 1e-12 * scale {
            r.pop();
        } else {
            break;
        }
    }
    r
}

fn sign_variations(values: &[f64]) -> usize {
    let mut last = 0.0;
    let mut count = 0;
    for &v in values.iter().filter(|v| **v != 0.0) {
        if last != 0.0 && (v > 0.0) != (last > 0.0) {
            count += 1;
        }
        last = v;
    }
    count
}

/// `∫₀^∞ u^{i−1} F(u) du`, continued analytically outside `(0, n)` by
/// removing the same expansion terms as the dual-volume integral. Equals
/// `(Ṽ_i(E1) − Ṽ_i(E2)) / moment_prefactor(n, i)`.
pub fn moment_of_gap(e1: &Ellipsoid, e2: &Ellipsoid, order: f64, cfg: &QuadratureConfig) -> Result<f64> {
    check_dims(e1, e2)?;
    let n = e1.dim();
    let ord = DualOrder::new(order, n)?;
    if ord.regime().is_point() {
        return Err(Error::Unsupported(format!(
            "the gap moment has no finite integral form at the closed-form order {}",
            ord.value()
        )));
    }
    let i = ord.value();
    let sub = ord.regime().subtractions();
    let nf = n as f64;

    // Rescale so that the split between the two evaluation forms sits at 1.
    let all = e1.semi_axes().iter().chain(e2.semi_axes());
    let (lo, hi) = all.fold((f64::INFINITY, 0.0f64), |(lo, hi), &a| (lo.min(a), hi.max(a)));
    let c = (lo * hi).sqrt();

    let inv_sq = |e: &Ellipsoid| -> Vec<f64> { e.semi_axes().iter().map(|a| c * c / (a * a)).collect() };
    let sq = |e: &Ellipsoid| -> Vec<f64> { e.semi_axes().iter().map(|a| a * a / (c * c)).collect() };
    let (w1, w2) = (inv_sq(e1), inv_sq(e2));
    let (s1, s2) = (sq(e1), sq(e2));
    let p1 = e1.axis_product() / c.powi(n as i32);
    let p2 = e2.axis_product() / c.powi(n as i32);
    let d_alpha1 = -0.5 * (w1.iter().sum::<f64>() - w2.iter().sum::<f64>());
    let d_beta = [p1 - p2, -0.5 * (p1 * s1.iter().sum::<f64>() - p2 * s2.iter().sum::<f64>())];
    let m0 = sub.zero.max(1);

    let integrand = |v: f64| -> f64 {
        let t = v * v;
        let g = if v < 1.0 {
            let mut g = profile_remainder(&w1, t, m0) - profile_remainder(&w2, t, m0);
            let mut pw = v.powf(-nf);
            for db in &d_beta[..sub.tail] {
                g -= db * pw;
                pw /= t;
            }
            g
        } else {
            let s = 1.0 / t;
            let mut g = v.powf(-nf) * (p1 * profile_remainder(&s1, s, sub.tail) - p2 * profile_remainder(&s2, s, sub.tail));
            if sub.zero == 2 {
                g -= d_alpha1 * t;
            }
            g
        };
        v.powf(i - 1.0) * g
    };

    let mut endpoint = i - 1.0 + 2.0 * m0 as f64;
    if sub.tail > 0 {
        endpoint = endpoint.min(i - 1.0 - nf);
    }
    let mut tail = i - 1.0 - nf - 2.0 * sub.tail as f64;
    if sub.zero == 2 {
        tail = tail.max(i + 1.0);
    }
    let r = integrate_half_line(integrand, endpoint, tail, cfg)?;
    Ok(c.powf(i) * r.value)
}

/// `true` when the number of distinct vanishing moments exceeds the number
/// of sign changes of the integrand, which forces it to vanish identically.
pub fn vanishing_moments_certificate(sign_changes: usize, zero_moment_orders: &[f64]) -> Result<bool> {
    for (j, a) in zero_moment_orders.iter().enumerate() {
        if !a.is_finite() {
            return Err(Error::InvalidArgument(format!("order {a} is not finite")));
        }
        if zero_moment_orders[..j].contains(a) {
            return Err(Error::InvalidArgument(format!("order {a} repeated")));
        }
    }
    Ok(zero_moment_orders.len() > sign_changes)
}

/// `(Ṽ_i(E1) − Ṽ_i(E2)) / moment_prefactor(n, i)` from the dual-volume engine.
pub fn moment_from_dual_volumes(e1: &Ellipsoid, e2: &Ellipsoid, order: f64, cfg: &QuadratureConfig) -> Result<f64> {
    check_dims(e1, e2)?;
    let v1 = crate::dual::dual_volume_at(e1, order, cfg)?;
    let v2 = crate::dual::dual_volume_at(e2, order, cfg)?;
    Ok((v1 - v2) / moment_prefactor(e1.dim(), order))
}
