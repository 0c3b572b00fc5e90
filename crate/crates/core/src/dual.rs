//! Dual volumes `Ṽ_i(E) = (1/n) ∫_{S^{n−1}} ρ_E^i dθ` of centered ellipsoids.
//!
//! For `0 < i < n` the dual volume is a moment of the profile
//! `φ(u²) = Π (1 + u²/a_j²)^{−1/2}`:
//!
//! ```text
//! Ṽ_i = 4π^{n/2} / (n Γ((n−i)/2) Γ(i/2)) · ∫₀^∞ u^{i−1} φ(u²) du
//! ```
//!
//! Outside `(0, n)` the same prefactor multiplies the integral of
//! `u^{i−1}` times the profile with leading terms of its expansion at 0
//! (orders below 0) or at ∞ (orders above n) removed. The number of removed
//! terms is fixed by the [`Regime`]. The points `−2`, `n` and `n + 2` have
//! closed forms.
//!
//! Each moment integral is evaluated as three pieces: a convergent power
//! series on `[0, a_min/2]`, an adaptive Kronrod integral on
//! `[a_min/2, 2 a_max]` in the logarithmic variable, and a convergent series
//! in `1/u²` on `[2 a_max, ∞)`. The series pieces carry the poles of the
//! moment integral analytically, so orders arbitrarily close to a regime
//! boundary stay accurate once the Gamma prefactor cancels the pole.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Ellipsoid;
use crate::quadrature::{
    integrate_half_line, integrate_interval, mc_sphere_integral_many, McEstimate,
    QuadratureConfig,
};
use crate::special::{binomial, kappa, recip_gamma};

/// Orders closer than this to `−2`, `n` or `n + 2` use the closed forms.
pub const SNAP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    /// `0 < i < n`
    Core,
    /// `−2 < i < 0`
    Low,
    /// `n < i < n + 2`
    High,
    /// `−4 < i < −2`
    Low2,
    /// `n + 2 < i < n + 4`
    High2,
    PointMinus2,
    PointN,
    PointNPlus2,
}

impl Regime {
    pub const ALL: [Regime; 8] = [
        Regime::Low2,
        Regime::PointMinus2,
        Regime::Low,
        Regime::Core,
        Regime::PointN,
        Regime::High,
        Regime::PointNPlus2,
        Regime::High2,
    ];

    pub fn is_point(self) -> bool {
        matches!(
            self,
            Regime::PointMinus2 | Regime::PointN | Regime::PointNPlus2
        )
    }

    /// Terms of the expansion at 0 and at ∞ removed from the profile.
    pub(crate) fn subtractions(self) -> Subtractions {
        let (zero, tail) = match self {
            Regime::Core => (0, 0),
            Regime::Low => (1, 0),
            Regime::Low2 => (2, 0),
            Regime::High => (0, 1),
            Regime::High2 => (0, 2),
            _ => (0, 0),
        };
        Subtractions { zero, tail }
    }

    /// The regime of `n − i` given the regime of `i`.
    fn mirrored(self) -> Regime {
        match self {
            Regime::Core => Regime::Core,
            Regime::Low => Regime::High,
            Regime::High => Regime::Low,
            Regime::Low2 => Regime::High2,
            Regime::High2 => Regime::Low2,
            Regime::PointMinus2 => Regime::PointNPlus2,
            Regime::PointNPlus2 => Regime::PointMinus2,
            Regime::PointN => Regime::PointN,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Regime::Core => "CORE",
            Regime::Low => "LOW",
            Regime::High => "HIGH",
            Regime::Low2 => "LOW2",
            Regime::High2 => "HIGH2",
            Regime::PointMinus2 => "POINT_MINUS2",
            Regime::PointN => "POINT_N",
            Regime::PointNPlus2 => "POINT_NPLUS2",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Subtractions {
    pub zero: usize,
    pub tail: usize,
}

/// A real, non-zero order `i` classified for a dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualOrder {
    order: f64,
    dim: usize,
    regime: Regime,
}

impl DualOrder {
    /// Classifies `order` for dimension `dim`. Zero and orders outside
    /// `(−4, n + 4)` are rejected; orders within [`SNAP_TOLERANCE`] of the
    /// closed-form points snap to them.
    pub fn new(order: f64, dim: usize) -> Result<Self> {
        let unsupported = || Error::UnsupportedOrder { order, dim };
        if dim < 2 || !order.is_finite() {
            return Err(unsupported());
        }
        let n = dim as f64;
        if order.abs() <= SNAP_TOLERANCE {
            return Err(Error::InvalidArgument(
                "the dual volume of order 0 is κ_n for every body and carries no information"
                    .into(),
            ));
        }
        let snapped = |p: f64, regime| Self {
            order: p,
            dim,
            regime,
        };
        if (order + 2.0).abs() <= SNAP_TOLERANCE {
            return Ok(snapped(-2.0, Regime::PointMinus2));
        }
        if (order - n).abs() <= SNAP_TOLERANCE {
            return Ok(snapped(n, Regime::PointN));
        }
        if (order - n - 2.0).abs() <= SNAP_TOLERANCE {
            return Ok(snapped(n + 2.0, Regime::PointNPlus2));
        }
        let regime = if order <= -4.0 || order >= n + 4.0 {
            return Err(unsupported());
        } else if order < -2.0 {
            Regime::Low2
        } else if order < 0.0 {
            Regime::Low
        } else if order < n {
            Regime::Core
        } else if order < n + 2.0 {
            Regime::High
        } else {
            Regime::High2
        };
        Ok(Self { order, dim, regime })
    }

    pub fn value(&self) -> f64 {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// The order `n − i`. Fails when `i = n`, because order 0 is excluded.
    pub fn mirrored(&self) -> Result<Self> {
        let order = self.dim as f64 - self.order;
        if self.regime == Regime::PointN {
            return Err(Error::InvalidArgument("n − i = 0 is not a valid order".into()));
        }
        Ok(Self {
            order,
            dim: self.dim,
            regime: self.regime.mirrored(),
        })
    }
}

/// How a non-point order is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Polar route above `n`, direct moment integral elsewhere.
    Auto,
    /// The regime's own moment integral for `E`.
    Direct,
    /// `Ṽ_i(E) = a_1⋯a_n · Ṽ_{n−i}(E°)`, with the right side evaluated directly.
    Polar,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualVolume {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub regime: Regime,
    pub route: Route,
    pub evaluations: usize,
}

/// `Ṽ_i(E)` with the default route.
pub fn dual_volume(e: &Ellipsoid, order: &DualOrder, cfg: &QuadratureConfig) -> Result<f64> {
    Ok(dual_volume_detailed(e, order, Route::Auto, cfg)?.value)
}

/// Convenience wrapper classifying the raw order first.
pub fn dual_volume_at(e: &Ellipsoid, order: f64, cfg: &QuadratureConfig) -> Result<f64> {
    dual_volume(e, &DualOrder::new(order, e.dim())?, cfg)
}

pub fn dual_volume_detailed(
    e: &Ellipsoid,
    order: &DualOrder,
    route: Route,
    cfg: &QuadratureConfig,
) -> Result<DualVolume> {
    if order.dim != e.dim() {
        return Err(Error::DimensionMismatch {
            expected: e.dim(),
            got: order.dim,
        });
    }
    let regime = order.regime;
    if regime.is_point() {
        return Ok(DualVolume {
            value: closed_form(e, regime),
            abs_error_estimate: 0.0,
            regime,
            route: Route::ClosedForm,
            evaluations: 0,
        });
    }
    let route = match route {
        Route::Auto | Route::ClosedForm => {
            if matches!(regime, Regime::High | Regime::High2) {
                Route::Polar
            } else {
                Route::Direct
            }
        }
        other => other,
    };
    let (value, abs_error_estimate, evaluations) = match route {
        Route::Polar => {
            let mirrored = order.mirrored()?;
            let p = e.axis_product();
            let m = direct(&e.polar(), mirrored.order, mirrored.regime, cfg)?;
            (p * m.0, p * m.1, m.2)
        }
        _ => direct(e, order.order, regime, cfg)?,
    };
    Ok(DualVolume {
        value,
        abs_error_estimate,
        regime,
        route,
        evaluations,
    })
}

fn closed_form(e: &Ellipsoid, regime: Regime) -> f64 {
    let n = e.dim() as f64;
    let base = PI.powf(n / 2.0) * recip_gamma((n + 2.0) / 2.0) / n;
    match regime {
        Regime::PointMinus2 => base * e.semi_axes().iter().map(|a| 1.0 / (a * a)).sum::<f64>(),
        Regime::PointN => e.volume(),
        Regime::PointNPlus2 => {
            base * e.axis_product() * e.semi_axes().iter().map(|a| a * a).sum::<f64>()
        }
        _ => unreachable!("closed forms exist only at the point regimes"),
    }
}

/// `4π^{n/2} / (n Γ((n−i)/2) Γ(i/2))`, finite (possibly zero) for every real `i`.
pub fn moment_prefactor(n: usize, order: f64) -> f64 {
    let nf = n as f64;
    4.0 * PI.powf(nf / 2.0) / nf * recip_gamma((nf - order) / 2.0) * recip_gamma(order / 2.0)
}

fn direct(
    e: &Ellipsoid,
    order: f64,
    regime: Regime,
    cfg: &QuadratureConfig,
) -> Result<(f64, f64, usize)> {
    let pref = moment_prefactor(e.dim(), order);
    let m = moment_integral(e, order, regime.subtractions(), cfg)?;
    Ok((pref * m.value, pref.abs() * m.abs_error, m.evaluations))
}

/// Taylor coefficients of `Π (1 + x_j t)^{−1/2}` in `t`, generated until the
/// terms scaled by `radius^k` drop below machine precision of their sum
/// (and at least `min_terms` of them).
fn profile_series(weights: &[f64], radius: f64, min_terms: usize) -> Vec<f64> {
    const MAX_TERMS: usize = 400;
    // log Π(1 + x t)^{−1/2} = Σ_m (−1)^m p_m t^m / (2m), p_m = Σ x_j^m.
    let mut log_coeffs = vec![0.0];
    let mut coeffs = vec![1.0];
    let mut powers = weights.to_vec();
    let mut scaled_sum = 1.0f64;
    for k in 1..MAX_TERMS {
        let pk: f64 = powers.iter().sum();
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        log_coeffs.push(sign * pk / (2.0 * k as f64));
        powers.iter_mut().zip(weights).for_each(|(p, x)| *p *= x);
        let ak = (1..=k)
            .map(|m| m as f64 * log_coeffs[m] * coeffs[k - m])
            .sum::<f64>()
            / k as f64;
        coeffs.push(ak);
        let term = (ak * radius.powi(k as i32)).abs();
        scaled_sum += term;
        if k >= min_terms && term < 1e-18 * scaled_sum {
            break;
        }
    }
    coeffs
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct MomentIntegral {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

/// `∫₀^∞ u^{i−1} [φ(u²) − Σ_{k<z} α_k u^{2k} − P Σ_{k<t} β_k u^{−n−2k}] du`
/// continued analytically, where `α_k`, `β_k` are the expansion
/// coefficients of the profile at 0 and ∞ and `P = a_1⋯a_n`.
fn moment_integral(
    e: &Ellipsoid,
    order: f64,
    sub: Subtractions,
    cfg: &QuadratureConfig,
) -> Result<MomentIntegral> {
    let axes = e.semi_axes();
    let n = e.dim() as f64;
    let p = e.axis_product();
    let a_max = axes[0];
    let a_min = axes[axes.len() - 1];
    let lo = 0.5 * a_min;
    let hi = 2.0 * a_max;

    let inv_sq: Vec<f64> = axes.iter().map(|a| 1.0 / (a * a)).collect();
    let sq: Vec<f64> = axes.iter().map(|a| a * a).collect();
    let lo2 = lo * lo;
    let hi2 = hi * hi;
    // Both series are evaluated at a quarter of their convergence radius.
    let alpha = profile_series(&inv_sq, lo2, sub.zero + 1);
    let beta = profile_series(&sq, 1.0 / hi2, sub.tail + 1);

    // [0, lo]: remaining zero-end series, minus the removed tail terms.
    let mut head = 0.0;
    let mut pw = lo2.powi(sub.zero as i32);
    for (k, a) in alpha.iter().enumerate().skip(sub.zero) {
        head += a * pw / (order + 2.0 * k as f64);
        pw *= lo2;
    }
    head *= lo.powf(order);
    for (k, b) in beta.iter().enumerate().take(sub.tail) {
        let ex = order - n - 2.0 * k as f64;
        head -= p * b * lo.powf(ex) / ex;
    }

    // [hi, ∞): remaining tail series, minus the removed zero-end terms.
    let mut tail = 0.0;
    let mut pw = hi2.powi(-(sub.tail as i32));
    for (k, b) in beta.iter().enumerate().skip(sub.tail) {
        tail += b * pw / (n + 2.0 * k as f64 - order);
        pw /= hi2;
    }
    tail *= p * hi.powf(order - n);
    for (k, a) in alpha.iter().enumerate().take(sub.zero) {
        let ex = order + 2.0 * k as f64;
        tail += a * hi.powf(ex) / ex;
    }

    // [lo, hi] in s = ln u.
    let zero_terms = &alpha[..sub.zero];
    let tail_terms = &beta[..sub.tail];
    let integrand = |s: f64| {
        let u = s.exp();
        let u2 = u * u;
        let prod: f64 = inv_sq.iter().map(|x| 1.0 + u2 * x).product();
        let mut g = 1.0 / prod.sqrt();
        let mut pw = 1.0;
        for a in zero_terms {
            g -= a * pw;
            pw *= u2;
        }
        let mut pw = p * u.powf(-n);
        for b in tail_terms {
            g -= b * pw;
            pw /= u2;
        }
        u.powf(order) * g
    };
    let mid = integrate_interval(integrand, lo.ln(), hi.ln(), cfg)?;
    Ok(MomentIntegral {
        value: head + mid.value + tail,
        abs_error: mid.abs_error_estimate,
        evaluations: mid.evaluations,
    })
}

/// Monte Carlo estimate of `Ṽ_i(E)` from uniformly distributed directions.
pub fn dual_volume_oracle(e: &Ellipsoid, order: f64, samples: usize, seed: u64) -> Result<McEstimate> {
    Ok(dual_volume_oracle_many(e, &[order], samples, seed)?.remove(0))
}

/// [`dual_volume_oracle`] for several orders sharing one set of directions.
pub fn dual_volume_oracle_many(
    e: &Ellipsoid,
    orders: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    if samples < 10_000 {
        return Err(Error::InvalidArgument(format!(
            "the dual-volume oracle needs at least 10^4 samples, got {samples}"
        )));
    }
    let n = e.dim();
    let exps: Vec<f64> = orders.iter().map(|i| -0.5 * i).collect();
    let inv_sq: Vec<f64> = e.semi_axes().iter().map(|a| 1.0 / (a * a)).collect();
    let raw = mc_sphere_integral_many(
        |theta, out| {
            // ρ^i = (Σ θ_j²/a_j²)^{−i/2}
            let q: f64 = theta.iter().zip(&inv_sq).map(|(t, x)| t * t * x).sum();
            for (o, ex) in out.iter_mut().zip(&exps) {
                *o = q.powf(*ex);
            }
        },
        n,
        orders.len(),
        samples,
        seed,
    )?;
    let inv_n = 1.0 / n as f64;
    Ok(raw
        .into_iter()
        .map(|m| McEstimate {
            estimate: m.estimate * inv_n,
            stderr: m.stderr * inv_n,
            samples: m.samples,
        })
        .collect())
}

/// `∂Ṽ_i(E)/∂ ln a` for the semi-axis `a` of `E`:
/// `Ṽ_i(E) − (n+2)(n−i)/(2nπ) · Ṽ_i(E ⊕ (a, a))`, where `E ⊕ (a, a)` is
/// the `(n+2)`-dimensional ellipsoid with `a` appended twice.
pub fn dual_volume_log_derivative(e: &Ellipsoid, order: f64, a: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let n = e.dim();
    if !e.semi_axes().iter().any(|x| (x - a).abs() <= 1e-12 * a) {
        return Err(Error::InvalidArgument(format!("{a} is not a semi-axis of the ellipsoid")));
    }
    let value = dual_volume_at(e, order, cfg)?;
    let mut axes = e.semi_axes().to_vec();
    axes.extend([a, a]);
    let widened = Ellipsoid::new(axes)?;
    let ratio = (n as f64 + 2.0) * (n as f64 - DualOrder::new(order, n)?.value()) / (2.0 * n as f64 * PI);
    if ratio == 0.0 {
        return Ok(value);
    }
    Ok(value - ratio * dual_volume_at(&widened, order, cfg)?)
}

/// `Ṽ_i(E) − (1/κ_n) Ṽ_n(E) Ṽ_{n−i}(E°)`, both sides through direct moment
/// integrals (never the polar route, which would make the check circular).
pub fn dual_relation_gap(e: &Ellipsoid, order: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let (lhs, rhs) = dual_relation_sides(e, order, cfg)?;
    Ok(lhs - rhs)
}

/// Both sides of the polar relation, see [`dual_relation_gap`].
pub fn dual_relation_sides(e: &Ellipsoid, order: f64, cfg: &QuadratureConfig) -> Result<(f64, f64)> {
    let n = e.dim();
    let ord = DualOrder::new(order, n)?;
    let lhs = dual_volume_detailed(e, &ord, Route::Direct, cfg)?.value;
    let polar_term = if ord.regime == Regime::PointN {
        kappa(n)
    } else {
        let mirrored = DualOrder::new(n as f64 - ord.order, n)?;
        dual_volume_detailed(&e.polar(), &mirrored, Route::Direct, cfg)?.value
    };
    let rhs = e.volume() * polar_term / kappa(n);
    Ok((lhs, rhs))
}

/// `f_E(u) = Π (1 + u/a_j²)^{−1/2}`.
pub fn f_profile(e: &Ellipsoid, u: f64) -> f64 {
    let prod: f64 = e.semi_axes().iter().map(|a| 1.0 + u / (a * a)).product();
    1.0 / prod.sqrt()
}

/// `f_E(u) − Σ_{k<m} f_E^{(k)}(0) u^k/k!` for `m ≤ 2`, without cancellation.
pub fn f_profile_remainder(e: &Ellipsoid, u: f64, m: usize) -> f64 {
    let weights: Vec<f64> = e.semi_axes().iter().map(|a| 1.0 / (a * a)).collect();
    profile_remainder(&weights, u, m)
}

/// `Π (1 + x_j t)^{−1/2}` minus its Taylor polynomial of degree `m − 1`
/// (`m ≤ 2`), accurate to full relative precision for small `t`.
pub(crate) fn profile_remainder(weights: &[f64], t: f64, m: usize) -> f64 {
    match m {
        0 => 1.0 / weights.iter().map(|x| 1.0 + t * x).product::<f64>().sqrt(),
        1 => {
            let log_f: f64 = -0.5 * weights.iter().map(|x| (t * x).ln_1p()).sum::<f64>();
            log_f.exp_m1()
        }
        2 => {
            // expm1(L) − L₁t = (expm1(L) − L) + (L − L₁t), L = log f.
            let (mut log_f, mut log_rem) = (0.0, 0.0);
            for x in weights {
                let y = t * x;
                log_f -= 0.5 * y.ln_1p();
                log_rem -= 0.5 * ln1p_minus_identity(y);
            }
            expm1_minus_identity(log_f) + log_rem
        }
        _ => panic!("profile remainders are implemented for m ≤ 2"),
    }
}

fn ln1p_minus_identity(y: f64) -> f64 {
    if y.abs() < 0.1 {
        let mut term = -y * y / 2.0;
        let mut sum = 0.0;
        for k in 2..40 {
            sum += term;
            term *= -y * k as f64 / (k + 1) as f64;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        y.ln_1p() - y
    }
}

fn expm1_minus_identity(x: f64) -> f64 {
    if x.abs() < 0.1 {
        let mut term = x * x / 2.0;
        let mut sum = 0.0;
        for k in 3..40 {
            sum += term;
            term *= x / k as f64;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        x.exp_m1() - x
    }
}

fn check_fractional_order(q: f64) -> Result<usize> {
    if !q.is_finite() || q <= -2.0 || q >= 2.0 {
        return Err(Error::Unsupported(format!(
            "fractional derivative of order {q} (supported: −2 < q < 2)"
        )));
    }
    if (q - q.round()).abs() < 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "order {q} is an integer; use the ordinary derivative"
        )));
    }
    Ok(if q > 0.0 { q.ceil() as usize } else { 0 })
}

/// Core of the fractional derivative: `(1/Γ(−q)) ∫₀^∞ t^{−1−q} r(t) dt`
/// where `r` is already the Taylor remainder of order `m` (`m = ⌈q⌉` for
/// `q > 0`, else 0) and `f(t) = O(t^{−tail_decay})` at infinity.
pub fn fractional_derivative_from_remainder<R: Fn(f64) -> f64>(
    remainder: R,
    q: f64,
    tail_decay: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let m = check_fractional_order(q)?;
    let endpoint = -1.0 - q + m as f64;
    let tail = if m == 0 {
        -1.0 - q - tail_decay
    } else {
        -1.0 - q + (m - 1) as f64
    };
    if tail >= -1.0 {
        return Err(Error::InvalidArgument(format!(
            "the integral for order {q} diverges at infinity (decay {tail_decay})"
        )));
    }
    let r = integrate_half_line(|t| t.powf(-1.0 - q) * remainder(t), endpoint, tail, cfg)?;
    Ok(recip_gamma(-q) * r.value)
}

/// `f^{(q)}(0)` for non-integer `−2 < q < 2`. `taylor` holds `f^{(k)}(0)` for
/// `k < ⌈q⌉` (may be empty for `q < 0`); `tail_decay` is `d` in
/// `f(t) = O(t^{−d})`, only used when `q < 0`.
pub fn fractional_derivative_at_zero<F: Fn(f64) -> f64>(
    f: F,
    q: f64,
    taylor: &[f64],
    tail_decay: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let m = check_fractional_order(q)?;
    if taylor.len() < m {
        return Err(Error::InvalidArgument(format!(
            "order {q} needs {m} Taylor coefficients, got {}",
            taylor.len()
        )));
    }
    let coeffs: Vec<f64> = taylor[..m]
        .iter()
        .enumerate()
        .map(|(k, d)| d / (1..=k).product::<usize>() as f64)
        .collect();
    let remainder = |t: f64| f(t) - coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c);
    if m == 0 {
        return fractional_derivative_from_remainder(remainder, q, tail_decay, cfg);
    }
    // Rounding in f(t) − polynomial is not integrable against t^{−1−q}, so
    // [0, t0] comes from a fit of r(t)/t^m on nodes where r is resolved.
    let t0 = 1e-2 * variation_scale(&f, coeffs[0]);
    let nodes: Vec<f64> = (0..HEAD_NODES)
        .map(|j| 0.5 * (1.0 - ((2 * j + 1) as f64 * PI / (2 * HEAD_NODES) as f64).cos()))
        .collect();
    let vander = DMatrix::from_fn(HEAD_NODES, HEAD_NODES, |r, c| nodes[r].powi(c as i32));
    let rhs = DVector::from_iterator(
        HEAD_NODES,
        nodes.iter().map(|s| remainder(s * t0) / (s * t0).powi(m as i32)),
    );
    let fit = vander
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidArgument("singular head fit".into()))?;
    let base = m as f64 - q;
    let head: f64 = fit
        .iter()
        .enumerate()
        .map(|(k, c)| c * t0.powf(base) / (base + k as f64))
        .sum();
    let tail = -1.0 - q + (m - 1) as f64;
    if tail >= -1.0 {
        return Err(Error::InvalidArgument(format!("the integral for order {q} diverges at infinity")));
    }
    let rest = integrate_half_line(|s| (t0 + s).powf(-1.0 - q) * remainder(t0 + s), 0.0, tail, cfg)?;
    Ok(recip_gamma(-q) * (head + rest.value))
}

const HEAD_NODES: usize = 6;

/// A `t` where `f` has moved by roughly a percent from `f0`.
fn variation_scale<F: Fn(f64) -> f64>(f: &F, f0: f64) -> f64 {
    let size = f0.abs().max(f64::MIN_POSITIVE);
    let moved = |t: f64| (f(t) - f0).abs() / size;
    let mut t = 1.0;
    for _ in 0..200 {
        if moved(t) > 0.1 {
            t *= 0.5;
        } else if moved(t) < 0.01 && t < 1e100 {
            t *= 2.0;
            if moved(t) > 0.1 {
                t *= 0.5;
                break;
            }
        } else {
            break;
        }
    }
    t
}

/// `Ṽ_i(E) = 2π^{n/2} / (n Γ((n−i)/2)) · f_E^{(−i/2)}(0)` for `i < n`.
pub fn dual_volume_via_fractional_derivative(
    e: &Ellipsoid,
    order: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let n = e.dim() as f64;
    if order >= n || order == 0.0 {
        return Err(Error::UnsupportedOrder {
            order,
            dim: e.dim(),
        });
    }
    let q = -order / 2.0;
    let m = check_fractional_order(q)?;
    let d = fractional_derivative_from_remainder(|t| f_profile_remainder(e, t, m), q, n / 2.0, cfg)?;
    Ok(2.0 * PI.powf(n / 2.0) / n * recip_gamma((n - order) / 2.0) * d)
}

/// `vol(E +̃ εB) = Σ_{i=0}^n C(n,i) Ṽ_i(E) ε^{n−i}` with `Ṽ_0 = κ_n`.
pub fn dual_steiner_polynomial(e: &Ellipsoid, eps: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("ε must be positive, got {eps}")));
    }
    let n = e.dim();
    let mut total = 0.0;
    for i in 0..=n {
        let v = if i == 0 {
            kappa(n)
        } else {
            dual_volume_at(e, i as f64, cfg)?
        };
        total += binomial(n, i) * v * eps.powi((n - i) as i32);
    }
    Ok(total)
}

/// Monte Carlo estimate of the radial-sum volume `(1/n) ∫ (ρ_E + ε)^n dθ`.
pub fn radial_sum_volume_oracle(e: &Ellipsoid, eps: f64, samples: usize, seed: u64) -> Result<McEstimate> {
    let n = e.dim();
    let inv_sq: Vec<f64> = e.semi_axes().iter().map(|a| 1.0 / (a * a)).collect();
    let mut raw = mc_sphere_integral_many(
        |theta, out| {
            let q: f64 = theta.iter().zip(&inv_sq).map(|(t, x)| t * t * x).sum();
            out[0] = (q.sqrt().recip() + eps).powi(n as i32);
        },
        n,
        1,
        samples,
        seed,
    )?;
    let m = raw.remove(0);
    let inv_n = 1.0 / n as f64;
    Ok(McEstimate {
        estimate: m.estimate * inv_n,
        stderr: m.stderr * inv_n,
        samples: m.samples,
    })
}
