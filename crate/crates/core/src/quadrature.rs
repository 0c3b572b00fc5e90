//! Adaptive Gauss–Kronrod integration over finite intervals and `[0, ∞)`,
//! plus a seeded Monte Carlo integrator on the unit sphere.
//!
//! The half line is split at `u = 1`; the tail is folded back with `u = 1/v`
//! and each unit piece gets a power substitution `v = s^p` chosen from the
//! caller's endpoint exponent hint so algebraic singularities are flattened
//! before the 21-point Kronrod panels see them.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::sphere_area;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_subdivisions: 2000,
        }
    }
}

impl QuadratureConfig {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidArgument(
                "quadrature tolerances must be positive".into(),
            ));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::InvalidArgument(
                "max_subdivisions must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn eval<F: Fn(f64) -> f64>(f: &F, x: f64) -> Result<f64> {
    let y = f(x);
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::NonFiniteIntegrand { at: x })
    }
}

/// One 21-point Kronrod panel with the QUADPACK error heuristic.
fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Panel> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = eval(f, center)?;
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    let mut res_gauss = 0.0;
    let mut res_kronrod = f_center * WGK[10];
    let mut res_abs = res_kronrod.abs();
    for j in 0..5 {
        let jtw = 2 * j + 1;
        let dx = half * XGK[jtw];
        let (y1, y2) = (eval(f, center - dx)?, eval(f, center + dx)?);
        fv1[jtw] = y1;
        fv2[jtw] = y2;
        res_gauss += WG[j] * (y1 + y2);
        res_kronrod += WGK[jtw] * (y1 + y2);
        res_abs += WGK[jtw] * (y1.abs() + y2.abs());
    }
    for j in 0..5 {
        let jtwm1 = 2 * j;
        let dx = half * XGK[jtwm1];
        let (y1, y2) = (eval(f, center - dx)?, eval(f, center + dx)?);
        fv1[jtwm1] = y1;
        fv2[jtwm1] = y2;
        res_kronrod += WGK[jtwm1] * (y1 + y2);
        res_abs += WGK[jtwm1] * (y1.abs() + y2.abs());
    }
    let mean = 0.5 * res_kronrod;
    let mut res_asc = WGK[10] * (f_center - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let abs_half = half.abs();
    let value = res_kronrod * half;
    res_abs *= abs_half;
    res_asc *= abs_half;
    let mut error = ((res_kronrod - res_gauss) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok(Panel { a, b, value, error })
}

/// Globally adaptive integration over the union of consecutive intervals
/// given by `breakpoints`.
fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    breakpoints: &[f64],
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult> {
    cfg.validate()?;
    let mut heap = BinaryHeap::new();
    for w in breakpoints.windows(2) {
        heap.push(gk21(f, w[0], w[1])?);
    }
    let mut evaluations = 21 * heap.len();
    let mut subdivisions = heap.len();
    loop {
        let (value, error) = totals(&heap);
        if error <= cfg.abs_tol.max(cfg.rel_tol * value.abs()) {
            return Ok(QuadratureResult {
                value,
                abs_error_estimate: error,
                evaluations,
            });
        }
        let worst = heap.pop().expect("at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        let exhausted = subdivisions >= cfg.max_subdivisions
            || mid <= worst.a
            || mid >= worst.b
            || worst.error == 0.0;
        if exhausted {
            heap.push(worst);
            let (value, abs_error) = totals(&heap);
            return Err(Error::QuadratureNonConvergence {
                value,
                abs_error,
                evaluations,
            });
        }
        heap.push(gk21(f, worst.a, mid)?);
        heap.push(gk21(f, mid, worst.b)?);
        evaluations += 42;
        subdivisions += 1;
    }
}

/// Sum panels in left-to-right order so the result does not depend on heap layout.
fn totals(heap: &BinaryHeap<Panel>) -> (f64, f64) {
    let mut panels: Vec<&Panel> = heap.iter().collect();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    panels
        .iter()
        .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error))
}

/// Adaptive integration of a smooth function over `[a, b]`.
pub fn integrate_interval<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "interval [{a}, {b}] must be finite"
        )));
    }
    if a == b {
        return Ok(QuadratureResult {
            value: 0.0,
            abs_error_estimate: 0.0,
            evaluations: 1,
        });
    }
    adaptive(&f, &[a, b], cfg)
}

/// Substitution power that turns `v^γ` into a bounded integrand.
fn flattening_power(gamma: f64) -> f64 {
    if gamma >= 0.0 {
        1.0
    } else {
        (1.0 / (gamma + 1.0)).min(64.0)
    }
}

/// ∫₀^∞ f(u) du for `f(u) = O(u^endpoint_exponent_hint)` as `u → 0⁺`
/// (hint > −1) and `f(u) = O(u^tail_exponent_hint)` as `u → ∞` (hint < −1).
pub fn integrate_half_line<F: Fn(f64) -> f64>(
    f: F,
    endpoint_exponent_hint: f64,
    tail_exponent_hint: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult> {
    if !(endpoint_exponent_hint > -1.0) {
        return Err(Error::InvalidArgument(format!(
            "endpoint exponent {endpoint_exponent_hint} makes the integral diverge at 0"
        )));
    }
    if !(tail_exponent_hint < -1.0) {
        return Err(Error::InvalidArgument(format!(
            "tail exponent {tail_exponent_hint} makes the integral diverge at infinity"
        )));
    }
    let p0 = flattening_power(endpoint_exponent_hint);
    // f(1/v)/v² ~ v^{−tail−2} near v = 0.
    let p1 = flattening_power(-tail_exponent_hint - 2.0);
    let folded = |s: f64| -> f64 {
        if s <= 1.0 {
            let u = s.powf(p0);
            if u == 0.0 {
                return 0.0;
            }
            p0 * s.powf(p0 - 1.0) * f(u)
        } else {
            let w = 2.0 - s;
            let v = w.powf(p1);
            if v == 0.0 {
                return 0.0;
            }
            let u = 1.0 / v;
            if !u.is_finite() {
                return 0.0;
            }
            p1 * w.powf(p1 - 1.0) * f(u) / (v * v)
        }
    };
    adaptive(&folded, &[0.0, 0.5, 1.0, 1.5, 2.0], cfg)
}

/// A Monte Carlo mean scaled to an integral, with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl McEstimate {
    /// Whether `value` lies within `k` standard errors of the estimate.
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        (self.estimate - value).abs() <= k * self.stderr
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.count;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Self) -> Self {
        if self.count == 0.0 {
            return other;
        }
        if other.count == 0.0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        Self {
            count,
            mean: self.mean + delta * other.count / count,
            m2: self.m2 + other.m2 + delta * delta * self.count * other.count / count,
        }
    }
}

const BLOCK: usize = 1 << 14;

/// Runs `samples` draws of a vector-valued kernel in fixed-size blocks. Block
/// `b` uses ChaCha8 seeded with `seed` on stream `b`, so the result is
/// bit-identical for any thread count. Returns the mean of each output
/// component multiplied by `scale`.
pub(crate) fn block_monte_carlo<K>(
    samples: usize,
    seed: u64,
    outputs: usize,
    scale: f64,
    kernel: K,
) -> Vec<McEstimate>
where
    K: Fn(&mut ChaCha8Rng, &mut [f64]) + Sync,
{
    let blocks = samples.div_ceil(BLOCK);
    let per_block: Vec<Vec<Moments>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let n = BLOCK.min(samples - b * BLOCK);
            let mut acc = vec![Moments::default(); outputs];
            let mut out = vec![0.0; outputs];
            for _ in 0..n {
                kernel(&mut rng, &mut out);
                for (m, &x) in acc.iter_mut().zip(&out) {
                    m.push(x);
                }
            }
            acc
        })
        .collect();
    let mut total = vec![Moments::default(); outputs];
    for block in per_block {
        for (t, m) in total.iter_mut().zip(block) {
            *t = t.merge(m);
        }
    }
    total
        .into_iter()
        .map(|m| {
            let var = if m.count > 1.0 {
                m.m2 / (m.count - 1.0)
            } else {
                0.0
            };
            McEstimate {
                estimate: scale * m.mean,
                stderr: scale * (var / m.count).sqrt(),
                samples,
            }
        })
        .collect()
}

/// Fills `theta` with a uniformly distributed unit vector.
pub(crate) fn random_direction(rng: &mut ChaCha8Rng, theta: &mut [f64]) {
    loop {
        let mut norm2 = 0.0;
        for t in theta.iter_mut() {
            *t = StandardNormal.sample(rng);
            norm2 += *t * *t;
        }
        if norm2 > 1e-200 {
            let inv = norm2.sqrt().recip();
            theta.iter_mut().for_each(|t| *t *= inv);
            return;
        }
    }
}

/// Largest dimension handled by the Monte Carlo estimators.
pub const MAX_MC_DIM: usize = 16;

pub(crate) fn check_mc(n: usize, samples: usize, min_samples: usize) -> Result<()> {
    if !(2..=MAX_MC_DIM).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "sphere dimension must lie in 2..={MAX_MC_DIM}, got {n}"
        )));
    }
    if samples < min_samples {
        return Err(Error::InvalidArgument(format!(
            "at least {min_samples} samples required, got {samples}"
        )));
    }
    Ok(())
}

/// Monte Carlo estimate of ∫_{S^{n−1}} g dθ against spherical Lebesgue
/// measure (total mass n·κ_n).
pub fn mc_sphere_integral<G>(g: G, n: usize, samples: usize, seed: u64) -> Result<McEstimate>
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    let mut v = mc_sphere_integral_many(|theta, out| out[0] = g(theta), n, 1, samples, seed)?;
    Ok(v.remove(0))
}

/// Vector-valued variant of [`mc_sphere_integral`]: every component is
/// evaluated on the same sample directions.
pub fn mc_sphere_integral_many<G>(
    g: G,
    n: usize,
    outputs: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<McEstimate>>
where
    G: Fn(&[f64], &mut [f64]) + Sync,
{
    check_mc(n, samples, 1000)?;
    let estimates = block_monte_carlo(samples, seed, outputs, sphere_area(n), |rng, out| {
        let mut buf = [0.0; MAX_MC_DIM];
        let theta = &mut buf[..n];
        random_direction(rng, theta);
        g(theta, out);
    });
    if let Some(bad) = estimates.iter().find(|e| !e.estimate.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "integrand produced a non-finite mean {}",
            bad.estimate
        )));
    }
    Ok(estimates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn exponential() {
        let r = integrate_half_line(|u| (-u).exp(), 0.0, -3.0, &cfg()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        assert!(r.abs_error_estimate >= 0.0 && r.evaluations > 0);
    }

    #[test]
    fn gamma_half_integral() {
        let r = integrate_half_line(|u| (-u).exp() / u.sqrt(), -0.5, -3.0, &cfg()).unwrap();
        assert!((r.value - PI.sqrt()).abs() < 1e-11, "{}", r.value);
    }

    #[test]
    fn rational_tail() {
        let r = integrate_half_line(|u| (1.0 + u * u).powi(-2), 0.0, -4.0, &cfg()).unwrap();
        assert!((r.value - PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn strong_algebraic_endpoint() {
        // ∫₀^∞ u^{-0.9}/(1+u) du = π / sin(0.1π).
        let r = integrate_half_line(|u| u.powf(-0.9) / (1.0 + u), -0.9, -1.9, &cfg()).unwrap();
        let exact = PI / (0.1 * PI).sin();
        assert!((r.value - exact).abs() / exact < 1e-9, "{} vs {exact}", r.value);
    }

    #[test]
    fn divergent_hints_are_rejected() {
        assert!(integrate_half_line(|u| u, -1.0, -2.0, &cfg()).is_err());
        assert!(integrate_half_line(|u| u, 0.0, -1.0, &cfg()).is_err());
    }

    #[test]
    fn nan_propagates() {
        let r = integrate_half_line(|u| if u > 3.0 { f64::NAN } else { 1.0 }, 0.0, -2.0, &cfg());
        assert!(matches!(r, Err(Error::NonFiniteIntegrand { .. })));
    }

    #[test]
    fn non_convergence_reports_best_estimate() {
        let tight = QuadratureConfig {
            rel_tol: 1e-15,
            abs_tol: 1e-300,
            max_subdivisions: 3,
        };
        let r = integrate_interval(|x: f64| x.abs().sqrt(), -1.0, 1.0, &tight);
        match r {
            Err(Error::QuadratureNonConvergence { value, .. }) => {
                assert!((value - 4.0 / 3.0).abs() < 1e-3)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_config() {
        let bad = QuadratureConfig {
            max_subdivisions: 0,
            ..cfg()
        };
        assert!(integrate_interval(|x| x, 0.0, 1.0, &bad).is_err());
    }

    #[test]
    fn replacing_u_by_u_squared() {
        // ∫ f(t) dt = ∫ 2u f(u²) du for f(t) = t^{-1/2}/(1+t)^2.
        let f = |t: f64| t.powf(-0.5) / (1.0 + t).powi(2);
        let a = integrate_half_line(f, -0.5, -2.5, &cfg()).unwrap().value;
        let b = integrate_half_line(|u| 2.0 * u * f(u * u), 0.0, -4.0, &cfg()).unwrap().value;
        assert!((a - b).abs() <= 1e-10 * a.abs());
        assert!((a - PI / 2.0).abs() < 1e-10);
    }

    #[test]
    fn sphere_area_and_second_moment() {
        let one = mc_sphere_integral(|_| 1.0, 3, 20_000, 1).unwrap();
        assert!((one.estimate - 4.0 * PI).abs() < 1e-12);
        let sq = mc_sphere_integral(|t| t[0] * t[0], 3, 200_000, 7).unwrap();
        assert!(sq.agrees_with(4.0 * PI / 3.0, 3.0), "{sq:?}");
    }

    #[test]
    fn sphere_volume_of_ellipsoid() {
        let e = crate::Ellipsoid::new(vec![1.0, 2.0, 3.0]).unwrap();
        let r = mc_sphere_integral(|t| e.minkowski_unchecked(t).powi(-3), 3, 400_000, 3).unwrap();
        assert!(r.agrees_with(24.0 * PI, 3.0), "{r:?}");
    }

    #[test]
    fn seeded_runs_are_bit_reproducible() {
        let g = |t: &[f64]| t[0].exp();
        let a = mc_sphere_integral(g, 4, 50_000, 99).unwrap();
        let b = mc_sphere_integral(g, 4, 50_000, 99).unwrap();
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
        let c = mc_sphere_integral(g, 4, 50_000, 100).unwrap();
        assert_ne!(a.estimate, c.estimate);
    }

    #[test]
    fn mc_preconditions() {
        assert!(mc_sphere_integral(|_| 1.0, 1, 10_000, 0).is_err());
        assert!(mc_sphere_integral(|_| 1.0, 3, 999, 0).is_err());
    }
}
