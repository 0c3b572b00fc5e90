//! Recovery of ellipsoids from dual-volume data, from intrinsic triples in
//! three dimensions, and of ellipsoids of revolution from intrinsic volumes.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dual::{dual_volume_at, dual_volume_log_derivative};
use crate::error::{Error, Result};
use crate::geometry::{Ellipsoid, RevolutionSpec};
use crate::intrinsic::{unit_volume_profile, v_k_revolution};
use crate::moments::elementary_symmetric;
use crate::quadrature::QuadratureConfig;
use crate::special::kappa;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ProblemKind {
    DualVolumes,
    R3Intrinsic,
    Revolution,
}

/// A prescribed value of `Ṽ_order` (dual problems) or `V_order`
/// (intrinsic problems).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub order: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryProblem {
    pub dim: usize,
    pub targets: Vec<Target>,
    pub kind: ProblemKind,
}

impl RecoveryProblem {
    /// `dim` dual-volume targets with distinct non-zero orders.
    pub fn dual_volumes(dim: usize, targets: &[(f64, f64)]) -> Result<Self> {
        let targets = to_targets(targets)?;
        if targets.len() != dim {
            return Err(Error::InvalidArgument(format!(
                "{dim} targets are needed in dimension {dim}, got {}",
                targets.len()
            )));
        }
        if targets.iter().any(|t| t.order == 0.0) {
            return Err(Error::InvalidArgument("order 0 is not a dual volume".into()));
        }
        check_admissible(dim, &targets)?;
        Ok(Self {
            dim,
            targets,
            kind: ProblemKind::DualVolumes,
        })
    }

    pub fn r3(v1: f64, v2: f64, v3: f64) -> Result<Self> {
        Ok(Self {
            dim: 3,
            targets: to_targets(&[(1.0, v1), (2.0, v2), (3.0, v3)])?,
            kind: ProblemKind::R3Intrinsic,
        })
    }

    /// `(V_n, V_k, V_{n−k})` of an ellipsoid of revolution.
    pub fn revolution(n: usize, k: usize, vn: f64, vk: f64, vnk: f64) -> Result<Self> {
        check_revolution_index(n, k)?;
        if 2 * k == n {
            return Err(Error::InvalidArgument(format!(
                "k = n/2 = {k} leaves the revolution ellipsoid undetermined; supply a third index"
            )));
        }
        Ok(Self {
            dim: n,
            targets: to_targets(&[(n as f64, vn), (k as f64, vk), ((n - k) as f64, vnk)])?,
            kind: ProblemKind::Revolution,
        })
    }

    /// `(V_n, V_{n/2}, V_k)` of an ellipsoid of revolution, `n` even.
    pub fn revolution_even(n: usize, vn: f64, vhalf: f64, vk: f64, k: usize) -> Result<Self> {
        if n % 2 != 0 {
            return Err(Error::InvalidArgument(format!("dimension {n} is odd")));
        }
        check_revolution_index(n, k)?;
        if 2 * k == n {
            return Err(Error::InvalidArgument(format!("k must differ from n/2 = {k}")));
        }
        Ok(Self {
            dim: n,
            targets: to_targets(&[(n as f64, vn), ((n / 2) as f64, vhalf), (k as f64, vk)])?,
            kind: ProblemKind::Revolution,
        })
    }
}

fn to_targets(pairs: &[(f64, f64)]) -> Result<Vec<Target>> {
    let mut out: Vec<Target> = Vec::with_capacity(pairs.len());
    for &(order, value) in pairs {
        if !order.is_finite() {
            return Err(Error::InvalidArgument(format!("order {order} is not finite")));
        }
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "target value {value} at order {order} must be positive and finite"
            )));
        }
        if out.iter().any(|t| t.order == order) {
            return Err(Error::InvalidArgument(format!("order {order} repeated")));
        }
        out.push(Target { order, value });
    }
    Ok(out)
}

fn check_revolution_index(n: usize, k: usize) -> Result<()> {
    if n < 2 || k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "revolution data need 1 ≤ k ≤ n − 1, got n = {n}, k = {k}"
        )));
    }
    Ok(())
}

/// Order families for which `n` dual volumes determine an ellipsoid:
/// all orders in `(−2, n]`; `Ṽ_n` plus orders in `(−2, n + 2) \ {0, n}`;
/// `Ṽ_{−2}` and `Ṽ_n` plus orders in `(−4, n + 2) \ {−2, 0, n}`.
pub fn check_admissible(dim: usize, targets: &[Target]) -> Result<()> {
    let n = dim as f64;
    let has = |o: f64| targets.iter().any(|t| t.order == o);
    let all_in = |lo: f64, hi: f64, hi_closed: bool| {
        targets
            .iter()
            .all(|t| t.order > lo && (t.order < hi || (hi_closed && t.order == hi)))
    };
    let ok = all_in(-2.0, n, true)
        || (has(n) && all_in(-2.0, n + 2.0, false))
        || (has(n) && has(-2.0) && all_in(-4.0, n + 2.0, false));
    if ok {
        Ok(())
    } else {
        let orders: Vec<f64> = targets.iter().map(|t| t.order).collect();
        Err(Error::InvalidArgument(format!(
            "orders {orders:?} are not an admissible family in dimension {dim}: use (−2, n], \
             or include n for (−2, n + 2), or include −2 and n for (−4, n + 2)"
        )))
    }
}

/// How the solver differentiates the forward map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum JacobianMode {
    /// Log-axis derivatives from dual volumes of a widened ellipsoid.
    #[default]
    Exact,
    /// Central differences with step `fd_step`.
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Number of random starts, at least 1.
    pub starts: usize,
    pub max_iterations: usize,
    /// Residual below which a start counts as converged.
    pub tolerance: f64,
    /// Residual above which the targets are declared inconsistent.
    pub infeasible_threshold: f64,
    pub jacobian: JacobianMode,
    /// Step in log-axis space for finite-difference Jacobians.
    pub fd_step: f64,
    pub lambda0: f64,
    /// Relative axis distance separating two converged basins.
    pub basin_tolerance: f64,
    /// Half-width of the box of start points in log-axis space.
    pub start_radius: f64,
    pub seed: u64,
    pub quadrature: QuadratureConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            starts: 20,
            max_iterations: 200,
            tolerance: 1e-8,
            infeasible_threshold: 1e-4,
            jacobian: JacobianMode::Exact,
            fd_step: 1e-6,
            lambda0: 1e-3,
            basin_tolerance: 1e-4,
            start_radius: 2.0,
            seed: 0,
            quadrature: QuadratureConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("solver config: {what}")));
        if self.starts == 0 {
            return bad("starts must be positive");
        }
        if !(self.tolerance > 0.0 && self.tolerance <= self.infeasible_threshold) {
            return bad("need 0 < tolerance ≤ infeasible_threshold");
        }
        if !(self.fd_step > 0.0 && self.lambda0 > 0.0 && self.start_radius > 0.0) {
            return bad("fd_step, lambda0 and start_radius must be positive");
        }
        self.quadrature.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoverySolution {
    pub ellipsoid: Ellipsoid,
    pub residual_max_rel: f64,
    pub starts_tried: usize,
    pub converged: bool,
    pub distinct_basins_found: usize,
}

/// Dispatches on the problem kind.
pub fn recover(problem: &RecoveryProblem, cfg: &SolverConfig) -> Result<RecoverySolution> {
    match problem.kind {
        ProblemKind::DualVolumes => recover_dual(problem, cfg),
        ProblemKind::R3Intrinsic => {
            let v = |o: f64| {
                problem
                    .targets
                    .iter()
                    .find(|t| t.order == o)
                    .map(|t| t.value)
                    .ok_or_else(|| Error::InvalidArgument(format!("missing V_{o}")))
            };
            recover_r3(v(1.0)?, v(2.0)?, v(3.0)?, cfg)
        }
        ProblemKind::Revolution => {
            let n = problem.dim;
            let [t0, t1, t2] = match problem.targets.as_slice() {
                [a, b, c] => [*a, *b, *c],
                _ => return Err(Error::InvalidArgument("revolution data need three targets".into())),
            };
            if t0.order != n as f64 {
                return Err(Error::InvalidArgument("the first revolution target must be V_n".into()));
            }
            let k = t1.order as usize;
            let other = t2.order as usize;
            if 2 * k == n {
                recover_revolution_even(n, t0.value, t1.value, t2.value, other, cfg)
            } else if other == n - k {
                recover_revolution(n, k, t0.value, t1.value, t2.value, cfg)
            } else {
                Err(Error::InvalidArgument(format!(
                    "unsupported revolution index set ({n}, {k}, {other})"
                )))
            }
        }
    }
}

/// Solves `Ṽ_{i_k}(E) = target_k` for the congruence class of `E`:
/// multistart Levenberg–Marquardt in log-axis coordinates, then Newton
/// refinement in the symmetric functions `e_m(a_1², …, a_n²)`.
pub fn recover_dual(problem: &RecoveryProblem, cfg: &SolverConfig) -> Result<RecoverySolution> {
    cfg.validate()?;
    if problem.kind != ProblemKind::DualVolumes {
        return Err(Error::InvalidArgument("recover_dual needs a dual-volume problem".into()));
    }
    let n = problem.dim;
    if problem.targets.len() != n {
        return Err(Error::InvalidArgument(format!("{n} targets are needed")));
    }
    check_admissible(n, &problem.targets)?;
    let model = DualModel::new(n, &problem.targets, &cfg.quadrature);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let starts: Vec<Vec<f64>> = (0..cfg.starts)
        .map(|_| {
            (0..model.free_dim())
                .map(|_| rng.random_range(-cfg.start_radius..=cfg.start_radius))
                .collect()
        })
        .collect();
    let candidates: Vec<(Ellipsoid, f64)> = starts
        .par_iter()
        .enumerate()
        .map(|(k, x0)| model.solve_from(x0, cfg.seed ^ (k as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15), cfg).ok())
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    summarize(candidates, cfg.starts, cfg)
}

/// Residual below which the log-axis phase hands over to refinement.
const SWITCH_RESIDUAL: f64 = 1e-6;
/// Residual above which slow progress counts as a stall.
const STALL_RESIDUAL: f64 = 1e-4;
const MAX_KICKS: usize = 3;

struct LmRun {
    x: Vec<f64>,
    iterations: usize,
    stalled: bool,
}

struct DualModel<'a> {
    n: usize,
    targets: &'a [Target],
    /// Targets other than `Ṽ_n`.
    fitted: Vec<Target>,
    /// `ln(Ṽ_n/κ_n)` when `Ṽ_n` is prescribed.
    log_product: Option<f64>,
    quadrature: &'a QuadratureConfig,
}

impl<'a> DualModel<'a> {
    fn new(n: usize, targets: &'a [Target], quadrature: &'a QuadratureConfig) -> Self {
        let is_anchor = |t: &Target| t.order == n as f64;
        Self {
            n,
            targets,
            fitted: targets.iter().filter(|t| !is_anchor(t)).copied().collect(),
            log_product: targets.iter().find(|t| is_anchor(t)).map(|t| (t.value / kappa(n)).ln()),
            quadrature,
        }
    }

    fn free_dim(&self) -> usize {
        self.n - usize::from(self.log_product.is_some())
    }

    /// Completes free coordinates with the eliminated last log-axis.
    fn log_axes(&self, x: &[f64]) -> Vec<f64> {
        let mut full = x.to_vec();
        if let Some(lp) = self.log_product {
            full.push(lp - x.iter().sum::<f64>());
        }
        full
    }

    fn ellipsoid(&self, log_axes: &[f64]) -> Result<Ellipsoid> {
        if log_axes.iter().any(|v| !(v.abs() <= 40.0)) {
            return Err(Error::InvalidArgument("iterate left the admissible box".into()));
        }
        Ellipsoid::new(log_axes.iter().map(|v| v.exp()).collect::<Vec<_>>())
    }

    fn relative_residuals(&self, e: &Ellipsoid, targets: &[Target]) -> Result<Vec<f64>> {
        targets
            .iter()
            .map(|t| Ok((dual_volume_at(e, t.order, self.quadrature)? - t.value) / t.value))
            .collect()
    }

    /// `∂r_k/∂ ln a_j` for the fitted targets, columns in the order of `log_axes`.
    fn log_jacobian(&self, log_axes: &[f64], cfg: &SolverConfig) -> Result<DMatrix<f64>> {
        let e = self.ellipsoid(log_axes)?;
        let (rows, cols) = (self.fitted.len(), log_axes.len());
        let mut jac = DMatrix::zeros(rows, cols);
        match cfg.jacobian {
            JacobianMode::Exact => {
                for (k, t) in self.fitted.iter().enumerate() {
                    for (j, l) in log_axes.iter().enumerate() {
                        jac[(k, j)] = dual_volume_log_derivative(&e, t.order, l.exp(), self.quadrature)? / t.value;
                    }
                }
            }
            JacobianMode::FiniteDifference => {
                for j in 0..cols {
                    let mut lp = log_axes.to_vec();
                    let mut lm = log_axes.to_vec();
                    lp[j] += cfg.fd_step;
                    lm[j] -= cfg.fd_step;
                    let rp = self.relative_residuals(&self.ellipsoid(&lp)?, &self.fitted)?;
                    let rm = self.relative_residuals(&self.ellipsoid(&lm)?, &self.fitted)?;
                    for k in 0..rows {
                        jac[(k, j)] = (rp[k] - rm[k]) / (2.0 * cfg.fd_step);
                    }
                }
            }
        }
        Ok(jac)
    }

    /// Runs both phases from one start; returns the candidate and its
    /// largest relative residual over all targets.
    fn solve_from(&self, x0: &[f64], seed: u64, cfg: &SolverConfig) -> Result<(Ellipsoid, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = x0.to_vec();
        let mut iterations = 0;
        let mut kicks = 0;
        let mut stop = SWITCH_RESIDUAL;
        let mut best: Option<(Vec<f64>, f64)> = None;
        loop {
            let run = self.levenberg_marquardt(x, stop, cfg.max_iterations - iterations, cfg)?;
            iterations += run.iterations;
            let lm_axes = self.log_axes(&run.x);
            let lm_res = max_abs(&self.relative_residuals(&self.ellipsoid(&lm_axes)?, self.targets)?);
            let mut pass = (lm_axes.clone(), lm_res);
            if let Some(polished) = self.refine(lm_axes, cfg) {
                if polished.1 <= lm_res {
                    pass = polished;
                }
            }
            let previous = best.as_ref().map_or(f64::INFINITY, |b| b.1);
            if pass.1 < previous {
                best = Some(pass);
            }
            let res = best.as_ref().map_or(f64::INFINITY, |b| b.1);
            if res <= 1e-4 * cfg.tolerance || iterations >= cfg.max_iterations {
                break;
            }
            if res < STALL_RESIDUAL {
                // Close to a solution: keep polishing while it pays off.
                if res > 0.5 * previous || run.iterations == 0 && stop == 0.0 {
                    break;
                }
                stop = 0.0;
                let best_axes = &best.as_ref().expect("set above").0;
                x = best_axes[..self.free_dim()].to_vec();
            } else if run.stalled {
                // Saddles on the set of repeated axes: perturb and retry.
                if kicks == MAX_KICKS {
                    break;
                }
                kicks += 1;
                x = run.x.iter().map(|v| v + rng.random_range(-0.1..0.1)).collect();
            } else if run.iterations == 0 {
                break;
            } else {
                x = run.x;
            }
        }
        let (mut log_axes, mut res) = best.expect("at least one pass");
        if res < STALL_RESIDUAL {
            if let Some((polished, r)) = self.polish(log_axes.clone(), cfg) {
                if r <= res {
                    (log_axes, res) = (polished, r);
                }
            }
        }
        Ok((self.ellipsoid(&log_axes)?, res))
    }

    /// Damped Gauss–Newton on the free coordinates until the fitted
    /// residual drops below `stop`, the budget runs out, or progress stalls.
    fn levenberg_marquardt(&self, mut x: Vec<f64>, stop: f64, budget: usize, cfg: &SolverConfig) -> Result<LmRun> {
        let free = x.len();
        let residuals = |x: &[f64]| self.relative_residuals(&self.ellipsoid(&self.log_axes(x))?, &self.fitted);
        let mut r = residuals(&x)?;
        let mut lambda = cfg.lambda0;
        let mut used = 0;
        let mut checkpoint = sum_sq(&r);
        let mut stalled = false;
        while used < budget && max_abs(&r) > stop.max(1e-15) {
            used += 1;
            let full = self.log_jacobian(&self.log_axes(&x), cfg)?;
            let jac = if self.log_product.is_some() {
                let last = full.column(free).clone_owned();
                DMatrix::from_fn(full.nrows(), free, |k, j| full[(k, j)] - last[k])
            } else {
                full
            };
            let diag: Vec<f64> = (0..free).map(|p| jac.column(p).norm_squared().max(1e-30)).collect();
            let current = sum_sq(&r);
            let mut accepted = false;
            while lambda <= 1e12 {
                // min ‖J δ + r‖² + λ Σ d_p δ_p², without forming JᵀJ.
                let rows = jac.nrows();
                let stacked = DMatrix::from_fn(rows + free, free, |k, j| {
                    if k < rows {
                        jac[(k, j)]
                    } else if k - rows == j {
                        (lambda * diag[j]).sqrt()
                    } else {
                        0.0
                    }
                });
                let rhs = DVector::from_fn(rows + free, |k, _| if k < rows { -r[k] } else { 0.0 });
                if let Some(step) = least_squares(stacked, rhs) {
                    let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
                    if let Ok(rt) = residuals(&trial) {
                        if sum_sq(&rt) < current {
                            x = trial;
                            r = rt;
                            lambda = (lambda / 10.0).max(1e-15);
                            accepted = true;
                            break;
                        }
                    }
                }
                lambda *= 10.0;
            }
            let far = max_abs(&r) > STALL_RESIDUAL;
            if !accepted {
                stalled = far;
                break;
            }
            if used % 10 == 0 {
                if far && sum_sq(&r) > 0.5 * checkpoint {
                    stalled = true;
                    break;
                }
                checkpoint = sum_sq(&r);
            }
        }
        Ok(LmRun { x, iterations: used, stalled })
    }

    /// Undamped Gauss–Newton in log-axes with a halving line search. Near
    /// clustered axes this resolves the last digits that root extraction
    /// from symmetric functions cannot.
    fn polish(&self, log_axes: Vec<f64>, cfg: &SolverConfig) -> Option<(Vec<f64>, f64)> {
        let free = self.free_dim();
        let mut x = log_axes[..free].to_vec();
        let residuals = |x: &[f64]| -> Option<Vec<f64>> {
            self.relative_residuals(&self.ellipsoid(&self.log_axes(x)).ok()?, &self.fitted).ok()
        };
        let mut r = residuals(&x)?;
        for _ in 0..20 {
            let full = self.log_jacobian(&self.log_axes(&x), cfg).ok()?;
            let jac = if self.log_product.is_some() {
                let last = full.column(free).clone_owned();
                DMatrix::from_fn(full.nrows(), free, |k, j| full[(k, j)] - last[k])
            } else {
                full
            };
            let rhs = DVector::from_iterator(r.len(), r.iter().map(|v| -v));
            let step = least_squares(jac, rhs)?;
            let current = sum_sq(&r);
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..10 {
                let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + t * b).collect();
                if let Some(rt) = residuals(&trial) {
                    if sum_sq(&rt) < current {
                        x = trial;
                        r = rt;
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        let full = self.log_axes(&x);
        let res = max_abs(&self.relative_residuals(&self.ellipsoid(&full).ok()?, self.targets).ok()?);
        Some((full, res))
    }

    /// Newton iteration in the relative coordinates `σ_m / σ_m⁰`,
    /// `σ_m = e_m(a_1², …, a_n²)`, in which the forward map stays regular
    /// across repeated axes. Axes are recovered as polynomial roots.
    fn refine(&self, mut log_axes: Vec<f64>, cfg: &SolverConfig) -> Option<(Vec<f64>, f64)> {
        let n = self.n;
        let mut r = self.relative_residuals(&self.ellipsoid(&log_axes).ok()?, &self.fitted).ok()?;
        for _ in 0..40 {
            if max_abs(&r) < 1e-15 {
                break;
            }
            let y: Vec<f64> = log_axes.iter().map(|l| (2.0 * l).exp()).collect();
            let sigma = elementary_symmetric(&y);
            // ∂σ_m/∂ ln a_j = 2 y_j e_{m−1}(y without y_j), scaled by 1/σ_m.
            let mut c = DMatrix::zeros(n, n);
            for j in 0..n {
                let others: Vec<f64> = y.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, v)| *v).collect();
                let e = elementary_symmetric(&others);
                for m in 1..=n {
                    c[(m - 1, j)] = 2.0 * y[j] * e[m - 1] / sigma[m];
                }
            }
            let jl = self.log_jacobian(&log_axes, cfg).ok()?;
            // J_σ = J_l C⁻¹, from Cᵀ J_σᵀ = J_lᵀ.
            let js = c.transpose().lu().solve(&jl.transpose())?.transpose();
            let free = if self.log_product.is_some() { n - 1 } else { n };
            let js = js.columns(0, free).clone_owned();
            let rhs = DVector::from_iterator(r.len(), r.iter().map(|v| -v));
            let step = least_squares(js, rhs)?;
            let current = sum_sq(&r);
            let mut accepted = false;
            let mut full_step = None;
            let mut t = 1.0;
            for _ in 0..30 {
                let trial_sigma: Vec<f64> = (1..=n)
                    .map(|m| if m <= free { sigma[m] * (1.0 + t * step[m - 1]) } else { sigma[m] })
                    .collect();
                if let Some(roots) = positive_roots_from_symmetric(&trial_sigma, &y) {
                    let trial: Vec<f64> = roots.iter().map(|v| 0.5 * v.ln()).collect();
                    if t == 1.0 {
                        full_step = Some(trial.clone());
                    }
                    if let Ok(e) = self.ellipsoid(&trial) {
                        if let Ok(rt) = self.relative_residuals(&e, &self.fitted) {
                            if sum_sq(&rt) < current {
                                log_axes = trial;
                                r = rt;
                                accepted = true;
                                break;
                            }
                        }
                    }
                }
                t *= 0.5;
            }
            if !accepted {
                // Root extraction near clustered axes can cost more digits
                // than the step gains; finish the full step in log-axes.
                let polished = full_step.and_then(|trial| self.polish(trial, cfg));
                let rt = polished.as_ref().and_then(|(l, _)| {
                    self.relative_residuals(&self.ellipsoid(l).ok()?, &self.fitted).ok()
                });
                match (polished, rt) {
                    (Some((l, _)), Some(rt)) if sum_sq(&rt) < current => {
                        log_axes = l;
                        r = rt;
                    }
                    _ => break,
                }
            }
        }
        let e = self.ellipsoid(&log_axes).ok()?;
        let res = max_abs(&self.relative_residuals(&e, self.targets).ok()?);
        Some((log_axes, res))
    }
}

/// Roots of `Π (y − y_j)` given `σ_m = e_m(y_1, …, y_n)`, paired with the
/// nearest previous roots; `None` unless all are real and positive.
fn positive_roots_from_symmetric(sigma: &[f64], previous: &[f64]) -> Option<Vec<f64>> {
    let n = sigma.len();
    // y^n + Σ b_k y^k with b_{n−m} = (−1)^m σ_m.
    let b: Vec<f64> = (0..n)
        .map(|k| {
            let m = n - k;
            if m % 2 == 0 { sigma[m - 1] } else { -sigma[m - 1] }
        })
        .collect();
    let companion = DMatrix::from_fn(n, n, |i, j| {
        if j == n - 1 {
            -b[i]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let poly = |y: f64| b.iter().rev().fold(1.0, |acc, c| acc * y + c);
    let dpoly = |y: f64| {
        let mut d = n as f64;
        for k in (1..n).rev() {
            d = d * y + k as f64 * b[k];
        }
        d
    };
    let mut roots = Vec::with_capacity(n);
    for z in companion.complex_eigenvalues().iter() {
        if !(z.re > 0.0) || z.im.abs() > 1e-3 * z.norm() {
            return None;
        }
        let mut y = z.re;
        for _ in 0..3 {
            let d = dpoly(y);
            if d == 0.0 {
                break;
            }
            let next = y - poly(y) / d;
            if next > 0.0 && poly(next).abs() < poly(y).abs() {
                y = next;
            } else {
                break;
            }
        }
        roots.push(y);
    }
    // Match roots to the previous ordering so that log-axes move continuously.
    let mut prev: Vec<(usize, f64)> = previous.iter().copied().enumerate().collect();
    prev.sort_by(|a, b| a.1.total_cmp(&b.1));
    roots.sort_by(|a, b| a.total_cmp(b));
    let mut out = vec![0.0; n];
    for ((j, _), root) in prev.into_iter().zip(roots) {
        out[j] = root;
    }
    Some(out)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn sum_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Minimum-norm least-squares solution through the SVD.
fn least_squares(a: DMatrix<f64>, b: DVector<f64>) -> Option<DVector<f64>> {
    let svd = a.svd(true, true);
    let tol = svd.singular_values.max() * 1e-15;
    let x = svd.solve(&b, tol).ok()?;
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Groups converged candidates into basins and applies the residual
/// thresholds to the best one.
fn summarize(candidates: Vec<(Ellipsoid, f64)>, tried: usize, cfg: &SolverConfig) -> Result<RecoverySolution> {
    let best = candidates
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .cloned()
        .ok_or(Error::Infeasible { residual: f64::INFINITY })?;
    // Near repeated axes the residual is quadratic in the axis error, so
    // the merge radius grows like the square root of the residual.
    let mut basins: Vec<(&Ellipsoid, f64)> = Vec::new();
    for (e, r) in &candidates {
        if *r <= cfg.tolerance
            && !basins.iter().any(|(b, rb)| {
                let radius = cfg.basin_tolerance.max(10.0 * r.max(*rb).sqrt());
                b.max_relative_axis_error(e).is_some_and(|d| d <= radius)
            })
        {
            basins.push((e, *r));
        }
    }
    let (ellipsoid, residual) = best;
    if residual > cfg.infeasible_threshold {
        return Err(Error::Infeasible { residual });
    }
    if residual > cfg.tolerance {
        return Err(Error::Ambiguous { residual });
    }
    Ok(RecoverySolution {
        ellipsoid,
        residual_max_rel: residual,
        starts_tried: tried,
        converged: true,
        distinct_basins_found: basins.len(),
    })
}

/// Dual-volume targets at orders `{−1, 3, 4}` equivalent to `(V_1, V_2, V_3)`.
pub fn r3_dual_targets(v1: f64, v2: f64, v3: f64) -> [(f64, f64); 3] {
    [
        (-1.0, 8.0 * std::f64::consts::PI * v2 / (9.0 * v3)),
        (3.0, v3),
        (4.0, v1 * v3 / 4.0),
    ]
}

/// Recovers a three-dimensional ellipsoid from its intrinsic volumes.
pub fn recover_r3(v1: f64, v2: f64, v3: f64, cfg: &SolverConfig) -> Result<RecoverySolution> {
    RecoveryProblem::r3(v1, v2, v3)?;
    let problem = RecoveryProblem::dual_volumes(3, &r3_dual_targets(v1, v2, v3))?;
    recover_dual(&problem, cfg)
}

/// Range of `ln a` scanned for unit-volume revolution ellipsoids.
const LOG_A_LIMIT: f64 = 8.0;

/// The unit-volume parameters `a` with `V_k(a, …, a, a^{1−n}) = level`,
/// one from each monotone side of the minimum at the ball.
fn unit_profile_roots(n: usize, k: usize, level: f64, cfg: &QuadratureConfig) -> Result<Vec<f64>> {
    let profile = |s: f64| unit_volume_profile(n, k, s.exp(), cfg);
    let floor = profile(0.0)?;
    let rel = (level - floor) / floor;
    if rel.abs() <= 1e-12 {
        return Ok(vec![1.0]);
    }
    if rel < 0.0 {
        return Ok(Vec::new());
    }
    let mut roots = Vec::new();
    for dir in [-1.0, 1.0] {
        let mut inner = 0.0;
        let mut outer: f64 = 0.0;
        let mut found = false;
        while outer.abs() < LOG_A_LIMIT {
            outer += dir * 0.5;
            if profile(outer)? >= level {
                found = true;
                break;
            }
            inner = outer;
        }
        if !found {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (inner + outer);
            if mid == inner || mid == outer {
                break;
            }
            if profile(mid)? >= level {
                outer = mid;
            } else {
                inner = mid;
            }
        }
        roots.push((0.5 * (inner + outer)).exp());
    }
    Ok(roots)
}

/// All ellipsoids of revolution `(a, …, a, b)` with the given `V_n` and `V_k`.
pub fn revolution_candidates(
    n: usize,
    k: usize,
    vn: f64,
    vk: f64,
    cfg: &QuadratureConfig,
) -> Result<Vec<RevolutionSpec>> {
    check_revolution_index(n, k)?;
    if !(vn > 0.0 && vk > 0.0) {
        return Err(Error::InvalidArgument("intrinsic volumes must be positive".into()));
    }
    let lambda = (vn / kappa(n)).powf(1.0 / n as f64);
    let level = vk / lambda.powi(k as i32);
    unit_profile_roots(n, k, level, cfg)?
        .into_iter()
        .map(|a| {
            let unit = RevolutionSpec::unit_volume(n, a)?;
            RevolutionSpec::new(n, lambda * unit.a, lambda * unit.b)
        })
        .collect()
}

fn select_revolution(
    n: usize,
    candidates: Vec<RevolutionSpec>,
    checks: &[(usize, f64)],
    cfg: &SolverConfig,
) -> Result<RecoverySolution> {
    let tried = candidates.len();
    let mut scored = Vec::with_capacity(tried);
    for c in candidates {
        let mut res = 0.0f64;
        for &(k, v) in checks {
            let got = v_k_revolution(&c, k, &cfg.quadrature)?;
            res = res.max(((got - v) / v).abs());
        }
        scored.push((c.ellipsoid()?, res));
    }
    if scored.is_empty() {
        return Err(Error::Infeasible { residual: f64::INFINITY });
    }
    debug_assert!(scored.iter().all(|(e, _)| e.dim() == n));
    summarize(scored, tried, cfg)
}

/// Recovers an ellipsoid of revolution from `(V_n, V_k, V_{n−k})`, `k ≠ n/2`.
pub fn recover_revolution(
    n: usize,
    k: usize,
    vn: f64,
    vk: f64,
    vnk: f64,
    cfg: &SolverConfig,
) -> Result<RecoverySolution> {
    cfg.validate()?;
    RecoveryProblem::revolution(n, k, vn, vk, vnk)?;
    let candidates = revolution_candidates(n, k, vn, vk, &cfg.quadrature)?;
    select_revolution(n, candidates, &[(k, vk), (n - k, vnk)], cfg)
}

/// Recovers an ellipsoid of revolution in even dimension from
/// `(V_n, V_{n/2}, V_k)`; the first two leave a polar pair of candidates.
pub fn recover_revolution_even(
    n: usize,
    vn: f64,
    vhalf: f64,
    vk: f64,
    k: usize,
    cfg: &SolverConfig,
) -> Result<RecoverySolution> {
    cfg.validate()?;
    RecoveryProblem::revolution_even(n, vn, vhalf, vk, k)?;
    let candidates = revolution_candidates(n, n / 2, vn, vhalf, &cfg.quadrature)?;
    select_revolution(n, candidates, &[(n / 2, vhalf), (k, vk)], cfg)
}

/// Two unit-volume parameters `a < 1 < b` whose ellipsoids of revolution
/// share `V_k`.
pub fn demonstrate_vk_nonuniqueness(n: usize, k: usize, cfg: &QuadratureConfig) -> Result<(f64, f64)> {
    check_revolution_index(n, k)?;
    let profile = |s: f64| unit_volume_profile(n, k, s.exp(), cfg);
    let s_min = golden_section_min(&profile, -2.0, 2.0)?;
    let left = s_min - 0.5;
    let level = profile(left)?;
    let mut inner = s_min;
    let mut outer = s_min + 0.5;
    while profile(outer)? < level {
        inner = outer;
        outer += 0.5;
        if outer > LOG_A_LIMIT {
            return Err(Error::Unsupported("profile does not grow on the right".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (inner + outer);
        if mid == inner || mid == outer {
            break;
        }
        if profile(mid)? >= level {
            outer = mid;
        } else {
            inner = mid;
        }
    }
    let right = if (profile(inner)? - level).abs() < (profile(outer)? - level).abs() {
        inner
    } else {
        outer
    };
    Ok((left.exp(), right.exp()))
}

fn golden_section_min<F: Fn(f64) -> Result<f64>>(f: &F, mut lo: f64, mut hi: f64) -> Result<f64> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while hi - lo > 1e-9 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intrinsic::v3_triple;
    use crate::special::kappa;

    fn ell(a: &[f64]) -> Ellipsoid {
        Ellipsoid::new(a.to_vec()).unwrap()
    }

    fn forward(e: &Ellipsoid, orders: &[f64]) -> Vec<(f64, f64)> {
        let cfg = QuadratureConfig::default();
        orders.iter().map(|&i| (i, dual_volume_at(e, i, &cfg).unwrap())).collect()
    }

    #[test]
    fn picks_up_ball_from_core_orders() {
        let b = Ellipsoid::ball(3, 1.0).unwrap();
        let p = RecoveryProblem::dual_volumes(3, &forward(&b, &[1.0, 2.0, 3.0])).unwrap();
        let s = recover_dual(&p, &SolverConfig::default()).unwrap();
        // The ball is a branch point of the forward map: the axis error is
        // of the order of the square root of the residual.
        assert!(s.ellipsoid.max_relative_axis_error(&b).unwrap() < 1e-5);
        assert_eq!(s.distinct_basins_found, 1);
    }

    #[test]
    fn round_trip_core_orders() {
        let e = ell(&[1.0, 2.0, 3.0]);
        let p = RecoveryProblem::dual_volumes(3, &forward(&e, &[1.0, 2.0, 3.0])).unwrap();
        let s = recover_dual(&p, &SolverConfig::default()).unwrap();
        assert!(s.ellipsoid.max_relative_axis_error(&e).unwrap() < 1e-6);
        assert_eq!(s.distinct_basins_found, 1);
        assert!(s.residual_max_rel <= 1e-8);
    }

    #[test]
    fn round_trip_mixed_orders() {
        let e = ell(&[0.7, 1.1, 1.5, 2.2]);
        let p = RecoveryProblem::dual_volumes(4, &forward(&e, &[-1.0, 0.5, 2.0, 4.0])).unwrap();
        let s = recover_dual(&p, &SolverConfig::default()).unwrap();
        assert!(s.ellipsoid.max_relative_axis_error(&e).unwrap() < 1e-6);
        assert_eq!(s.distinct_basins_found, 1);
    }

    #[test]
    fn admissibility() {
        let t = |o: &[f64]| o.iter().map(|&o| Target { order: o, value: 1.0 }).collect::<Vec<_>>();
        assert!(check_admissible(3, &t(&[-1.0, 1.0, 3.0])).is_ok());
        assert!(check_admissible(3, &t(&[-1.0, 3.0, 4.0])).is_ok());
        assert!(check_admissible(3, &t(&[1.0, 2.0, 4.0])).is_err());
        assert!(check_admissible(4, &t(&[-2.0, -3.0, 5.0, 4.0])).is_ok());
        assert!(check_admissible(4, &t(&[-3.0, 1.0, 2.0, 4.0])).is_err());
        assert!(RecoveryProblem::dual_volumes(3, &[(1.0, 1.0), (1.0, 2.0), (2.0, 1.0)]).is_err());
        assert!(RecoveryProblem::dual_volumes(3, &[(1.0, 1.0), (2.0, 2.0)]).is_err());
    }

    #[test]
    fn inconsistent_targets_are_infeasible() {
        let p = RecoveryProblem::dual_volumes(2, &[(1.0, 10.0), (2.0, 1.0)]).unwrap();
        let cfg = SolverConfig {
            starts: 4,
            ..SolverConfig::default()
        };
        assert!(matches!(recover_dual(&p, &cfg), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn r3_ball_and_scaled_ball() {
        let pi = std::f64::consts::PI;
        let cfg = SolverConfig::default();
        let s = recover_r3(4.0, 2.0 * pi, 4.0 * pi / 3.0, &cfg).unwrap();
        assert!(s.ellipsoid.max_relative_axis_error(&Ellipsoid::ball(3, 1.0).unwrap()).unwrap() < 1e-4);
        let l: f64 = 1.7;
        let s = recover_r3(4.0 * l, 2.0 * pi * l * l, 4.0 * pi / 3.0 * l.powi(3), &cfg).unwrap();
        assert!(s.ellipsoid.max_relative_axis_error(&Ellipsoid::ball(3, l).unwrap()).unwrap() < 1e-4);
    }

    #[test]
    fn r3_round_trip() {
        let e = ell(&[1.0, 2.0, 3.0]);
        let cfg = SolverConfig::default();
        let [v1, v2, v3] = v3_triple(&e, &cfg.quadrature).unwrap();
        let s = recover_r3(v1, v2, v3, &cfg).unwrap();
        assert!(s.ellipsoid.max_relative_axis_error(&e).unwrap() < 1e-6);
    }

    #[test]
    fn revolution_round_trip() {
        let cfg = SolverConfig::default();
        let q = &cfg.quadrature;
        let spec = RevolutionSpec::new(3, 1.3, 1.0 / 1.69).unwrap();
        let v = |k| v_k_revolution(&spec, k, q).unwrap();
        let s = recover_revolution(3, 1, v(3), v(1), v(2), &cfg).unwrap();
        assert!(s.ellipsoid.max_relative_axis_error(&spec.ellipsoid().unwrap()).unwrap() < 1e-6);
        assert_eq!(s.distinct_basins_found, 1);
        assert!(RecoveryProblem::revolution(4, 2, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn revolution_ball() {
        let cfg = SolverConfig::default();
        let spec = RevolutionSpec::new(3, 1.0, 1.0).unwrap();
        let v = |k| v_k_revolution(&spec, k, &cfg.quadrature).unwrap();
        let s = recover_revolution(3, 2, v(3), v(2), v(1), &cfg).unwrap();
        assert!(s.ellipsoid.max_relative_axis_error(&Ellipsoid::ball(3, 1.0).unwrap()).unwrap() < 1e-6);
    }

    #[test]
    fn even_revolution_round_trip() {
        let cfg = SolverConfig::default();
        let spec = RevolutionSpec::unit_volume(4, 1.2).unwrap();
        let v = |k| v_k_revolution(&spec, k, &cfg.quadrature).unwrap();
        let s = recover_revolution_even(4, v(4), v(2), v(1), 1, &cfg).unwrap();
        assert!(s.ellipsoid.max_relative_axis_error(&spec.ellipsoid().unwrap()).unwrap() < 1e-6);
        let cands = revolution_candidates(4, 2, v(4), v(2), &cfg.quadrature).unwrap();
        assert_eq!(cands.len(), 2);
        let ball = Ellipsoid::ball(4, 1.0).unwrap();
        let s = recover_revolution_even(4, kappa(4), v_k_revolution(&RevolutionSpec::new(4, 1.0, 1.0).unwrap(), 2, &cfg.quadrature).unwrap(), v_k_revolution(&RevolutionSpec::new(4, 1.0, 1.0).unwrap(), 3, &cfg.quadrature).unwrap(), 3, &cfg).unwrap();
        assert!(s.ellipsoid.max_relative_axis_error(&ball).unwrap() < 1e-6);
    }

    #[test]
    fn nonuniqueness_pairs() {
        let cfg = QuadratureConfig::default();
        for (n, k) in [(3, 1), (3, 2), (2, 1), (4, 1)] {
            let (a, b) = demonstrate_vk_nonuniqueness(n, k, &cfg).unwrap();
            let va = unit_volume_profile(n, k, a, &cfg).unwrap();
            let vb = unit_volume_profile(n, k, b, &cfg).unwrap();
            assert!((va - vb).abs() <= 1e-8, "n={n} k={k}: {va} {vb}");
            assert!((a - b).abs() >= 0.05);
        }
    }
}
