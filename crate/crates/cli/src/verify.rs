use clap::{Args, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use dualvol::dual::{
    dual_relation_gap, dual_steiner_polynomial, dual_volume_at, dual_volume_oracle_many, radial_sum_volume_oracle,
};
use dualvol::inverse::{recover_dual, RecoveryProblem, SolverConfig};
use dualvol::moments::{count_positive_roots, gap_polynomial, gap_polynomial_constrained, GapConstraint, RootCount};
use dualvol::{DualOrder, Ellipsoid, QuadratureConfig};

use crate::error::{CliError, VERIFY_FAILED};
use crate::GlobalOpts;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Duality,
    Oracle,
    Moments,
    Recovery,
    Steiner,
    All,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    pub suite: Suite,
    /// Trials per dimension; each suite has its own default.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Monte Carlo samples for the oracle and Steiner suites.
    #[arg(long, default_value_t = 200_000)]
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Property {
    pub suite: &'static str,
    pub name: &'static str,
    pub cases: usize,
    pub worst: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Property {
    fn at_most(suite: &'static str, name: &'static str, cases: usize, worst: f64, threshold: f64) -> Self {
        Self {
            suite,
            name,
            cases,
            worst,
            threshold,
            passed: worst <= threshold,
        }
    }
}

#[derive(Debug, Serialize)]
struct Report {
    seed: u64,
    passed: bool,
    properties: Vec<Property>,
}

struct Ctx {
    rng: ChaCha8Rng,
    cfg: QuadratureConfig,
    samples: usize,
}

impl Ctx {
    /// Semi-axes log-uniform in [0.5, 2].
    fn axes(&mut self, n: usize) -> Vec<f64> {
        (0..n)
            .map(|_| self.rng.random_range(-std::f64::consts::LN_2..std::f64::consts::LN_2).exp())
            .collect()
    }

    fn ellipsoid(&mut self, n: usize) -> Result<Ellipsoid, CliError> {
        Ok(Ellipsoid::new(self.axes(n))?)
    }
}

fn duality(ctx: &mut Ctx, trials: usize) -> Result<Vec<Property>, CliError> {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for n in 2..=5 {
        let mut orders = vec![-3.5, -2.0, -1.0];
        orders.extend((1..=2 * n + 7).map(|j| 0.5 * j as f64));
        for _ in 0..trials {
            let e = ctx.ellipsoid(n)?;
            for &i in &orders {
                if DualOrder::new(i, n).is_err() {
                    continue;
                }
                worst = worst.max(dual_relation_gap(&e, i, &ctx.cfg)?);
                cases += 1;
            }
        }
    }
    Ok(vec![Property::at_most("duality", "polar-relation-gap", cases, worst, 1e-8)])
}

fn oracle(ctx: &mut Ctx, trials: usize) -> Result<Vec<Property>, CliError> {
    let mut outside = 0usize;
    let mut cases = 0usize;
    for n in 2..=5 {
        let nf = n as f64;
        let orders = [-3.0, -2.0, -1.0, 0.5 * nf, nf, nf + 1.0, nf + 2.0, nf + 3.0];
        for _ in 0..trials {
            let e = ctx.ellipsoid(n)?;
            let seed = ctx.rng.random();
            let mc = dual_volume_oracle_many(&e, &orders, ctx.samples, seed)?;
            for (&i, est) in orders.iter().zip(&mc) {
                let v = dual_volume_at(&e, i, &ctx.cfg)?;
                let z = (v - est.estimate).abs() / est.stderr;
                outside += usize::from(z > 3.0);
                cases += 1;
            }
        }
    }
    let fraction = outside as f64 / cases.max(1) as f64;
    Ok(vec![Property::at_most(
        "oracle",
        "fraction-outside-3-stderr",
        cases,
        fraction,
        0.01,
    )])
}

/// A second ellipsoid with the same volume as `e`, random otherwise.
fn equal_volume_partner(ctx: &mut Ctx, e: &Ellipsoid) -> Result<Ellipsoid, CliError> {
    let n = e.dim();
    let candidate = ctx.ellipsoid(n)?;
    let scale = (e.axis_product() / candidate.axis_product()).powf(1.0 / n as f64);
    Ok(candidate.scaled(scale)?)
}

/// A partner with the same volume and the same Σ a_j^{−2}, or `None` when
/// the random draw admits no such partner.
fn anchored_partner(ctx: &mut Ctx, e: &Ellipsoid) -> Result<Option<Ellipsoid>, CliError> {
    let n = e.dim();
    let rest = ctx.axes(n - 2);
    let s = e.semi_axes().iter().map(|a| a.powi(-2)).sum::<f64>() - rest.iter().map(|b| b.powi(-2)).sum::<f64>();
    let p = (rest.iter().product::<f64>() / e.axis_product()).powi(2);
    let disc = s * s - 4.0 * p;
    if !(s > 0.0 && disc > 0.0) {
        return Ok(None);
    }
    let x = 0.5 * (s + disc.sqrt());
    let y = p / x;
    let mut axes = rest;
    axes.push(x.powf(-0.5));
    axes.push(y.powf(-0.5));
    Ok(Some(Ellipsoid::new(axes)?))
}

fn roots(count: RootCount) -> usize {
    count.roots().unwrap_or(usize::MAX)
}

fn moments(ctx: &mut Ctx, trials: usize) -> Result<Vec<Property>, CliError> {
    let mut excess = f64::NEG_INFINITY;
    let mut anchored_excess = f64::NEG_INFINITY;
    let (mut cases, mut anchored_cases) = (0, 0);
    for n in 2..=6 {
        for _ in 0..trials {
            let e = ctx.ellipsoid(n)?;
            let f = equal_volume_partner(ctx, &e)?;
            let r = roots(count_positive_roots(&gap_polynomial(&e, &f)?));
            excess = excess.max(r as f64 - (n as f64 - 2.0));
            cases += 1;
        }
        if n < 3 {
            continue;
        }
        let mut done = 0;
        while done < trials {
            let e = ctx.ellipsoid(n)?;
            let Some(f) = anchored_partner(ctx, &e)? else {
                continue;
            };
            let p = gap_polynomial_constrained(&e, &f, GapConstraint::AnchoredMinus2)?;
            let r = roots(count_positive_roots(&p));
            anchored_excess = anchored_excess.max(r as f64 - (n as f64 - 3.0));
            done += 1;
            anchored_cases += 1;
        }
    }
    Ok(vec![
        Property::at_most("moments", "roots-minus-(n-2)", cases, excess, 0.0),
        Property::at_most("moments", "anchored-roots-minus-(n-3)", anchored_cases, anchored_excess, 0.0),
    ])
}

fn recovery(ctx: &mut Ctx, trials: usize, seed: u64) -> Result<Vec<Property>, CliError> {
    let mut worst = 0.0f64;
    let mut basins = 0usize;
    let mut cases = 0;
    let solver = SolverConfig {
        seed,
        quadrature: ctx.cfg,
        ..SolverConfig::default()
    };
    for n in 2..=5 {
        for _ in 0..trials {
            let e = ctx.ellipsoid(n)?;
            let mut targets = Vec::with_capacity(n);
            for i in 1..=n {
                targets.push((i as f64, dual_volume_at(&e, i as f64, &ctx.cfg)?));
            }
            let s = recover_dual(&RecoveryProblem::dual_volumes(n, &targets)?, &solver)?;
            worst = worst.max(s.ellipsoid.max_relative_axis_error(&e).unwrap_or(f64::INFINITY));
            basins = basins.max(s.distinct_basins_found);
            cases += 1;
        }
    }
    Ok(vec![
        Property::at_most("recovery", "max-relative-axis-error", cases, worst, 1e-6),
        Property::at_most("recovery", "max-distinct-basins", cases, basins as f64, 1.0),
    ])
}

fn steiner(ctx: &mut Ctx, trials: usize) -> Result<Vec<Property>, CliError> {
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let e = ctx.ellipsoid(3)?;
        let eps = ctx.rng.random_range(0.1..2.0);
        let seed = ctx.rng.random();
        let exact = dual_steiner_polynomial(&e, eps, &ctx.cfg)?;
        let mc = radial_sum_volume_oracle(&e, eps, ctx.samples, seed)?;
        let allowed = (1e-7 * exact).max(3.0 * mc.stderr);
        worst = worst.max((exact - mc.estimate).abs() / allowed);
    }
    Ok(vec![Property::at_most(
        "steiner",
        "deviation-over-allowance",
        trials,
        worst,
        1.0,
    )])
}

pub fn run(args: &VerifyArgs, global: &GlobalOpts) -> Result<(), CliError> {
    let suites = match args.suite {
        Suite::All => vec![Suite::Duality, Suite::Oracle, Suite::Moments, Suite::Recovery, Suite::Steiner],
        one => vec![one],
    };
    if args.trials == Some(0) {
        return Err(CliError::invalid("--trials must be positive"));
    }
    let cfg = global.quadrature()?;
    let mut properties = Vec::new();
    for suite in suites {
        let stream = global.seed.wrapping_add((suite as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut ctx = Ctx {
            rng: ChaCha8Rng::seed_from_u64(stream),
            cfg,
            samples: args.samples,
        };
        let found = match suite {
            Suite::Duality => duality(&mut ctx, args.trials.unwrap_or(20))?,
            Suite::Oracle => oracle(&mut ctx, args.trials.unwrap_or(5))?,
            Suite::Moments => moments(&mut ctx, args.trials.unwrap_or(100))?,
            Suite::Recovery => recovery(&mut ctx, args.trials.unwrap_or(3), stream)?,
            Suite::Steiner => steiner(&mut ctx, args.trials.unwrap_or(10))?,
            Suite::All => unreachable!(),
        };
        properties.extend(found);
    }
    let passed = properties.iter().all(|p| p.passed);
    let report = Report {
        seed: global.seed,
        passed,
        properties,
    };
    if global.json {
        let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::io("json", e))?;
        println!("{text}");
    } else {
        for p in &report.properties {
            println!(
                "{} suite={} property={} cases={} worst={:e} threshold={:e}",
                if p.passed { "PASS" } else { "FAIL" },
                p.suite,
                p.name,
                p.cases,
                p.worst,
                p.threshold
            );
        }
    }
    if passed {
        Ok(())
    } else {
        Err(CliError::new(VERIFY_FAILED, "one or more properties failed"))
    }
}
