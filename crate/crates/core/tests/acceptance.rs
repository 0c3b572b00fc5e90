//! End-to-end acceptance run: one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dualvol::dual::{
    dual_relation_gap, dual_steiner_polynomial, dual_volume_at, dual_volume_oracle,
    dual_volume_via_fractional_derivative, f_profile, fractional_derivative_at_zero, radial_sum_volume_oracle,
};
use dualvol::intrinsic::{unit_volume_profile, v3_triple, v_k_revolution, v_k_zonoid_mc, v_n, v_via_kz};
use dualvol::inverse::{
    demonstrate_vk_nonuniqueness, recover_dual, recover_r3, recover_revolution, recover_revolution_even,
    RecoveryProblem, SolverConfig,
};
use dualvol::moments::{count_positive_roots, gap_polynomial, gap_polynomial_constrained, GapConstraint};
use dualvol::special::gamma;
use dualvol::{Ellipsoid, QuadratureConfig, RevolutionSpec};

type Outcome = Result<String, String>;

fn cfg() -> QuadratureConfig {
    QuadratureConfig::default()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn log_uniform_axes(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-(2f64.ln())..2f64.ln()).exp()).collect()
}

fn random_ellipsoid(rng: &mut ChaCha8Rng, n: usize) -> Ellipsoid {
    Ellipsoid::new(log_uniform_axes(rng, n)).unwrap()
}

fn check(ok: bool, summary: String) -> Outcome {
    if ok {
        Ok(summary)
    } else {
        Err(summary)
    }
}

/// One order inside each regime, in regime order.
fn regime_orders(rng: &mut ChaCha8Rng, n: usize) -> [f64; 8] {
    let nf = n as f64;
    [
        rng.random_range(-3.9..-2.1),
        -2.0,
        rng.random_range(-1.9..-0.1),
        rng.random_range(0.1..nf - 0.1),
        nf,
        rng.random_range(nf + 0.1..nf + 1.9),
        nf + 2.0,
        rng.random_range(nf + 2.1..nf + 3.9),
    ]
}

fn oracle_agreement() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut inside, mut total) = (0, 0);
    for n in 2..=5 {
        for t in 0..20 {
            let e = random_ellipsoid(&mut rng, n);
            let orders = regime_orders(&mut rng, n);
            // Independent directions per order keep the cases independent.
            for (j, i) in orders.iter().enumerate() {
                let seed = 1000 + 8 * t + j as u64;
                let est = dual_volume_oracle(&e, *i, 1_000_000, seed).map_err(|e| e.to_string())?;
                let v = dual_volume_at(&e, *i, &cfg()).map_err(|e| e.to_string())?;
                inside += usize::from(est.agrees_with(v, 3.0));
                total += 1;
            }
        }
    }
    let frac = inside as f64 / total as f64;
    let secs = start.elapsed().as_secs_f64();
    check(frac >= 0.99 && secs <= 120.0, format!("{inside}/{total} within 3·stderr ({:.2}%)", 100.0 * frac))
}

fn duality_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for n in 2..=5 {
        let nf = n as f64;
        let orders = [-3.5, -2.5, -1.0, 0.5, 0.5 * nf, nf - 0.5, nf + 0.5, nf + 1.0, nf + 2.5, nf + 3.5];
        for _ in 0..20 {
            let e = random_ellipsoid(&mut rng, n);
            for i in orders {
                worst = worst.max(dual_relation_gap(&e, i, &cfg()).map_err(|e| e.to_string())?);
            }
        }
    }
    check(worst <= 1e-8, format!("max relative gap {worst:.2e}"))
}

fn closed_form_anchors() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst_limit, mut worst_z) = (0.0f64, 0.0f64);
    for n in 2..=5 {
        for t in 0..5 {
            let e = random_ellipsoid(&mut rng, n);
            for point in [-2.0, n as f64 + 2.0] {
                let exact = dual_volume_at(&e, point, &cfg()).map_err(|e| e.to_string())?;
                for side in [-1e-6, 1e-6] {
                    let near = dual_volume_at(&e, point + side, &cfg()).map_err(|e| e.to_string())?;
                    worst_limit = worst_limit.max(rel(near, exact));
                }
                let mc = dual_volume_oracle(&e, point, 1_000_000, 3000 + t).map_err(|e| e.to_string())?;
                worst_z = worst_z.max((mc.estimate - exact).abs() / mc.stderr);
            }
        }
    }
    check(
        worst_limit <= 1e-4 && worst_z <= 3.0,
        format!("limit deviation {worst_limit:.2e}, oracle |z| ≤ {worst_z:.2}"),
    )
}

fn fractional_derivative_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let mut worst_raw = 0.0f64;
    let n = 3.0;
    for _ in 0..10 {
        let e = random_ellipsoid(&mut rng, 3);
        let slope = -0.5 * e.semi_axes().iter().map(|a| a.powi(-2)).sum::<f64>();
        for i in [-1.5f64, -0.5, 1.0, 2.5] {
            let dispatch = dual_volume_at(&e, i, &cfg()).map_err(|e| e.to_string())?;
            let via = dual_volume_via_fractional_derivative(&e, i, &cfg()).map_err(|e| e.to_string())?;
            worst = worst.max(rel(via, dispatch));
            // The generic operator on f itself, with its Taylor data at 0.
            let q = -i / 2.0;
            let taylor = [1.0, slope];
            let d = fractional_derivative_at_zero(|t| f_profile(&e, t), q, &taylor, n / 2.0, &cfg())
                .map_err(|e| e.to_string())?;
            let raw = 2.0 * PI.powf(n / 2.0) / (n * gamma((n - i) / 2.0).unwrap()) * d;
            worst_raw = worst_raw.max(rel(raw, dispatch));
        }
    }
    check(
        worst <= 1e-8 && worst_raw <= 1e-8,
        format!("remainder route {worst:.2e}, generic operator {worst_raw:.2e}"),
    )
}

fn dual_steiner_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for t in 0..10 {
        let e = random_ellipsoid(&mut rng, 3);
        let eps = rng.random_range(0.1..2.0);
        let exact = dual_steiner_polynomial(&e, eps, &cfg()).map_err(|e| e.to_string())?;
        let mc = radial_sum_volume_oracle(&e, eps, 1_000_000, 5000 + t).map_err(|e| e.to_string())?;
        let allowed = (1e-7 * exact).max(3.0 * mc.stderr);
        worst = worst.max((exact - mc.estimate).abs() / allowed);
    }
    check(worst <= 1.0, format!("worst deviation {worst:.2} of the allowance"))
}

fn dual_round_trip() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let solver = SolverConfig::default();
    let mut summary = Vec::new();
    let mut ok = true;
    for n in 2..=5 {
        let (mut worst, mut basins) = (0.0f64, 0);
        for _ in 0..50 {
            let e = random_ellipsoid(&mut rng, n);
            let targets: Vec<(f64, f64)> = (1..=n)
                .map(|i| (i as f64, dual_volume_at(&e, i as f64, &cfg()).unwrap()))
                .collect();
            let problem = RecoveryProblem::dual_volumes(n, &targets).map_err(|e| e.to_string())?;
            match recover_dual(&problem, &solver) {
                Ok(s) => {
                    worst = worst.max(s.ellipsoid.max_relative_axis_error(&e).unwrap());
                    basins = basins.max(s.distinct_basins_found);
                }
                Err(err) => return Err(format!("n = {n}: {err}")),
            }
        }
        ok &= worst <= 1e-6 && basins == 1;
        summary.push(format!("n={n}: err {worst:.1e}, basins {basins}"));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs <= 300.0;
    check(ok, format!("{} ({secs:.0} s)", summary.join("; ")))
}

/// Same volume and the same `Σ a_j^{−2}` as `e`, when the draw allows it.
fn anchored_partner(rng: &mut ChaCha8Rng, e: &Ellipsoid) -> Option<Ellipsoid> {
    let n = e.dim();
    let rest = log_uniform_axes(rng, n - 2);
    let s = e.semi_axes().iter().map(|a| a.powi(-2)).sum::<f64>() - rest.iter().map(|b| b.powi(-2)).sum::<f64>();
    let p = (rest.iter().product::<f64>() / e.axis_product()).powi(2);
    let disc = s * s - 4.0 * p;
    if !(s > 0.0 && disc > 0.0) {
        return None;
    }
    let x = 0.5 * (s + disc.sqrt());
    let mut axes = rest;
    axes.push(x.powf(-0.5));
    axes.push((p / x).powf(-0.5));
    Ellipsoid::new(axes).ok()
}

fn sign_change_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut ok = true;
    let mut summary = Vec::new();
    for n in 2..=6 {
        let mut max_roots = 0;
        for _ in 0..100 {
            let e = random_ellipsoid(&mut rng, n);
            let f = random_ellipsoid(&mut rng, n);
            let f = f.scaled((e.axis_product() / f.axis_product()).powf(1.0 / n as f64)).unwrap();
            let p = gap_polynomial(&e, &f).map_err(|e| e.to_string())?;
            max_roots = max_roots.max(count_positive_roots(&p).roots().unwrap_or(usize::MAX));
        }
        ok &= max_roots <= n - 2;
        let mut line = format!("n={n}: ≤{max_roots}");
        if n >= 3 {
            let mut max_anchored = 0;
            let mut done = 0;
            while done < 100 {
                let e = random_ellipsoid(&mut rng, n);
                let Some(f) = anchored_partner(&mut rng, &e) else { continue };
                let p = gap_polynomial_constrained(&e, &f, GapConstraint::AnchoredMinus2).map_err(|e| e.to_string())?;
                max_anchored = max_anchored.max(count_positive_roots(&p).roots().unwrap_or(usize::MAX));
                done += 1;
            }
            ok &= max_anchored <= n - 3;
            line.push_str(&format!(" anchored ≤{max_anchored}"));
        }
        summary.push(line);
    }
    check(ok, summary.join("; "))
}

fn ball_values() -> Outcome {
    let ball = Ellipsoid::ball(3, 1.0).unwrap();
    let t = v3_triple(&ball, &cfg()).map_err(|e| e.to_string())?;
    let expected = [4.0, 2.0 * PI, 4.0 * PI / 3.0];
    let worst = t.iter().zip(&expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let mc1 = v_k_zonoid_mc(&ball, 1, 1_000_000, 81).map_err(|e| e.to_string())?;
    let mc2 = v_k_zonoid_mc(&ball, 2, 1_000_000, 82).map_err(|e| e.to_string())?;
    let z1 = (mc1.estimate - 4.0).abs() / mc1.stderr;
    let z2 = (mc2.estimate - 2.0 * PI).abs() / mc2.stderr;
    check(
        worst <= 1e-10 && z1 <= 3.0 && z2 <= 3.0,
        format!("triple error {worst:.1e}; zonoid |z| = {z1:.2}, {z2:.2}"),
    )
}

fn r3_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let solver = SolverConfig::default();
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let e = random_ellipsoid(&mut rng, 3);
        let [v1, v2, v3] = v3_triple(&e, &cfg()).map_err(|e| e.to_string())?;
        let s = recover_r3(v1, v2, v3, &solver).map_err(|e| e.to_string())?;
        worst = worst.max(s.ellipsoid.max_relative_axis_error(&e).unwrap());
    }
    check(worst <= 1e-6, format!("max axis error {worst:.2e}"))
}

fn revolution_round_trips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let solver = SolverConfig::default();
    let q = cfg();
    let mut worst = 0.0f64;
    let mut cases = 0;
    for n in 3..=5 {
        for k in 1..n {
            if 2 * k == n {
                continue;
            }
            for _ in 0..3 {
                let a = rng.random_range(-(2f64.ln())..2f64.ln()).exp();
                let b = rng.random_range(-(2f64.ln())..2f64.ln()).exp();
                let spec = RevolutionSpec::new(n, a, b).unwrap();
                let e = spec.ellipsoid().unwrap();
                let vk = v_k_revolution(&spec, k, &q).unwrap();
                let vnk = v_k_revolution(&spec, n - k, &q).unwrap();
                let s = recover_revolution(n, k, v_n(&e), vk, vnk, &solver)
                    .map_err(|err| format!("n={n}, k={k}, (a,b)=({a},{b}): {err}"))?;
                worst = worst.max(s.ellipsoid.max_relative_axis_error(&e).unwrap());
                cases += 1;
            }
        }
    }
    let mut worst_even = 0.0f64;
    for _ in 0..5 {
        let a = rng.random_range(-(2f64.ln())..2f64.ln()).exp();
        let b = rng.random_range(-(2f64.ln())..2f64.ln()).exp();
        let spec = RevolutionSpec::new(4, a, b).unwrap();
        let e = spec.ellipsoid().unwrap();
        let v2 = v_k_revolution(&spec, 2, &q).unwrap();
        let v1 = v_k_revolution(&spec, 1, &q).unwrap();
        let s = recover_revolution_even(4, v_n(&e), v2, v1, 1, &solver).map_err(|e| e.to_string())?;
        worst_even = worst_even.max(s.ellipsoid.max_relative_axis_error(&e).unwrap());
    }
    check(
        worst <= 1e-6 && worst_even <= 1e-6,
        format!("{cases} odd-index cases err {worst:.2e}; (V4,V2,V1) err {worst_even:.2e}"),
    )
}

fn nonuniqueness() -> Outcome {
    let q = cfg();
    let mut lines = Vec::new();
    let mut ok = true;
    for k in [1, 2] {
        let (a, b) = demonstrate_vk_nonuniqueness(3, k, &q).map_err(|e| e.to_string())?;
        let diff = (unit_volume_profile(3, k, a, &q).unwrap() - unit_volume_profile(3, k, b, &q).unwrap()).abs();
        ok &= diff <= 1e-8 && (a - b).abs() >= 0.05;
        // Sweep grid 0.2:5:200, as written by the command-line sweep.
        let values: Vec<f64> = (0..200)
            .map(|j| {
                let a = if j == 199 { 5.0 } else { 0.2 + 4.8 * j as f64 / 199.0 };
                unit_volume_profile(3, k, a, &q).unwrap()
            })
            .collect();
        let turns = values.windows(3).filter(|w| (w[1] - w[0]).signum() != (w[2] - w[1]).signum()).count();
        let argmin = values
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.total_cmp(y.1))
            .map(|(j, _)| j)
            .unwrap();
        let unimodal = turns == 1 && argmin > 0 && argmin < 199;
        ok &= unimodal;
        lines.push(format!(
            "k={k}: a={a:.4}, b={b:.4}, |ΔV_k|={diff:.1e}, unimodal={unimodal}"
        ));
    }
    check(ok, lines.join("; "))
}

fn cross_route_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let q = cfg();
    let (mut worst_rev, mut worst_kz) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let a = rng.random_range(-(2f64.ln())..2f64.ln()).exp();
        let b = rng.random_range(-(2f64.ln())..2f64.ln()).exp();
        let spec = RevolutionSpec::new(3, a, b).unwrap();
        let t = v3_triple(&spec.ellipsoid().unwrap(), &q).unwrap();
        for k in 1..=3 {
            worst_rev = worst_rev.max(rel(v_k_revolution(&spec, k, &q).unwrap(), t[k - 1]));
        }
        let e = random_ellipsoid(&mut rng, 3);
        let t = v3_triple(&e, &q).unwrap();
        for k in 1..=2 {
            worst_kz = worst_kz.max(rel(v_via_kz(&e, k, &q).unwrap(), t[k - 1]));
        }
    }
    check(
        worst_rev <= 1e-7 && worst_kz <= 1e-8,
        format!("revolution vs triple {worst_rev:.1e}; polar route vs triple {worst_kz:.1e}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("oracle agreement", oracle_agreement),
        ("duality identity", duality_identity),
        ("closed-form anchors", closed_form_anchors),
        ("fractional-derivative consistency", fractional_derivative_consistency),
        ("dual Steiner identity", dual_steiner_identity),
        ("dual-volume round trip", dual_round_trip),
        ("sign-change bound", sign_change_bound),
        ("ball values", ball_values),
        ("intrinsic-volume round trip in R^3", r3_round_trip),
        ("revolution round trips", revolution_round_trips),
        ("revolution non-uniqueness", nonuniqueness),
        ("cross-route intrinsic consistency", cross_route_consistency),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS criterion {:>2} {name}: {msg} [{secs:.1} s]", k + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {:>2} {name}: {msg} [{secs:.1} s]", k + 1);
            }
        }
    }
    println!("acceptance: {} of 12 criteria passed", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
