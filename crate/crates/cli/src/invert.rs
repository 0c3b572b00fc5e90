use std::io::Read;

use clap::{ArgGroup, Args, ValueEnum};
use serde::Serialize;

use dualvol::inverse::{
    recover_dual, recover_r3, recover_revolution, recover_revolution_even, JacobianMode, RecoveryProblem,
    RecoverySolution, SolverConfig,
};
use dualvol::Error;

use crate::compute::ComputeReport;
use crate::error::CliError;
use crate::GlobalOpts;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Jacobian {
    Exact,
    Fd,
}

#[derive(Debug, Args)]
#[command(group(
    ArgGroup::new("mode").required(true).args(["dim", "r3", "revolution", "from_json"])
))]
pub struct InvertArgs {
    /// Dimension of a dual-volume problem; needs --orders and --values.
    #[arg(long, requires_all = ["orders", "values"])]
    pub dim: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub orders: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub values: Vec<f64>,

    /// Recover an ellipsoid in ℝ³ from (V_1, V_2, V_3).
    #[arg(long, requires_all = ["v1", "v2", "v3"])]
    pub r3: bool,
    #[arg(long)]
    pub v1: Option<f64>,
    #[arg(long)]
    pub v2: Option<f64>,
    #[arg(long)]
    pub v3: Option<f64>,

    /// Ellipsoid of revolution in ℝⁿ from (V_n, V_k, V_{n−k}); when 2k = n,
    /// from (V_n, V_k, V_j) with --j and --vj instead of --vnk.
    #[arg(long, num_args = 2, value_names = ["N", "K"], requires_all = ["vn", "vk"])]
    pub revolution: Option<Vec<usize>>,
    #[arg(long)]
    pub vn: Option<f64>,
    #[arg(long)]
    pub vk: Option<f64>,
    #[arg(long)]
    pub vnk: Option<f64>,
    #[arg(long)]
    pub j: Option<usize>,
    #[arg(long)]
    pub vj: Option<f64>,

    /// Read `compute --json` output from a file, or `-` for stdin.
    #[arg(long, value_name = "PATH")]
    pub from_json: Option<String>,

    #[arg(long, default_value_t = 20)]
    pub starts: usize,
    #[arg(long, default_value_t = 200)]
    pub max_iterations: usize,
    #[arg(long, value_enum, default_value_t = Jacobian::Exact)]
    pub jacobian: Jacobian,
}

#[derive(Debug, Serialize)]
struct InvertReport {
    status: &'static str,
    dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    axes: Option<Vec<f64>>,
    residual_max_rel: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    distinct_basins_found: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    starts_tried: Option<usize>,
}

fn read_report(path: &str) -> Result<ComputeReport, CliError> {
    let mut text = String::new();
    if path == "-" {
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| CliError::io("stdin", e))?;
    } else {
        text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    }
    serde_json::from_str(&text).map_err(|e| CliError::invalid(format!("{path}: not a compute report: {e}")))
}

fn missing(flag: &str) -> CliError {
    CliError::invalid(format!("missing {flag}"))
}

fn solve(args: &InvertArgs, cfg: &SolverConfig) -> Result<(usize, Result<RecoverySolution, Error>), CliError> {
    if let Some(path) = &args.from_json {
        let report = read_report(path)?;
        let targets: Vec<(f64, f64)> = report.results.iter().map(|r| (r.order, r.value)).collect();
        let problem = RecoveryProblem::dual_volumes(report.dim, &targets)?;
        return Ok((report.dim, recover_dual(&problem, cfg)));
    }
    if let Some(dim) = args.dim {
        if args.orders.len() != args.values.len() {
            return Err(CliError::invalid(format!(
                "{} orders but {} values",
                args.orders.len(),
                args.values.len()
            )));
        }
        let targets: Vec<(f64, f64)> = args.orders.iter().copied().zip(args.values.iter().copied()).collect();
        let problem = RecoveryProblem::dual_volumes(dim, &targets)?;
        return Ok((dim, recover_dual(&problem, cfg)));
    }
    if args.r3 {
        let v = |x: Option<f64>, f: &str| x.ok_or_else(|| missing(f));
        let (v1, v2, v3) = (v(args.v1, "--v1")?, v(args.v2, "--v2")?, v(args.v3, "--v3")?);
        RecoveryProblem::r3(v1, v2, v3)?;
        return Ok((3, recover_r3(v1, v2, v3, cfg)));
    }
    let nk = args.revolution.as_deref().ok_or_else(|| missing("a mode"))?;
    let (n, k) = (nk[0], nk[1]);
    let vn = args.vn.ok_or_else(|| missing("--vn"))?;
    let vk = args.vk.ok_or_else(|| missing("--vk"))?;
    if 2 * k == n {
        let j = args.j.ok_or_else(|| missing("--j (needed when 2k = n)"))?;
        let vj = args.vj.ok_or_else(|| missing("--vj"))?;
        RecoveryProblem::revolution_even(n, vn, vk, vj, j)?;
        Ok((n, recover_revolution_even(n, vn, vk, vj, j, cfg)))
    } else {
        let vnk = args.vnk.ok_or_else(|| missing("--vnk"))?;
        RecoveryProblem::revolution(n, k, vn, vk, vnk)?;
        Ok((n, recover_revolution(n, k, vn, vk, vnk, cfg)))
    }
}

pub fn run(args: &InvertArgs, global: &GlobalOpts) -> Result<(), CliError> {
    let cfg = SolverConfig {
        starts: args.starts,
        max_iterations: args.max_iterations,
        jacobian: match args.jacobian {
            Jacobian::Exact => JacobianMode::Exact,
            Jacobian::Fd => JacobianMode::FiniteDifference,
        },
        seed: global.seed,
        quadrature: global.quadrature()?,
        ..SolverConfig::default()
    };
    cfg.validate()?;
    let (dim, outcome) = solve(args, &cfg)?;
    let (report, failure) = match outcome {
        Ok(s) => (
            InvertReport {
                status: "converged",
                dim,
                axes: Some(s.ellipsoid.semi_axes().to_vec()),
                residual_max_rel: s.residual_max_rel,
                distinct_basins_found: Some(s.distinct_basins_found),
                starts_tried: Some(s.starts_tried),
            },
            None,
        ),
        Err(e @ (Error::Infeasible { residual } | Error::Ambiguous { residual })) => {
            let status = if matches!(e, Error::Infeasible { .. }) {
                "infeasible"
            } else {
                "ambiguous"
            };
            let report = InvertReport {
                status,
                dim,
                axes: None,
                residual_max_rel: residual,
                distinct_basins_found: None,
                starts_tried: None,
            };
            (report, Some(CliError::from(e)))
        }
        Err(e) => return Err(e.into()),
    };
    if global.json {
        let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::io("json", e))?;
        println!("{text}");
    } else {
        println!("status    {}", report.status);
        if let Some(axes) = &report.axes {
            let list: Vec<String> = axes.iter().map(|a| format!("{a:.15e}")).collect();
            println!("axes      {}", list.join(","));
        }
        println!("residual  {:.3e}", report.residual_max_rel);
        if let (Some(b), Some(t)) = (report.distinct_basins_found, report.starts_tried) {
            println!("basins    {b} (from {t} starts)");
        }
    }
    failure.map_or(Ok(()), Err)
}
