//! `dualvol`: dual and intrinsic volumes of ellipsoids from the command line.
//!
//! ```text
//! dualvol compute --axes 1,2,3 --orders -2,1,3 --json
//! dualvol invert --dim 3 --orders 1,2,3 --values 12.56,8.37,25.13
//! dualvol verify --suite all --seed 42
//! dualvol sweep --revolution 3 1 --a-grid 0.2:5:200 --out profile.csv --find-pair
//! ```
//!
//! Exit codes: 0 success, 1 verification failure, 2 invalid input,
//! 3 quadrature failure, 4 infeasible targets, 5 ambiguous targets, 6 I/O error.

mod compute;
mod error;
mod invert;
mod sweep;
mod verify;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dualvol::QuadratureConfig;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "dualvol", version, about = "Dual and intrinsic volumes of ellipsoids")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Relative quadrature tolerance.
    #[arg(long, global = true, env = "DUALVOL_TOL", default_value_t = 1e-10)]
    pub tol: f64,
    /// Seed for Monte Carlo oracles, random starts and verification trials.
    #[arg(long, global = true, env = "DUALVOL_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0 picks the number of CPUs).
    #[arg(long, global = true, env = "DUALVOL_THREADS", default_value_t = 0)]
    pub threads: usize,
    /// Emit JSON instead of a table.
    #[arg(long, global = true)]
    pub json: bool,
}

impl GlobalOpts {
    pub fn quadrature(&self) -> Result<QuadratureConfig, CliError> {
        let cfg = QuadratureConfig::default().with_rel_tol(self.tol);
        cfg.validate().map_err(CliError::from)?;
        Ok(cfg)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate dual volumes Ṽ_i of an ellipsoid.
    Compute(compute::ComputeArgs),
    /// Recover an ellipsoid from prescribed volumes.
    Invert(invert::InvertArgs),
    /// Run invariant suites and report the worst deviation per property.
    Verify(verify::VerifyArgs),
    /// Tabulate the unit-volume profile a ↦ V_k of ellipsoids of revolution.
    Sweep(sweep::SweepArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.global.threads)
        .build_global()
        .map_err(|e| CliError::invalid(format!("thread pool: {e}")))?;
    match cli.command {
        Command::Compute(args) => compute::run(&args, &cli.global),
        Command::Invert(args) => invert::run(&args, &cli.global),
        Command::Verify(args) => verify::run(&args, &cli.global),
        Command::Sweep(args) => sweep::run(&args, &cli.global),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
