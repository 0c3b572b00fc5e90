use clap::Args;
use serde::{Deserialize, Serialize};

use dualvol::dual::{dual_volume_detailed, dual_volume_oracle, Route};
use dualvol::{DualOrder, Ellipsoid};

use crate::error::CliError;
use crate::GlobalOpts;

#[derive(Debug, Args)]
pub struct ComputeArgs {
    /// Semi-axes, comma separated.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub axes: Vec<f64>,
    /// Dual-volume orders, comma separated.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub orders: Vec<f64>,
    /// Also estimate every order by Monte Carlo on the sphere.
    #[arg(long)]
    pub oracle_samples: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComputeReport {
    pub dim: usize,
    pub axes: Vec<f64>,
    pub results: Vec<ComputeRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComputeRow {
    pub order: f64,
    pub value: f64,
    pub regime: String,
    pub err: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_stderr: Option<f64>,
}

fn route_name(route: Route) -> &'static str {
    match route {
        Route::Auto => "auto",
        Route::Direct => "direct",
        Route::Polar => "polar",
        Route::ClosedForm => "closed_form",
    }
}

pub fn evaluate(args: &ComputeArgs, global: &GlobalOpts) -> Result<ComputeReport, CliError> {
    let e = Ellipsoid::new(args.axes.clone())?;
    let cfg = global.quadrature()?;
    if args.oracle_samples == Some(0) {
        return Err(CliError::invalid("--oracle-samples must be positive"));
    }
    let mut results = Vec::with_capacity(args.orders.len());
    for &order in &args.orders {
        let dual_order = DualOrder::new(order, e.dim())?;
        let v = dual_volume_detailed(&e, &dual_order, Route::Auto, &cfg)?;
        let oracle = match args.oracle_samples {
            Some(samples) => Some(dual_volume_oracle(&e, order, samples, global.seed)?),
            None => None,
        };
        results.push(ComputeRow {
            order,
            value: v.value,
            regime: v.regime.name().to_string(),
            err: v.abs_error_estimate,
            method: Some(route_name(v.route).to_string()),
            oracle: oracle.map(|o| o.estimate),
            oracle_stderr: oracle.map(|o| o.stderr),
        });
    }
    Ok(ComputeReport {
        dim: e.dim(),
        axes: e.semi_axes().to_vec(),
        results,
    })
}

pub fn run(args: &ComputeArgs, global: &GlobalOpts) -> Result<(), CliError> {
    let report = evaluate(args, global)?;
    if global.json {
        let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::io("json", e))?;
        println!("{text}");
        return Ok(());
    }
    let oracle = args.oracle_samples.is_some();
    print!("{:>10}  {:>22}  {:<26}  {:>10}", "order", "value", "method", "error-est");
    if oracle {
        print!("  {:>22}  {:>10}", "oracle", "stderr");
    }
    println!();
    for r in &report.results {
        let method = format!("{}/{}", r.regime, r.method.as_deref().unwrap_or(""));
        print!("{:>10}  {:>22.15e}  {:<26}  {:>10.2e}", r.order, r.value, method, r.err);
        if let (Some(o), Some(s)) = (r.oracle, r.oracle_stderr) {
            print!("  {o:>22.15e}  {s:>10.2e}");
        }
        println!();
    }
    Ok(())
}
