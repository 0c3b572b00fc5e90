use std::io::Write;

use clap::Args;

use dualvol::intrinsic::unit_volume_profile;
use dualvol::inverse::demonstrate_vk_nonuniqueness;

use crate::error::CliError;
use crate::GlobalOpts;

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Dimension n and index k of V_k.
    #[arg(long, num_args = 2, value_names = ["N", "K"], required = true)]
    pub revolution: Vec<usize>,
    /// Linear grid `lo:hi:steps` of the parameter a (inclusive ends).
    #[arg(long, value_parser = parse_grid, default_value = "0.2:5:200")]
    pub a_grid: Grid,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<String>,
    /// Append two rows `a < 1 < b` with equal V_k after the grid.
    #[arg(long)]
    pub find_pair: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Grid {
    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let h = (self.hi - self.lo) / (self.steps - 1) as f64;
        (0..self.steps).map(move |j| if j + 1 == self.steps { self.hi } else { self.lo + h * j as f64 })
    }
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, steps] = parts.as_slice() else {
        return Err(format!("expected lo:hi:steps, got {s:?}"));
    };
    let lo: f64 = lo.parse().map_err(|e| format!("lo: {e}"))?;
    let hi: f64 = hi.parse().map_err(|e| format!("hi: {e}"))?;
    let steps: usize = steps.parse().map_err(|e| format!("steps: {e}"))?;
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(format!("need 0 < lo < hi, got {lo}:{hi}"));
    }
    if steps < 2 {
        return Err("need at least 2 steps".into());
    }
    Ok(Grid { lo, hi, steps })
}

/// RFC 4180 number field with 17 significant digits.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn run(args: &SweepArgs, global: &GlobalOpts) -> Result<(), CliError> {
    let (n, k) = (args.revolution[0], args.revolution[1]);
    if !(n >= 2 && k >= 1 && k < n) {
        return Err(CliError::invalid(format!("need 1 ≤ k < n, got n = {n}, k = {k}")));
    }
    let cfg = global.quadrature()?;
    let mut rows = Vec::with_capacity(args.a_grid.steps + 2);
    for a in args.a_grid.points() {
        rows.push((a, unit_volume_profile(n, k, a, &cfg)?));
    }
    if args.find_pair {
        let (a, b) = demonstrate_vk_nonuniqueness(n, k, &cfg)?;
        for x in [a, b] {
            rows.push((x, unit_volume_profile(n, k, x, &cfg)?));
        }
        eprintln!("pair: a = {a:.12}, b = {b:.12}");
    }
    let sink: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(std::fs::File::create(path).map_err(|e| CliError::io(path, e))?),
        None => Box::new(std::io::stdout().lock()),
    };
    let target = args.out.as_deref().unwrap_or("stdout");
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["a", "v_k"]).map_err(|e| CliError::io(target, e))?;
    for (a, v) in rows {
        w.write_record([format_number(a), format_number(v)])
            .map_err(|e| CliError::io(target, e))?;
    }
    w.flush().map_err(|e| CliError::io(target, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g = parse_grid("0.2:5:200").unwrap();
        let pts: Vec<f64> = g.points().collect();
        assert_eq!(pts.len(), 200);
        assert_eq!(pts[0], 0.2);
        assert_eq!(pts[199], 5.0);
        assert!(parse_grid("5:5:10").is_err());
        assert!(parse_grid("2:1:10").is_err());
        assert!(parse_grid("1:2:1").is_err());
        assert!(parse_grid("1:2").is_err());
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 2.0f64.sqrt() * 1e-7, 12345.678901234567] {
            let s = format_number(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }
}
