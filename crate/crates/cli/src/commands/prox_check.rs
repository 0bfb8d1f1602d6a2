//! `cdfreg prox-check`: tabulate `prox(v)` over an input grid, optionally
//! verifying each output against a brute-force grid minimum of the prox
//! objective.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::Args;
use serde_json::json;

use cdfreg::prelude::*;

use super::fit::resolve_nu_rule;
use super::write_metadata_header;
use crate::{runtime_err, usage_err, CliError, CliResult};

#[derive(Debug, Args)]
pub struct ProxCheckArgs {
    #[arg(long, default_value = "cdf")]
    pub penalty: String,

    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,

    /// nu for the cdf penalty; defaults to nu_min(lambda, 1/tau).
    #[arg(long)]
    pub nu: Option<f64>,

    #[arg(long)]
    pub gamma: Option<f64>,

    /// Prox step (1/rho in ADMM terms).
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,

    /// Inputs sweep [-v-max, v-max].
    #[arg(long, default_value_t = 5.0)]
    pub v_max: f64,

    #[arg(long, default_value_t = 201)]
    pub steps: usize,

    /// Add a column with the objective gap against a 100k-point grid search.
    #[arg(long)]
    pub grid_check: bool,

    #[arg(long, default_value = "prox_check.csv")]
    pub output: PathBuf,
}

pub fn run(args: ProxCheckArgs) -> CliResult<()> {
    let kind: PenaltyKind = args.penalty.parse().map_err(usage_err)?;
    if !(args.tau > 0.0) {
        return Err(CliError::Usage(format!("--tau must be > 0, got {}", args.tau)));
    }
    if !(args.v_max > 0.0) || args.steps < 2 {
        return Err(CliError::Usage("--v-max must be > 0 and --steps >= 2".into()));
    }
    if kind != PenaltyKind::Cdf {
        resolve_nu_rule(kind, args.nu, None)?; // rejects stray --nu
    }
    let nu = match (kind, args.nu) {
        (PenaltyKind::Cdf, Some(nu)) => Some(nu),
        (PenaltyKind::Cdf, None) => {
            let nu = nu_min(args.lambda, 1.0 / args.tau).map_err(usage_err)?;
            eprintln!("note: no --nu given; using nu_min(lambda, 1/tau) = {nu}");
            Some(nu)
        }
        _ => None,
    };
    if args.gamma.is_some() && !matches!(kind, PenaltyKind::Scad | PenaltyKind::Mcp) {
        return Err(CliError::Usage("gamma is only valid for scad and mcp".into()));
    }
    let cfg = PenaltyConfig::from_parts(kind, args.lambda, nu, args.gamma).map_err(usage_err)?;

    let config = json!({
        "penalty": cfg,
        "tau": args.tau,
        "v_max": args.v_max,
        "steps": args.steps,
        "grid_check": args.grid_check,
    });

    let mut out = BufWriter::new(File::create(&args.output).map_err(runtime_err)?);
    write_metadata_header(&mut out, "prox-check", &config)?;
    if args.grid_check {
        writeln!(out, "v,prox,objective,grid_gap").map_err(runtime_err)?;
    } else {
        writeln!(out, "v,prox,objective").map_err(runtime_err)?;
    }

    let objective = |z: f64, v: f64| (z - v) * (z - v) / (2.0 * args.tau) + cfg.value(z);
    for k in 0..args.steps {
        let frac = k as f64 / (args.steps - 1) as f64;
        let v = -args.v_max + 2.0 * args.v_max * frac;
        let req = ProxRequest::new(v, args.tau, cfg).map_err(usage_err)?;
        let z = prox_scalar(&req).map_err(runtime_err)?;
        let obj = objective(z, v);
        if args.grid_check {
            let lo = -2.0 * v.abs() - 1.0;
            let hi = 2.0 * v.abs() + 1.0;
            let points = 100_000;
            let mut best = f64::INFINITY;
            for i in 0..points {
                let cand = lo + (hi - lo) * i as f64 / (points - 1) as f64;
                best = best.min(objective(cand, v));
            }
            writeln!(out, "{v},{z},{obj},{}", obj - best).map_err(runtime_err)?;
        } else {
            writeln!(out, "{v},{z},{obj}").map_err(runtime_err)?;
        }
    }
    out.flush().map_err(runtime_err)?;
    Ok(())
}
