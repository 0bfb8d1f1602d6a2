//! `cdfreg penalty-table`: tabulate `(beta, value, derivative)` over a
//! symmetric beta grid for the requested penalties, suitable for plotting the
//! penalty shapes and their derivatives.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::Args;
use serde_json::json;

use cdfreg::prelude::*;

use super::write_metadata_header;
use crate::{runtime_err, usage_err, CliError, CliResult};

#[derive(Debug, Args)]
pub struct PenaltyTableArgs {
    /// Penalty kinds to tabulate (repeatable). Default: lasso, scad, mcp and
    /// cdf.
    #[arg(long = "penalty")]
    pub penalties: Vec<String>,

    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,

    /// nu values for the cdf rows (repeatable). Default: 0.5, 1 and 10.
    #[arg(long = "nu")]
    pub nus: Vec<f64>,

    /// Shape parameter override for scad/mcp.
    #[arg(long)]
    pub gamma: Option<f64>,

    /// Grid is [-beta-max, beta-max] with endpoints included exactly.
    #[arg(long, default_value_t = 5.0)]
    pub beta_max: f64,

    #[arg(long, default_value_t = 401)]
    pub steps: usize,

    #[arg(long, default_value = "penalty_table.csv")]
    pub output: PathBuf,
}

pub fn run(args: PenaltyTableArgs) -> CliResult<()> {
    if !(args.beta_max > 0.0) {
        return Err(CliError::Usage(format!("--beta-max must be > 0, got {}", args.beta_max)));
    }
    if args.steps < 2 {
        return Err(CliError::Usage(format!("--steps must be >= 2, got {}", args.steps)));
    }
    let kinds: Vec<PenaltyKind> = if args.penalties.is_empty() {
        PenaltyKind::ALL.to_vec()
    } else {
        args.penalties
            .iter()
            .map(|s| s.parse::<PenaltyKind>().map_err(usage_err))
            .collect::<CliResult<_>>()?
    };
    if args.nus.iter().any(|nu| !(*nu > 0.0)) {
        return Err(CliError::Usage("--nu values must be > 0".into()));
    }
    if !args.nus.is_empty() && !kinds.contains(&PenaltyKind::Cdf) {
        return Err(CliError::Usage("nu is only valid for cdf".into()));
    }
    let nus = if args.nus.is_empty() { vec![0.5, 1.0, 10.0] } else { args.nus.clone() };

    // one labelled config per curve family
    let mut configs: Vec<(String, PenaltyConfig)> = Vec::new();
    for kind in &kinds {
        match kind {
            PenaltyKind::Cdf => {
                for &nu in &nus {
                    configs.push((
                        format!("cdf(nu={nu})"),
                        PenaltyConfig::cdf(args.lambda, nu).map_err(usage_err)?,
                    ));
                }
            }
            PenaltyKind::Lasso => configs.push((
                "lasso".to_string(),
                PenaltyConfig::lasso(args.lambda).map_err(usage_err)?,
            )),
            PenaltyKind::Scad => {
                let gamma = args.gamma.unwrap_or(DEFAULT_SCAD_GAMMA);
                configs.push((
                    format!("scad(gamma={gamma})"),
                    PenaltyConfig::scad(args.lambda, gamma).map_err(usage_err)?,
                ));
            }
            PenaltyKind::Mcp => {
                let gamma = args.gamma.unwrap_or(DEFAULT_MCP_GAMMA);
                configs.push((
                    format!("mcp(gamma={gamma})"),
                    PenaltyConfig::mcp(args.lambda, gamma).map_err(usage_err)?,
                ));
            }
        }
    }

    let config = json!({
        "penalties": kinds.iter().map(|k| k.to_string()).collect::<Vec<_>>(),
        "lambda": args.lambda,
        "nus": nus,
        "gamma": args.gamma,
        "beta_max": args.beta_max,
        "steps": args.steps,
    });

    let mut out = BufWriter::new(File::create(&args.output).map_err(runtime_err)?);
    write_metadata_header(&mut out, "penalty-table", &config)?;
    writeln!(out, "penalty,beta,value,derivative").map_err(runtime_err)?;
    for (label, cfg) in &configs {
        for k in 0..args.steps {
            let frac = k as f64 / (args.steps - 1) as f64;
            let beta = -args.beta_max + 2.0 * args.beta_max * frac;
            let value = cfg.value(beta);
            // the derivative column reports p'(|beta|); at the origin the
            // right derivative
            let deriv = if beta == 0.0 {
                cfg.d_zero_plus()
            } else {
                cfg.derivative(beta.abs()).map_err(runtime_err)?
            };
            writeln!(out, "{label},{beta},{value},{deriv}").map_err(runtime_err)?;
        }
    }
    out.flush().map_err(runtime_err)?;
    Ok(())
}
