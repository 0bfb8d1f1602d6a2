//! `cdfreg fit`: fit a regularization path (or a single lambda) on a CSV
//! dataset and write coefficient and summary tables.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::Args;
use serde_json::json;

use cdfreg::prelude::*;

use super::write_metadata_header;
use crate::plot::{line_plot, Series};
use crate::{runtime_err, usage_err, CliError, CliResult};

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    pub input: PathBuf,

    /// Response column: a header name or a zero-based index.
    #[arg(long)]
    pub y: String,

    /// Penalty kind: cdf, lasso, scad or mcp.
    #[arg(long, default_value = "cdf")]
    pub penalty: String,

    /// Fit only this lambda instead of the automatic grid.
    #[arg(long)]
    pub lambda: Option<f64>,

    /// Fixed nu for the cdf penalty (equivalent to --nu-rule fixed).
    #[arg(long)]
    pub nu: Option<f64>,

    /// Per-lambda nu rule for the cdf penalty: nu-min, nu-bar or fixed.
    #[arg(long)]
    pub nu_rule: Option<String>,

    /// Shape parameter for scad (> 2) or mcp (> 1).
    #[arg(long)]
    pub gamma: Option<f64>,

    #[arg(long, default_value_t = 100)]
    pub n_lambda: usize,

    #[arg(long, default_value_t = 0.001)]
    pub lambda_min_ratio: f64,

    /// ADMM augmented-Lagrangian parameter.
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,

    /// Primal and dual convergence tolerance.
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,

    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,

    /// Output prefix; writes <prefix>_coefficients.csv and <prefix>_summary.csv.
    #[arg(long, default_value = "fit")]
    pub out_prefix: PathBuf,

    /// Also write <prefix>_path.svg with the coefficient paths.
    #[arg(long)]
    pub plot: bool,
}

/// Resolve the nu flags into a path rule, enforcing that nu-flavoured flags
/// only appear with the cdf penalty.
pub fn resolve_nu_rule(
    kind: PenaltyKind,
    nu: Option<f64>,
    nu_rule: Option<&str>,
) -> CliResult<Option<NuRule>> {
    if kind != PenaltyKind::Cdf {
        if nu.is_some() {
            return Err(CliError::Usage("nu is only valid for cdf".into()));
        }
        if nu_rule.is_some() {
            return Err(CliError::Usage("nu-rule is only valid for cdf".into()));
        }
        return Ok(None);
    }
    let rule = match (nu_rule, nu) {
        (Some("nu-min"), None) => NuRule::NuMin,
        (Some("nu-bar"), None) => NuRule::NuBar,
        (Some("fixed"), Some(v)) | (None, Some(v)) => NuRule::Fixed(v),
        (Some("fixed"), None) => {
            return Err(CliError::Usage("--nu-rule fixed requires --nu".into()))
        }
        (Some(rule @ ("nu-min" | "nu-bar")), Some(_)) => {
            return Err(CliError::Usage(format!("--nu conflicts with --nu-rule {rule}")))
        }
        (Some(other), _) => {
            return Err(CliError::Usage(format!(
                "unknown nu-rule {other:?}; expected nu-min, nu-bar or fixed"
            )))
        }
        (None, None) => {
            eprintln!("note: --penalty cdf without --nu/--nu-rule; defaulting to the nu-min rule");
            NuRule::NuMin
        }
    };
    Ok(Some(rule))
}

fn validate(args: &FitArgs) -> CliResult<(PathSpec, AdmmConfig)> {
    let kind: PenaltyKind = args.penalty.parse().map_err(usage_err)?;
    let rule = resolve_nu_rule(kind, args.nu, args.nu_rule.as_deref())?;
    if args.gamma.is_some() && !matches!(kind, PenaltyKind::Scad | PenaltyKind::Mcp) {
        return Err(CliError::Usage("gamma is only valid for scad and mcp".into()));
    }
    let mut spec = PathSpec::new(kind)
        .with_n_lambda(args.n_lambda)
        .with_lambda_min_ratio(args.lambda_min_ratio);
    if let Some(rule) = rule {
        spec = spec.with_nu_rule(rule);
    }
    if let Some(gamma) = args.gamma {
        spec = spec.with_gamma(gamma);
        // reject out-of-range gamma before any work
        PenaltyConfig::from_parts(kind, 1.0, None, Some(gamma)).map_err(usage_err)?;
    }
    spec.validate().map_err(usage_err)?;
    let acfg = AdmmConfig {
        rho: args.rho,
        tol_primal: args.tol,
        tol_dual: args.tol,
        max_iter: args.max_iter,
        ..AdmmConfig::default()
    };
    acfg.validate().map_err(usage_err)?;
    if let Some(lambda) = args.lambda {
        if !(lambda > 0.0) {
            return Err(CliError::Usage(format!("--lambda must be > 0, got {lambda}")));
        }
    }
    Ok((spec, acfg))
}

pub fn run(args: FitArgs) -> CliResult<()> {
    let (spec, acfg) = validate(&args)?;
    let dataset = load_dataset(&args.input, &ColumnSelector::parse(&args.y)).map_err(usage_err)?;
    let design = standardize(&dataset).map_err(usage_err)?;

    let path = match args.lambda {
        Some(lambda) => fit_single(&design, &spec, &acfg, lambda).map_err(runtime_err)?,
        None => fit_path(&design, &spec, &acfg).map_err(runtime_err)?,
    };

    let config = json!({
        "input": args.input,
        "y": args.y,
        "penalty": spec.kind.to_string(),
        "lambda": args.lambda,
        "nu_rule": path.nu_rule,
        "gamma": path.gamma,
        "n_lambda": spec.n_lambda,
        "lambda_min_ratio": spec.lambda_min_ratio,
        "rho": acfg.rho,
        "tol": acfg.tol_primal,
        "max_iter": acfg.max_iter,
    });

    let coef_path = suffixed(&args.out_prefix, "_coefficients.csv");
    let mut out = BufWriter::new(File::create(&coef_path).map_err(runtime_err)?);
    write_metadata_header(&mut out, "fit", &config)?;
    write_coefficients_csv(&path, design.column_names(), &mut out).map_err(runtime_err)?;

    let summary_path = suffixed(&args.out_prefix, "_summary.csv");
    let mut out = BufWriter::new(File::create(&summary_path).map_err(runtime_err)?);
    write_metadata_header(&mut out, "fit", &config)?;
    write_summary_csv(&path, &mut out).map_err(runtime_err)?;

    if args.plot {
        let svg_path = suffixed(&args.out_prefix, "_path.svg");
        let svg = coefficient_path_svg(&path, &design);
        std::fs::write(&svg_path, svg).map_err(runtime_err)?;
    }

    let unconverged = path.fits.iter().filter(|f| !f.converged).count();
    if unconverged > 0 {
        eprintln!("note: {unconverged} of {} fits hit max_iter before the tolerance", path.len());
    }
    Ok(())
}

pub fn suffixed(prefix: &std::path::Path, suffix: &str) -> PathBuf {
    let mut name = prefix.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    prefix.with_file_name(name)
}

fn coefficient_path_svg(path: &PathResult, design: &StandardizedDesign) -> String {
    let lmax = path.lambdas[0];
    let mut series = Vec::new();
    for j in 0..design.p() {
        if path.fits.iter().all(|f| f.beta[j] == 0.0) {
            continue;
        }
        let points: Vec<(f64, f64)> = path
            .lambdas
            .iter()
            .zip(path.fits.iter())
            .map(|(l, f)| (l / lmax, f.beta[j]))
            .collect();
        series.push(Series { label: design.column_label(j), points });
    }
    line_plot(
        &format!("coefficient paths ({})", path.kind),
        "lambda / lambda_max",
        "coefficient",
        &series,
    )
}
