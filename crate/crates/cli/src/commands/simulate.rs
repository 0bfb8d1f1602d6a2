//! `cdfreg simulate`: run the scenario file's noise levels, one replicated
//! comparison per sigma, and write long-format metric tables plus a JSON
//! summary.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::Args;
use serde::Deserialize;
use serde_json::json;

use cdfreg::prelude::*;

use super::fit::suffixed;
use super::write_metadata_header;
use crate::plot::{line_plot, Series};
use crate::{runtime_err, usage_err, CliError, CliResult};

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario description (JSON).
    #[arg(long)]
    pub scenario_file: PathBuf,

    /// Override the file's replicate count.
    #[arg(long)]
    pub replicates: Option<usize>,

    /// Override the file's seed.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Draw signal locations once per scenario instead of per replicate.
    #[arg(long)]
    pub fixed_support: bool,

    /// Output prefix; writes <prefix>_metrics.csv, <prefix>_auc.csv and
    /// <prefix>_summary.json.
    #[arg(long, default_value = "sim")]
    pub out_prefix: PathBuf,

    /// Also write SVG plots of mean AUC vs sigma and mean MSE vs rescaled lambda.
    #[arg(long)]
    pub plot: bool,
}

/// On-disk scenario schema. One file covers several noise levels; each sigma
/// becomes its own scenario with a seed derived from the file seed and the
/// sigma index.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub n: usize,
    pub p: usize,
    pub rho_toeplitz: f64,
    pub n_signal: usize,
    pub signal_low: f64,
    pub signal_high: f64,
    pub sigmas: Vec<f64>,
    pub n_replicates: usize,
    pub seed: u64,
    #[serde(default)]
    pub support_mode: Option<SupportMode>,
    #[serde(default)]
    pub methods: Option<Vec<MethodSpec>>,
    #[serde(default)]
    pub n_lambda: Option<usize>,
    #[serde(default)]
    pub lambda_min_ratio: Option<f64>,
}

pub fn run(args: SimulateArgs) -> CliResult<()> {
    let text = std::fs::read_to_string(&args.scenario_file).map_err(usage_err)?;
    let mut file: ScenarioFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("scenario file {}: {e}", args.scenario_file.display())))?;
    if let Some(replicates) = args.replicates {
        file.n_replicates = replicates;
    }
    if let Some(seed) = args.seed {
        file.seed = seed;
    }
    if args.fixed_support {
        file.support_mode = Some(SupportMode::PerScenario);
    }
    if file.sigmas.is_empty() {
        return Err(CliError::Usage("scenario file: sigmas list is empty".into()));
    }

    let methods = file.methods.clone().unwrap_or_else(default_methods);
    for m in &methods {
        m.validate().map_err(usage_err)?;
    }
    let spec = PathSpec::new(PenaltyKind::Lasso)
        .with_n_lambda(file.n_lambda.unwrap_or(100))
        .with_lambda_min_ratio(file.lambda_min_ratio.unwrap_or(0.001));
    spec.validate().map_err(usage_err)?;
    let acfg = AdmmConfig::default();

    // Validate every sigma's scenario before any work starts.
    let scenarios: Vec<Scenario> = file
        .sigmas
        .iter()
        .enumerate()
        .map(|(si, &sigma)| Scenario {
            n: file.n,
            p: file.p,
            rho_toeplitz: file.rho_toeplitz,
            n_signal: file.n_signal,
            signal_low: file.signal_low,
            signal_high: file.signal_high,
            sigma,
            n_replicates: file.n_replicates,
            seed: child_seed(file.seed, si as u64),
            support_mode: file.support_mode.unwrap_or_default(),
        })
        .collect();
    for sc in &scenarios {
        sc.validate().map_err(usage_err)?;
    }

    let config = json!({
        "scenario_file": args.scenario_file,
        "n": file.n,
        "p": file.p,
        "rho_toeplitz": file.rho_toeplitz,
        "n_signal": file.n_signal,
        "signal_low": file.signal_low,
        "signal_high": file.signal_high,
        "sigmas": file.sigmas,
        "n_replicates": file.n_replicates,
        "seed": file.seed,
        "support_mode": file.support_mode.unwrap_or_default(),
        "methods": methods,
        "n_lambda": spec.n_lambda,
        "lambda_min_ratio": spec.lambda_min_ratio,
    });

    let mut reports = Vec::with_capacity(scenarios.len());
    for sc in &scenarios {
        reports.push(run_scenario(sc, &methods, &spec, &acfg).map_err(runtime_err)?);
    }

    let metrics_path = suffixed(&args.out_prefix, "_metrics.csv");
    let mut out = BufWriter::new(File::create(&metrics_path).map_err(runtime_err)?);
    write_metadata_header(&mut out, "simulate", &config)?;
    for (i, report) in reports.iter().enumerate() {
        report.write_metrics_rows(&mut out, i == 0).map_err(runtime_err)?;
    }
    out.flush().map_err(runtime_err)?;

    let auc_path = suffixed(&args.out_prefix, "_auc.csv");
    let mut out = BufWriter::new(File::create(&auc_path).map_err(runtime_err)?);
    write_metadata_header(&mut out, "simulate", &config)?;
    for (i, report) in reports.iter().enumerate() {
        report.write_auc_rows(&mut out, i == 0).map_err(runtime_err)?;
    }
    out.flush().map_err(runtime_err)?;

    let summary = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "command": "simulate",
        "config": config,
        "reports": reports.iter().map(|r| r.summary_json()).collect::<Vec<_>>(),
    });
    let summary_path = suffixed(&args.out_prefix, "_summary.json");
    let mut out = BufWriter::new(File::create(&summary_path).map_err(runtime_err)?);
    serde_json::to_writer_pretty(&mut out, &summary).map_err(runtime_err)?;
    out.flush().map_err(runtime_err)?;

    if args.plot {
        write_plots(&args.out_prefix, &reports)?;
    }

    let total_failures: usize = reports.iter().map(|r| r.failures.iter().sum::<usize>()).sum();
    if total_failures > 0 {
        eprintln!("note: {total_failures} replicate fits failed; see the summary JSON");
    }
    Ok(())
}

fn write_plots(prefix: &std::path::Path, reports: &[ScenarioReport]) -> CliResult<()> {
    if reports.is_empty() {
        return Ok(());
    }
    let labels = &reports[0].method_labels;

    // mean AUC against sigma, one series per method
    let auc_series: Vec<Series> = labels
        .iter()
        .enumerate()
        .map(|(m, label)| Series {
            label: label.clone(),
            points: reports
                .iter()
                .map(|r| (r.scenario.sigma, r.mean_auc[m]))
                .collect(),
        })
        .collect();
    let svg = line_plot("mean AUC by noise level", "sigma", "AUC", &auc_series);
    std::fs::write(suffixed(prefix, "_auc.svg"), svg).map_err(runtime_err)?;

    // mean MSE along the rescaled path, one file per sigma
    for report in reports {
        let series: Vec<Series> = labels
            .iter()
            .enumerate()
            .map(|(m, label)| Series {
                label: label.clone(),
                points: report
                    .rescaled_lambdas
                    .iter()
                    .zip(report.mean_mse[m].iter())
                    .map(|(x, y)| (*x, *y))
                    .collect(),
            })
            .collect();
        let svg = line_plot(
            &format!("mean MSE along the path (sigma = {})", report.scenario.sigma),
            "lambda / lambda_max",
            "MSE",
            &series,
        );
        let name = format!("_mse_sigma{}.svg", report.scenario.sigma);
        std::fs::write(suffixed(prefix, &name), svg).map_err(runtime_err)?;
    }
    Ok(())
}
