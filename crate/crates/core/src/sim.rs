//! Synthetic-data generator and replicated scenario runner.
//!
//! Data follow `y = X*beta + sigma*eps` with `X` rows drawn from
//! `N(0, Sigma)`, `Sigma[j][k] = rho^|j-k|` (Toeplitz), a support of
//! `n_signal` randomly placed coefficients drawn from
//! `Uniform(signal_low, signal_high)`, and standard normal noise. The
//! generating intercept is zero (fits still estimate one).
//!
//! Everything is counter-seeded: each replicate derives its own RNG stream
//! from `(seed, replicate_index)`, so replicates are reproducible
//! independently, in any order, and in parallel.

use std::io::Write;
use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{StandardNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{fpr, roc_auc, tpr, TruthSpec};
use crate::model::{standardize, Dataset};
use crate::path::{fit_path, NuRule, PathSpec};
use crate::penalty::PenaltyKind;
use crate::solver::AdmmConfig;

/// Whether signal locations are redrawn for every replicate or drawn once per
/// scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SupportMode {
    #[default]
    PerReplicate,
    PerScenario,
}

/// One simulation scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub n: usize,
    pub p: usize,
    pub rho_toeplitz: f64,
    pub n_signal: usize,
    pub signal_low: f64,
    pub signal_high: f64,
    pub sigma: f64,
    pub n_replicates: usize,
    pub seed: u64,
    #[serde(default)]
    pub support_mode: SupportMode,
}

impl Scenario {
    /// The paper's base scenario at a given noise level.
    pub fn paper(sigma: f64, n_replicates: usize, seed: u64) -> Self {
        Scenario {
            n: 50,
            p: 100,
            rho_toeplitz: 0.5,
            n_signal: 10,
            signal_low: 2.0,
            signal_high: 2.5,
            sigma,
            n_replicates,
            seed,
            support_mode: SupportMode::PerReplicate,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidConfig(format!("n must be >= 2, got {}", self.n)));
        }
        if self.n_signal == 0 || self.n_signal > self.p {
            return Err(Error::InvalidConfig(format!(
                "n_signal must lie in [1, p]; got {} with p = {}",
                self.n_signal, self.p
            )));
        }
        if !(self.rho_toeplitz.abs() < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "|rho_toeplitz| must be < 1, got {}",
                self.rho_toeplitz
            )));
        }
        if !(self.signal_low <= self.signal_high) {
            return Err(Error::InvalidConfig(format!(
                "signal_low must be <= signal_high, got [{}, {}]",
                self.signal_low, self.signal_high
            )));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidConfig(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        if self.n_replicates == 0 {
            return Err(Error::InvalidConfig("n_replicates must be >= 1".into()));
        }
        Ok(())
    }
}

/// `Sigma[j][k] = rho^|j-k|`.
pub fn toeplitz_sigma(p: usize, rho: f64) -> Result<DMatrix<f64>> {
    if !(rho.abs() < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "toeplitz correlation requires |rho| < 1, got {rho}"
        )));
    }
    Ok(DMatrix::from_fn(p, p, |j, k| {
        rho.powi((j as i32 - k as i32).abs())
    }))
}

const fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Deterministic child seed for a named stream of a scenario seed.
pub fn child_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream))
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    bytes[0..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&stream.to_le_bytes());
    bytes[16..24].copy_from_slice(&child_seed(seed, stream).to_le_bytes());
    bytes[24..32].copy_from_slice(&child_seed(stream, seed).to_le_bytes());
    ChaCha8Rng::from_seed(bytes)
}

// Stream tags keeping support draws out of the data streams.
const STREAM_SUPPORT_BASE: u64 = 1 << 32;
const STREAM_SUPPORT_FIXED: u64 = 1 << 33;

fn draw_support(rng: &mut ChaCha8Rng, p: usize, n_signal: usize) -> Vec<usize> {
    let mut support: Vec<usize> = rand::seq::index::sample(rng, p, n_signal).into_vec();
    support.sort_unstable();
    support
}

/// Generate one replicate's dataset and ground truth, deterministic in
/// `(scenario.seed, replicate_index)`.
pub fn gen_replicate(sc: &Scenario, replicate_index: usize) -> Result<(Dataset, TruthSpec)> {
    sc.validate()?;
    let idx = replicate_index as u64;

    let support = match sc.support_mode {
        SupportMode::PerReplicate => {
            let mut rng = rng_for(sc.seed, STREAM_SUPPORT_BASE + idx);
            draw_support(&mut rng, sc.p, sc.n_signal)
        }
        SupportMode::PerScenario => {
            let mut rng = rng_for(sc.seed, STREAM_SUPPORT_FIXED);
            draw_support(&mut rng, sc.p, sc.n_signal)
        }
    };

    let mut rng = rng_for(sc.seed, idx);
    let signal_dist = Uniform::new(sc.signal_low, sc.signal_high).map_err(|e| {
        Error::InvalidConfig(format!("signal range [{}, {}]: {e}", sc.signal_low, sc.signal_high))
    })?;
    let mut beta = DVector::zeros(sc.p);
    for &j in &support {
        beta[j] = if sc.signal_low == sc.signal_high {
            sc.signal_low
        } else {
            signal_dist.sample(&mut rng)
        };
    }

    // X = Z * L' with Z standard normal (row-major draw order) and L the
    // Cholesky factor of the Toeplitz correlation.
    let sigma_mat = toeplitz_sigma(sc.p, sc.rho_toeplitz)?;
    let chol = Cholesky::new(sigma_mat)
        .ok_or_else(|| Error::Internal("Toeplitz correlation not positive definite".into()))?;
    let l = chol.l();
    let mut z: DMatrix<f64> = DMatrix::zeros(sc.n, sc.p);
    for i in 0..sc.n {
        for j in 0..sc.p {
            z[(i, j)] = StandardNormal.sample(&mut rng);
        }
    }
    let x: DMatrix<f64> = &z * l.transpose();

    let mut y: DVector<f64> = &x * &beta;
    for i in 0..sc.n {
        let eps: f64 = StandardNormal.sample(&mut rng);
        y[i] += sc.sigma * eps;
    }

    let dataset = Dataset::new(x, y, None)?;
    Ok((dataset, TruthSpec::new(beta)))
}

/// One penalty configuration entered in a scenario comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodSpec {
    pub kind: PenaltyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_rule: Option<NuRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

impl MethodSpec {
    pub fn new(kind: PenaltyKind) -> Self {
        MethodSpec { kind, nu_rule: None, gamma: None }
    }

    pub fn cdf(nu_rule: NuRule) -> Self {
        MethodSpec { kind: PenaltyKind::Cdf, nu_rule: Some(nu_rule), gamma: None }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nu_rule.is_some() && self.kind != PenaltyKind::Cdf {
            return Err(Error::InvalidConfig("nu_rule is only valid for cdf".into()));
        }
        if self.gamma.is_some() && !matches!(self.kind, PenaltyKind::Scad | PenaltyKind::Mcp) {
            return Err(Error::InvalidConfig("gamma is only valid for scad and mcp".into()));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match self.kind {
            PenaltyKind::Cdf => {
                let rule = self.nu_rule.unwrap_or(NuRule::NuMin);
                format!("cdf({rule})")
            }
            PenaltyKind::Lasso => "lasso".to_string(),
            PenaltyKind::Scad => format!(
                "scad(gamma={})",
                self.gamma.unwrap_or(crate::penalty::DEFAULT_SCAD_GAMMA)
            ),
            PenaltyKind::Mcp => format!(
                "mcp(gamma={})",
                self.gamma.unwrap_or(crate::penalty::DEFAULT_MCP_GAMMA)
            ),
        }
    }

    pub fn to_path_spec(&self, n_lambda: usize, lambda_min_ratio: f64) -> PathSpec {
        let mut spec = PathSpec::new(self.kind)
            .with_n_lambda(n_lambda)
            .with_lambda_min_ratio(lambda_min_ratio);
        if let Some(rule) = self.nu_rule {
            spec = spec.with_nu_rule(rule);
        }
        if let Some(gamma) = self.gamma {
            spec = spec.with_gamma(gamma);
        }
        spec
    }
}

/// The comparison set used in the paper's study: SCAD and MCP at their
/// defaults, CDF at `nu = 3`, `nu_bar` and `nu_min`, and LASSO as the
/// `nu -> infinity` reference.
pub fn default_methods() -> Vec<MethodSpec> {
    vec![
        MethodSpec::new(PenaltyKind::Scad),
        MethodSpec::new(PenaltyKind::Mcp),
        MethodSpec::cdf(NuRule::Fixed(3.0)),
        MethodSpec::cdf(NuRule::NuBar),
        MethodSpec::cdf(NuRule::NuMin),
        MethodSpec::new(PenaltyKind::Lasso),
    ]
}

/// Per-replicate, per-method metrics along the path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodPathMetrics {
    /// `(1/p)*||beta_hat - beta_true||^2` at each lambda, original scale.
    pub mse: Vec<f64>,
    pub fpr: Vec<f64>,
    pub tpr: Vec<f64>,
    pub auc: f64,
}

/// Aggregated results of one scenario.
#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub scenario: Scenario,
    pub method_labels: Vec<String>,
    /// `lambda_k / lambda_max`, identical across replicates by construction
    /// of the log-spaced grid.
    pub rescaled_lambdas: Vec<f64>,
    /// `[replicate][method]`; `None` marks a failed fit.
    pub per_replicate: Vec<Vec<Option<MethodPathMetrics>>>,
    /// `[method][lambda]`, averaged over successful replicates.
    pub mean_mse: Vec<Vec<f64>>,
    pub mean_fpr: Vec<Vec<f64>>,
    pub mean_tpr: Vec<Vec<f64>>,
    /// `[method][replicate]`.
    pub aucs: Vec<Vec<Option<f64>>>,
    pub mean_auc: Vec<f64>,
    pub failures: Vec<usize>,
    pub failure_messages: Vec<String>,
    pub wall_clock_seconds: f64,
}

/// Run every replicate of a scenario for every method. Replicates run in
/// parallel; aggregation folds them in replicate order, so thread count
/// cannot change the result. Individual replicate failures are recorded, not
/// fatal.
pub fn run_scenario(
    sc: &Scenario,
    methods: &[MethodSpec],
    spec: &PathSpec,
    acfg: &AdmmConfig,
) -> Result<ScenarioReport> {
    sc.validate()?;
    spec.validate()?;
    acfg.validate()?;
    if methods.is_empty() {
        return Err(Error::InvalidConfig("methods list is empty".into()));
    }
    for m in methods {
        m.validate()?;
    }

    let start = Instant::now();
    let n_lambda = spec.n_lambda;
    let results: Vec<Vec<std::result::Result<MethodPathMetrics, String>>> = (0..sc.n_replicates)
        .into_par_iter()
        .map(|b| run_replicate(sc, methods, spec, acfg, b))
        .collect();

    let n_methods = methods.len();
    let mut mean_mse = vec![vec![0.0; n_lambda]; n_methods];
    let mut mean_fpr = vec![vec![0.0; n_lambda]; n_methods];
    let mut mean_tpr = vec![vec![0.0; n_lambda]; n_methods];
    let mut counts = vec![0usize; n_methods];
    let mut aucs = vec![Vec::with_capacity(sc.n_replicates); n_methods];
    let mut failures = vec![0usize; n_methods];
    let mut failure_messages = Vec::new();
    let mut per_replicate = Vec::with_capacity(sc.n_replicates);

    for (b, replicate) in results.into_iter().enumerate() {
        let mut row = Vec::with_capacity(n_methods);
        for (m, outcome) in replicate.into_iter().enumerate() {
            match outcome {
                Ok(metrics) => {
                    counts[m] += 1;
                    for k in 0..n_lambda {
                        mean_mse[m][k] += metrics.mse[k];
                        mean_fpr[m][k] += metrics.fpr[k];
                        mean_tpr[m][k] += metrics.tpr[k];
                    }
                    aucs[m].push(Some(metrics.auc));
                    row.push(Some(metrics));
                }
                Err(msg) => {
                    failures[m] += 1;
                    failure_messages.push(format!("replicate {b}, method {}: {msg}", methods[m].label()));
                    aucs[m].push(None);
                    row.push(None);
                }
            }
        }
        per_replicate.push(row);
    }

    for m in 0..n_methods {
        let c = counts[m].max(1) as f64;
        for k in 0..n_lambda {
            mean_mse[m][k] /= c;
            mean_fpr[m][k] /= c;
            mean_tpr[m][k] /= c;
        }
    }
    let mean_auc = aucs
        .iter()
        .map(|per_rep| {
            let ok: Vec<f64> = per_rep.iter().flatten().copied().collect();
            if ok.is_empty() {
                f64::NAN
            } else {
                ok.iter().sum::<f64>() / ok.len() as f64
            }
        })
        .collect();

    let rescaled_lambdas = (0..n_lambda)
        .map(|k| spec.lambda_min_ratio.powf(k as f64 / (n_lambda - 1) as f64))
        .collect();

    Ok(ScenarioReport {
        scenario: sc.clone(),
        method_labels: methods.iter().map(|m| m.label()).collect(),
        rescaled_lambdas,
        per_replicate,
        mean_mse,
        mean_fpr,
        mean_tpr,
        aucs,
        mean_auc,
        failures,
        failure_messages,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    })
}

fn run_replicate(
    sc: &Scenario,
    methods: &[MethodSpec],
    spec: &PathSpec,
    acfg: &AdmmConfig,
    b: usize,
) -> Vec<std::result::Result<MethodPathMetrics, String>> {
    let (dataset, truth) = match gen_replicate(sc, b) {
        Ok(pair) => pair,
        Err(e) => return vec![Err(e.to_string()); methods.len()],
    };
    let design = match standardize(&dataset) {
        Ok(d) => d,
        Err(e) => return vec![Err(e.to_string()); methods.len()],
    };
    methods
        .iter()
        .map(|m| {
            let pspec = m.to_path_spec(spec.n_lambda, spec.lambda_min_ratio);
            fit_path(&design, &pspec, acfg)
                .and_then(|path| {
                    let p = truth.p() as f64;
                    let mut mse_k = Vec::with_capacity(path.len());
                    let mut fpr_k = Vec::with_capacity(path.len());
                    let mut tpr_k = Vec::with_capacity(path.len());
                    for fit in &path.fits {
                        mse_k.push((&fit.beta - truth.beta_true()).norm_squared() / p);
                        fpr_k.push(fpr(&fit.beta_std, &truth)?);
                        tpr_k.push(tpr(&fit.beta_std, &truth)?);
                    }
                    let (_, auc) = roc_auc(&path, &truth)?;
                    Ok(MethodPathMetrics { mse: mse_k, fpr: fpr_k, tpr: tpr_k, auc })
                })
                .map_err(|e| e.to_string())
        })
        .collect()
}

impl ScenarioReport {
    /// Long-format per-replicate path metrics. Content is deterministic for a
    /// fixed scenario (no timing data).
    pub fn write_metrics_rows<W: Write>(&self, out: &mut W, include_header: bool) -> Result<()> {
        if include_header {
            writeln!(out, "sigma,method,replicate,lambda_index,rescaled_lambda,mse,fpr,tpr")?;
        }
        let sigma = self.scenario.sigma;
        for (b, row) in self.per_replicate.iter().enumerate() {
            for (m, slot) in row.iter().enumerate() {
                if let Some(metrics) = slot {
                    let label = &self.method_labels[m];
                    for k in 0..metrics.mse.len() {
                        writeln!(
                            out,
                            "{sigma},{label},{b},{k},{},{},{},{}",
                            self.rescaled_lambdas[k], metrics.mse[k], metrics.fpr[k], metrics.tpr[k]
                        )?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Long-format per-replicate AUC values.
    pub fn write_auc_rows<W: Write>(&self, out: &mut W, include_header: bool) -> Result<()> {
        if include_header {
            writeln!(out, "sigma,method,replicate,auc")?;
        }
        let sigma = self.scenario.sigma;
        for (m, label) in self.method_labels.iter().enumerate() {
            for (b, auc) in self.aucs[m].iter().enumerate() {
                if let Some(auc) = auc {
                    writeln!(out, "{sigma},{label},{b},{auc}")?;
                }
            }
        }
        Ok(())
    }

    /// Aggregate summary as a JSON value (the only place timing appears).
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "scenario": self.scenario,
            "methods": self.method_labels,
            "rescaled_lambdas": self.rescaled_lambdas,
            "mean_mse": self.mean_mse,
            "mean_fpr": self.mean_fpr,
            "mean_tpr": self.mean_tpr,
            "mean_auc": self.mean_auc,
            "failures": self.failures,
            "failure_messages": self.failure_messages,
            "wall_clock_seconds": self.wall_clock_seconds,
        })
    }
}
