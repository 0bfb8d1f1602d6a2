//! Regularization paths: the lambda grid, per-lambda `nu` rules and
//! warm-started path fitting.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FitResult, StandardizedDesign};
use crate::penalty::{nu_min, PenaltyConfig, PenaltyKind};
use crate::solver::{fit, AdmmConfig, AdmmState};

/// How `nu` is chosen for each lambda on a CDF path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule", content = "nu")]
pub enum NuRule {
    /// A single `nu` shared by every lambda.
    Fixed(f64),
    /// The smallest `nu` keeping the solver's subproblems strictly convex.
    NuMin,
    /// `(nu_min + 3) / 2`, halfway between `nu_min` and the LASSO-like 3.
    NuBar,
}

impl std::fmt::Display for NuRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NuRule::Fixed(nu) => write!(f, "nu={nu}"),
            NuRule::NuMin => write!(f, "nu-min"),
            NuRule::NuBar => write!(f, "nu-bar"),
        }
    }
}

/// Grid policy and penalty family for a path fit.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PathSpec {
    pub kind: PenaltyKind,
    pub n_lambda: usize,
    pub lambda_min_ratio: f64,
    /// Used only when `kind` is CDF.
    pub nu_rule: NuRule,
    /// Used only for SCAD/MCP; `None` selects the kind's default.
    pub gamma: Option<f64>,
}

impl PathSpec {
    pub fn new(kind: PenaltyKind) -> Self {
        PathSpec {
            kind,
            n_lambda: 100,
            lambda_min_ratio: 0.001,
            nu_rule: NuRule::NuMin,
            gamma: None,
        }
    }

    pub fn with_n_lambda(mut self, n_lambda: usize) -> Self {
        self.n_lambda = n_lambda;
        self
    }

    pub fn with_lambda_min_ratio(mut self, ratio: f64) -> Self {
        self.lambda_min_ratio = ratio;
        self
    }

    pub fn with_nu_rule(mut self, rule: NuRule) -> Self {
        self.nu_rule = rule;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = Some(gamma);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_lambda < 2 {
            return Err(Error::InvalidConfig(format!(
                "n_lambda must be >= 2, got {}",
                self.n_lambda
            )));
        }
        if !(self.lambda_min_ratio > 0.0 && self.lambda_min_ratio < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "lambda_min_ratio must lie in (0, 1), got {}",
                self.lambda_min_ratio
            )));
        }
        if let NuRule::Fixed(nu) = self.nu_rule {
            if !(nu > 0.0) {
                return Err(Error::InvalidConfig(format!("fixed nu must be > 0, got {nu}")));
            }
        }
        Ok(())
    }

    fn config_at(&self, lambda: f64, convexity_floor: f64) -> Result<(PenaltyConfig, f64)> {
        match self.kind {
            PenaltyKind::Cdf => {
                let nu = nu_for_lambda(lambda, &self.nu_rule, convexity_floor)?;
                Ok((PenaltyConfig::cdf(lambda, nu)?, nu))
            }
            PenaltyKind::Lasso => Ok((PenaltyConfig::lasso(lambda)?, f64::NAN)),
            PenaltyKind::Scad => Ok((
                PenaltyConfig::from_parts(PenaltyKind::Scad, lambda, None, self.gamma)?,
                f64::NAN,
            )),
            PenaltyKind::Mcp => Ok((
                PenaltyConfig::from_parts(PenaltyKind::Mcp, lambda, None, self.gamma)?,
                f64::NAN,
            )),
        }
    }
}

/// Smallest lambda at which the all-zero vector satisfies the optimality
/// conditions: `max_j |x_j' y_centered| / n`. Valid for every supported kind
/// because the derivative at the origin equals lambda for each of them.
pub fn lambda_max(design: &StandardizedDesign, _kind: PenaltyKind) -> f64 {
    let corr = design.xs().transpose() * design.y_centered();
    corr.iter().map(|v| v.abs()).fold(0.0f64, f64::max) / design.n() as f64
}

/// Log-spaced grid from `lmax` down to `lmax * lambda_min_ratio`, strictly
/// decreasing, with both endpoints exact.
pub fn lambda_grid(lmax: f64, spec: &PathSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    if !(lmax > 0.0) {
        return Err(Error::NullModel);
    }
    let len = spec.n_lambda;
    let grid: Vec<f64> = (0..len)
        .map(|k| lmax * spec.lambda_min_ratio.powf(k as f64 / (len - 1) as f64))
        .collect();
    Ok(grid)
}

/// Curvature opposing the penalty's concavity: the smallest eigenvalue of
/// `X'X/n` when it is bounded away from zero, otherwise (p > n, as in the
/// paper's own simulations) the solver's rho, which is the curvature actually
/// present in the z-subproblem.
pub fn convexity_floor(design: &StandardizedDesign, acfg: &AdmmConfig) -> f64 {
    let xs = design.xs();
    let gram = (xs.transpose() * xs) / design.n() as f64;
    let min_eig = gram
        .symmetric_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |a, b| a.min(*b));
    if min_eig >= 1e-8 {
        min_eig
    } else {
        acfg.rho
    }
}

/// Per-lambda `nu`.
pub fn nu_for_lambda(lambda: f64, rule: &NuRule, convexity_floor: f64) -> Result<f64> {
    match rule {
        NuRule::Fixed(nu) => Ok(*nu),
        NuRule::NuMin => nu_min(lambda, convexity_floor),
        NuRule::NuBar => Ok((nu_min(lambda, convexity_floor)? + 3.0) / 2.0),
    }
}

/// A fitted regularization path.
#[derive(Debug, Clone)]
pub struct PathResult {
    pub lambdas: Vec<f64>,
    pub fits: Vec<FitResult>,
    pub kind: PenaltyKind,
    pub nu_rule: Option<NuRule>,
    pub gamma: Option<f64>,
    /// `nu` actually used at each lambda (CDF paths only; empty otherwise).
    pub nus: Vec<f64>,
    pub nonzero_counts: Vec<usize>,
}

impl PathResult {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }
}

/// Fit the whole path in decreasing-lambda order, warm-starting each fit from
/// the previous one.
pub fn fit_path(design: &StandardizedDesign, spec: &PathSpec, acfg: &AdmmConfig) -> Result<PathResult> {
    spec.validate()?;
    acfg.validate()?;
    let lmax = lambda_max(design, spec.kind);
    let lambdas = lambda_grid(lmax, spec)?;
    fit_path_at(design, &lambdas, spec, acfg)
}

/// Fit a caller-supplied (strictly decreasing) lambda sequence.
pub fn fit_path_at(
    design: &StandardizedDesign,
    lambdas: &[f64],
    spec: &PathSpec,
    acfg: &AdmmConfig,
) -> Result<PathResult> {
    if lambdas.is_empty() {
        return Err(Error::InvalidArgument("empty lambda sequence".into()));
    }
    if lambdas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument(
            "lambda sequence must be strictly decreasing".into(),
        ));
    }
    let floor = convexity_floor(design, acfg);
    // For the nonconvex kinds a purely warm-started chain can lock onto a bad
    // local branch and stay there for the rest of the path. Periodically race
    // the chain against a cold start: a short-budget cold probe runs first,
    // and only if its objective already beats the warm fit is it polished to
    // full tolerance and allowed to replace the chain. Both candidates are
    // solver fixed points of the same problem; the lower objective wins.
    let race_cold = spec.kind != PenaltyKind::Lasso;
    const RACE_INTERVAL: usize = 5;
    const PROBE_MAX_ITER: usize = 300;
    let mut fits = Vec::with_capacity(lambdas.len());
    let mut nus = Vec::new();
    let mut nonzero_counts = Vec::with_capacity(lambdas.len());
    let mut state: Option<AdmmState> = None;
    for (k, &lambda) in lambdas.iter().enumerate() {
        let wrap = |e: Error| Error::PathFit { index: k, lambda, source: Box::new(e) };
        let (cfg, nu) = spec.config_at(lambda, floor).map_err(wrap)?;
        let warm_started = state.is_some();
        let (mut fit_res, mut next_state) =
            fit(design, &cfg, acfg, state.take()).map_err(wrap)?;
        if race_cold && warm_started && k % RACE_INTERVAL == 0 {
            let probe_cfg = AdmmConfig {
                max_iter: PROBE_MAX_ITER.min(acfg.max_iter),
                ..*acfg
            };
            let (probe_fit, probe_state) = fit(design, &cfg, &probe_cfg, None).map_err(wrap)?;
            if probe_fit.objective < fit_res.objective {
                let (cold_fit, cold_state) =
                    fit(design, &cfg, acfg, Some(probe_state)).map_err(wrap)?;
                if cold_fit.objective < fit_res.objective {
                    fit_res = cold_fit;
                    next_state = cold_state;
                }
            }
        }
        state = Some(next_state);
        nonzero_counts.push(fit_res.nonzeros());
        if spec.kind == PenaltyKind::Cdf {
            nus.push(nu);
        }
        fits.push(fit_res);
    }
    Ok(PathResult {
        lambdas: lambdas.to_vec(),
        fits,
        kind: spec.kind,
        nu_rule: (spec.kind == PenaltyKind::Cdf).then_some(spec.nu_rule),
        gamma: spec.gamma.or(match spec.kind {
            PenaltyKind::Scad => Some(crate::penalty::DEFAULT_SCAD_GAMMA),
            PenaltyKind::Mcp => Some(crate::penalty::DEFAULT_MCP_GAMMA),
            _ => None,
        }),
        nus,
        nonzero_counts,
    })
}

/// Nonzero coefficients in long format: one row per
/// `(lambda index, coefficient index, value != 0)`.
pub fn write_coefficients_csv<W: Write>(
    path: &PathResult,
    column_names: Option<&[String]>,
    out: &mut W,
) -> Result<()> {
    writeln!(out, "lambda_index,lambda,coef_index,coef_name,value")?;
    for (k, fit_res) in path.fits.iter().enumerate() {
        for (j, value) in fit_res.beta.iter().enumerate() {
            if *value != 0.0 {
                let name = column_names
                    .map(|ns| ns[j].clone())
                    .unwrap_or_else(|| format!("x{j}"));
                writeln!(out, "{k},{},{j},{name},{}", path.lambdas[k], value)?;
            }
        }
    }
    Ok(())
}

/// Per-lambda summary table.
pub fn write_summary_csv<W: Write>(path: &PathResult, out: &mut W) -> Result<()> {
    writeln!(
        out,
        "lambda_index,lambda,nu,nonzeros,intercept,objective,iterations,converged"
    )?;
    for (k, fit_res) in path.fits.iter().enumerate() {
        let nu = path
            .nus
            .get(k)
            .map(|v| v.to_string())
            .unwrap_or_default();
        writeln!(
            out,
            "{k},{},{nu},{},{},{},{},{}",
            path.lambdas[k],
            path.nonzero_counts[k],
            fit_res.intercept,
            fit_res.objective,
            fit_res.iterations,
            fit_res.converged
        )?;
    }
    Ok(())
}

/// Cold-fit a single lambda with the path machinery (used by the CLI's
/// single-lambda mode).
pub fn fit_single(
    design: &StandardizedDesign,
    spec: &PathSpec,
    acfg: &AdmmConfig,
    lambda: f64,
) -> Result<PathResult> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidConfig(format!("lambda must be > 0, got {lambda}")));
    }
    fit_path_at(design, &[lambda], spec, acfg)
}
