//! Penalty family: value, derivatives and the `nu_min` uniqueness threshold.
//!
//! Four penalties are supported. The CDF penalty
//! `p(b) = lambda * sqrt(2*pi) * nu * Phi(|b| / nu)`
//! (Phi the standard-normal CDF) is the crate's reason to exist; LASSO, SCAD
//! and MCP are carried along as comparison penalties. All four share the same
//! derivative at the origin, `lambda`, which is what makes a single
//! `lambda_max` valid across the family.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::erf;

use crate::error::{Error, Result};

/// Default SCAD shape parameter.
pub const DEFAULT_SCAD_GAMMA: f64 = 3.7;
/// Default MCP shape parameter.
pub const DEFAULT_MCP_GAMMA: f64 = 3.0;

/// Lower clamp applied to `nu_min` so the returned value is always a legal `nu`.
pub const NU_FLOOR: f64 = 1e-8;

pub(crate) const SQRT_2PI: f64 = 2.506628274631000502415765284811;

/// Standard normal density.
#[inline]
pub(crate) fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// Standard normal distribution function.
#[inline]
pub(crate) fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// `Phi(x) - 1/2`, computed without cancellation near zero.
#[inline]
pub(crate) fn std_normal_cdf_centered(x: f64) -> f64 {
    0.5 * erf::erf(x / std::f64::consts::SQRT_2)
}

/// The supported penalty kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyKind {
    Cdf,
    Lasso,
    Scad,
    Mcp,
}

impl PenaltyKind {
    pub const ALL: [PenaltyKind; 4] = [
        PenaltyKind::Cdf,
        PenaltyKind::Lasso,
        PenaltyKind::Scad,
        PenaltyKind::Mcp,
    ];
}

impl fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            PenaltyKind::Cdf => "cdf",
            PenaltyKind::Lasso => "lasso",
            PenaltyKind::Scad => "scad",
            PenaltyKind::Mcp => "mcp",
        };
        f.write_str(name)
    }
}

impl FromStr for PenaltyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cdf" => Ok(PenaltyKind::Cdf),
            "lasso" => Ok(PenaltyKind::Lasso),
            "scad" => Ok(PenaltyKind::Scad),
            "mcp" => Ok(PenaltyKind::Mcp),
            other => Err(Error::InvalidArgument(format!(
                "unknown penalty {other:?}; expected one of cdf, lasso, scad, mcp"
            ))),
        }
    }
}

/// A fully specified penalty: kind, `lambda`, and the shape parameter the
/// kind requires (`nu` for CDF, `gamma` for SCAD/MCP).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    kind: PenaltyKind,
    lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
}

impl PenaltyConfig {
    pub fn cdf(lambda: f64, nu: f64) -> Result<Self> {
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "cdf penalty requires nu > 0, got {nu}"
            )));
        }
        Self::validated(PenaltyKind::Cdf, lambda, Some(nu), None)
    }

    pub fn lasso(lambda: f64) -> Result<Self> {
        Self::validated(PenaltyKind::Lasso, lambda, None, None)
    }

    pub fn scad(lambda: f64, gamma: f64) -> Result<Self> {
        if !(gamma > 2.0) {
            return Err(Error::InvalidConfig(format!(
                "scad penalty requires gamma > 2, got {gamma}"
            )));
        }
        Self::validated(PenaltyKind::Scad, lambda, None, Some(gamma))
    }

    pub fn mcp(lambda: f64, gamma: f64) -> Result<Self> {
        if !(gamma > 1.0) {
            return Err(Error::InvalidConfig(format!(
                "mcp penalty requires gamma > 1, got {gamma}"
            )));
        }
        Self::validated(PenaltyKind::Mcp, lambda, None, Some(gamma))
    }

    /// Build a config from loosely typed parts (as parsed from a CLI or a
    /// scenario file). `nu` is required for CDF and rejected elsewhere;
    /// `gamma` falls back to the kind's default for SCAD/MCP and is rejected
    /// elsewhere.
    pub fn from_parts(
        kind: PenaltyKind,
        lambda: f64,
        nu: Option<f64>,
        gamma: Option<f64>,
    ) -> Result<Self> {
        if nu.is_some() && kind != PenaltyKind::Cdf {
            return Err(Error::InvalidConfig("nu is only valid for cdf".into()));
        }
        if gamma.is_some() && !matches!(kind, PenaltyKind::Scad | PenaltyKind::Mcp) {
            return Err(Error::InvalidConfig(
                "gamma is only valid for scad and mcp".into(),
            ));
        }
        match kind {
            PenaltyKind::Cdf => {
                let nu = nu.ok_or_else(|| {
                    Error::InvalidConfig("cdf penalty requires nu".into())
                })?;
                Self::cdf(lambda, nu)
            }
            PenaltyKind::Lasso => Self::lasso(lambda),
            PenaltyKind::Scad => Self::scad(lambda, gamma.unwrap_or(DEFAULT_SCAD_GAMMA)),
            PenaltyKind::Mcp => Self::mcp(lambda, gamma.unwrap_or(DEFAULT_MCP_GAMMA)),
        }
    }

    fn validated(
        kind: PenaltyKind,
        lambda: f64,
        nu: Option<f64>,
        gamma: Option<f64>,
    ) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "lambda must be finite and >= 0, got {lambda}"
            )));
        }
        Ok(PenaltyConfig {
            kind,
            lambda,
            nu,
            gamma,
        })
    }

    /// Same penalty at a different `lambda`.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::validated(self.kind, lambda, self.nu, self.gamma)
    }

    pub fn kind(&self) -> PenaltyKind {
        self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Shape parameter `nu`; present exactly when the kind is CDF.
    pub fn nu(&self) -> Option<f64> {
        self.nu
    }

    /// Shape parameter `gamma`; present exactly when the kind is SCAD or MCP.
    pub fn gamma(&self) -> Option<f64> {
        self.gamma
    }

    /// Penalty value `p(|beta|)`.
    ///
    /// For the CDF penalty this is the raw `lambda*sqrt(2*pi)*nu*Phi(|beta|/nu)`,
    /// including the constant `p(0) = lambda*sqrt(2*pi)*nu/2`; objectives are
    /// only ever compared at a fixed config, so the offset is harmless.
    /// SCAD and MCP use the piecewise antiderivatives of their published
    /// derivative formulas with `p(0) = 0`.
    pub fn value(&self, beta: f64) -> f64 {
        let b = beta.abs();
        let lambda = self.lambda;
        match self.kind {
            PenaltyKind::Cdf => {
                let nu = self.nu.expect("cdf config has nu");
                lambda * SQRT_2PI * nu * std_normal_cdf(b / nu)
            }
            PenaltyKind::Lasso => lambda * b,
            PenaltyKind::Scad => {
                let gamma = self.gamma.expect("scad config has gamma");
                if b <= lambda {
                    lambda * b
                } else if b <= gamma * lambda {
                    (2.0 * gamma * lambda * b - b * b - lambda * lambda)
                        / (2.0 * (gamma - 1.0))
                } else {
                    lambda * lambda * (gamma + 1.0) / 2.0
                }
            }
            PenaltyKind::Mcp => {
                let gamma = self.gamma.expect("mcp config has gamma");
                if b <= gamma * lambda {
                    lambda * b - b * b / (2.0 * gamma)
                } else {
                    gamma * lambda * lambda / 2.0
                }
            }
        }
    }

    /// `value(beta) - value(0)`. All kinds except CDF already have
    /// `value(0) = 0`; for CDF the subtraction is done via `erf` so small
    /// arguments do not lose precision to cancellation.
    pub fn value_centered(&self, beta: f64) -> f64 {
        match self.kind {
            PenaltyKind::Cdf => {
                let nu = self.nu.expect("cdf config has nu");
                self.lambda * SQRT_2PI * nu * std_normal_cdf_centered(beta.abs() / nu)
            }
            _ => self.value(beta),
        }
    }

    /// Derivative `p'(beta)` for `beta > 0`.
    pub fn derivative(&self, beta: f64) -> Result<f64> {
        if !(beta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "penalty derivative requires beta > 0, got {beta}; use d_zero_plus at the origin"
            )));
        }
        Ok(self.derivative_unchecked(beta))
    }

    pub(crate) fn derivative_unchecked(&self, beta: f64) -> f64 {
        let lambda = self.lambda;
        match self.kind {
            PenaltyKind::Cdf => {
                let nu = self.nu.expect("cdf config has nu");
                lambda * SQRT_2PI * std_normal_pdf(beta / nu)
            }
            PenaltyKind::Lasso => lambda,
            PenaltyKind::Scad => {
                let gamma = self.gamma.expect("scad config has gamma");
                if beta <= lambda {
                    lambda
                } else {
                    (gamma * lambda - beta).max(0.0) / (gamma - 1.0)
                }
            }
            PenaltyKind::Mcp => {
                let gamma = self.gamma.expect("mcp config has gamma");
                if beta <= gamma * lambda {
                    lambda * (1.0 - beta / (gamma * lambda))
                } else {
                    0.0
                }
            }
        }
    }

    /// Right derivative at the origin. Equals `lambda` for every kind; for
    /// CDF this is `lambda*sqrt(2*pi)*phi(0) = lambda`.
    pub fn d_zero_plus(&self) -> f64 {
        self.lambda
    }

    /// Second derivative of the CDF penalty for `beta > 0`:
    /// `-lambda*sqrt(2*pi)*(beta/nu^2)*phi(beta/nu)`.
    ///
    /// Its minimum over `beta > 0` is `-lambda*exp(-1/2)/nu`, attained at
    /// `beta = nu`; that bound is what `nu_min` inverts.
    pub fn cdf_second_derivative(&self, beta: f64) -> Result<f64> {
        if self.kind != PenaltyKind::Cdf {
            return Err(Error::InvalidArgument(format!(
                "cdf_second_derivative requires a cdf config, got {}",
                self.kind
            )));
        }
        if !(beta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "cdf_second_derivative requires beta > 0, got {beta}"
            )));
        }
        let nu = self.nu.expect("cdf config has nu");
        Ok(-self.lambda * SQRT_2PI * (beta / (nu * nu)) * std_normal_pdf(beta / nu))
    }
}

/// Smallest `nu` such that `convexity_floor + min_beta p''(beta) >= 0` for the
/// CDF penalty at the given `lambda`, i.e. the smallest `nu` making every
/// subproblem the solver faces strictly convex:
/// `nu_min = lambda * exp(-1/2) / convexity_floor`.
///
/// The result is clamped below at [`NU_FLOOR`] so `lambda = 0` still yields a
/// legal `nu`.
pub fn nu_min(lambda: f64, convexity_floor: f64) -> Result<f64> {
    if !(convexity_floor > 0.0) || !convexity_floor.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "nu_min requires convexity_floor > 0, got {convexity_floor}"
        )));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "nu_min requires lambda >= 0, got {lambda}"
        )));
    }
    Ok((lambda * (-0.5f64).exp() / convexity_floor).max(NU_FLOOR))
}
