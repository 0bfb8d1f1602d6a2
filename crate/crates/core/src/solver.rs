//! ADMM solver for penalized least squares on a standardized design:
//! minimize `(1/(2n))*||y - X*beta||^2 + sum_j p(|beta_j|)`
//! via the consensus split `beta = z`.
//!
//! The smooth block update solves `(X'X/n + rho*I) beta = X'y/n + rho*(z - u)`
//! through a cached Cholesky factorization (of the p x p system when p <= n,
//! or of the n x n system through the Woodbury identity when p > n). The
//! penalized block update is the componentwise prox with step `tau = 1/rho`.
//! `z` is reported as the solution: its zeros come from prox thresholding and
//! are exact.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::model::{destandardize, FitResult, StandardizedDesign};
use crate::penalty::{PenaltyConfig, PenaltyKind};
use crate::prox::prox_vector;

/// ADMM parameters. The paper leaves all of these unstated; defaults follow
/// common practice and are tight enough for 1e-6-level downstream checks.
#[derive(Debug, Clone, Copy)]
pub struct AdmmConfig {
    /// Augmented-Lagrangian parameter.
    pub rho: f64,
    pub tol_primal: f64,
    pub tol_dual: f64,
    pub max_iter: usize,
    /// Over-relaxation coefficient `alpha` in `[1, 1.8]`.
    pub over_relaxation: f64,
    /// Residual-balancing rho adaptation.
    pub adapt_rho: bool,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        AdmmConfig {
            rho: 1.0,
            tol_primal: 1e-7,
            tol_dual: 1e-7,
            max_iter: 10_000,
            over_relaxation: 1.5,
            adapt_rho: true,
        }
    }
}

impl AdmmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(Error::InvalidConfig(format!("rho must be > 0, got {}", self.rho)));
        }
        if !(self.tol_primal > 0.0) || !(self.tol_dual > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be > 0".into()));
        }
        if self.max_iter < 1 {
            return Err(Error::InvalidConfig("max_iter must be >= 1".into()));
        }
        if !(1.0..=1.8).contains(&self.over_relaxation) {
            return Err(Error::InvalidConfig(format!(
                "over_relaxation must lie in [1, 1.8], got {}",
                self.over_relaxation
            )));
        }
        Ok(())
    }
}

/// Cached factorization of the smooth-block system at a particular rho.
/// The Gram matrix is rho-independent, so adapting rho only redoes the
/// Cholesky.
#[derive(Debug, Clone)]
struct Factor {
    rho: f64,
    n: usize,
    p: usize,
    /// `X'X/n` (p x p) when `p <= n`, `X X'` (n x n, unscaled) when `p > n`.
    gram: DMatrix<f64>,
    xty_n: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    woodbury: bool,
}

impl Factor {
    fn build(design: &StandardizedDesign, rho: f64) -> Result<Self> {
        let n = design.n();
        let p = design.p();
        let xs = design.xs();
        let xty_n = (xs.transpose() * design.y_centered()) / n as f64;
        let woodbury = p > n;
        let gram = if woodbury {
            xs * xs.transpose()
        } else {
            (xs.transpose() * xs) / n as f64
        };
        let chol = Self::factorize(&gram, rho, n, woodbury)?;
        Ok(Factor { rho, n, p, gram, xty_n, chol, woodbury })
    }

    fn factorize(
        gram: &DMatrix<f64>,
        rho: f64,
        n: usize,
        woodbury: bool,
    ) -> Result<Cholesky<f64, Dyn>> {
        let shift = if woodbury { n as f64 * rho } else { rho };
        let mut m = gram.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += shift;
        }
        Cholesky::new(m).ok_or_else(|| {
            Error::Internal("Cholesky factorization of a positive-definite system failed".into())
        })
    }

    fn set_rho(&mut self, design: &StandardizedDesign, rho: f64) -> Result<()> {
        if rho != self.rho {
            self.chol = Self::factorize(&self.gram, rho, design.n(), self.woodbury)?;
            self.rho = rho;
        }
        Ok(())
    }

    /// Solve `(X'X/n + rho*I) beta = rhs`.
    fn solve(&self, design: &StandardizedDesign, rhs: &DVector<f64>) -> DVector<f64> {
        if self.woodbury {
            // (rho*I + X'X/n)^{-1} b = (b - X'(XX' + n*rho*I)^{-1} X b) / rho
            let xb = design.xs() * rhs;
            let inner = self.chol.solve(&xb);
            (rhs - design.xs().transpose() * inner) / self.rho
        } else {
            self.chol.solve(rhs)
        }
    }
}

/// Solver iterates, reusable as a warm start for a neighbouring lambda on the
/// same design.
#[derive(Debug, Clone)]
pub struct AdmmState {
    beta: DVector<f64>,
    z: DVector<f64>,
    u: DVector<f64>,
    rho: f64,
    iterations: usize,
    factor: Option<Factor>,
}

impl AdmmState {
    /// All-zero iterates.
    pub fn cold(p: usize, rho: f64) -> Self {
        AdmmState {
            beta: DVector::zeros(p),
            z: DVector::zeros(p),
            u: DVector::zeros(p),
            rho,
            iterations: 0,
            factor: None,
        }
    }

    /// Start from caller-chosen iterates (used to probe uniqueness of the
    /// final solution under random initialization).
    pub fn from_iterates(z: DVector<f64>, u: DVector<f64>, rho: f64) -> Self {
        let p = z.len();
        AdmmState {
            beta: DVector::zeros(p),
            z,
            u,
            rho,
            iterations: 0,
            factor: None,
        }
    }

    pub fn z(&self) -> &DVector<f64> {
        &self.z
    }

    pub fn u(&self) -> &DVector<f64> {
        &self.u
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }
}

/// Residual-balancing rho update: double rho when the primal residual
/// dominates, halve it when the dual residual dominates, rescaling the scaled
/// dual `u` by the inverse factor. For the CDF penalty rho is never lowered
/// below `lambda*exp(-1/2)/nu`, the level at which the z-subproblem would stop
/// being convex when `nu` came from the `nu_min` rule.
pub fn adapt_rho(state: &mut AdmmState, cfg: &PenaltyConfig, primal: f64, dual: f64) {
    let mut new_rho = if primal > 10.0 * dual {
        state.rho * 2.0
    } else if dual > 10.0 * primal {
        state.rho / 2.0
    } else {
        return;
    };
    if new_rho < state.rho {
        if let (PenaltyKind::Cdf, Some(nu)) = (cfg.kind(), cfg.nu()) {
            let floor = cfg.lambda() * (-0.5f64).exp() / nu;
            new_rho = new_rho.max(floor.min(state.rho));
        }
    }
    new_rho = new_rho.clamp(1e-12, 1e12);
    if new_rho == state.rho {
        return;
    }
    let scale = state.rho / new_rho;
    state.u *= scale;
    state.rho = new_rho;
}

/// Penalized objective `(1/(2n))*||y - X*b||^2 + sum_j p(|b_j|)` on the
/// standardized scale.
pub fn objective_value(
    design: &StandardizedDesign,
    cfg: &PenaltyConfig,
    coeffs: &DVector<f64>,
) -> f64 {
    let resid = design.y_centered() - design.xs() * coeffs;
    let loss = resid.norm_squared() / (2.0 * design.n() as f64);
    loss + coeffs.iter().map(|b| cfg.value(*b)).sum::<f64>()
}

/// Fit one `(lambda, penalty)` point by ADMM, optionally warm-started from a
/// previous state on the same design. Returns the fit together with the final
/// state for warm-starting the next path point.
pub fn fit(
    design: &StandardizedDesign,
    cfg: &PenaltyConfig,
    acfg: &AdmmConfig,
    warm: Option<AdmmState>,
) -> Result<(FitResult, AdmmState)> {
    acfg.validate()?;
    let p = design.p();
    let sqrt_p = (p as f64).sqrt();

    let mut state = match warm {
        Some(s) => {
            if s.z.len() != p || s.u.len() != p {
                return Err(Error::DimensionMismatch(format!(
                    "warm state has {} coefficients for a design with {p} columns",
                    s.z.len()
                )));
            }
            s
        }
        None => AdmmState::cold(p, acfg.rho),
    };
    if state
        .factor
        .as_ref()
        .map(|f| f.n != design.n() || f.p != p)
        .unwrap_or(true)
    {
        state.factor = Some(Factor::build(design, state.rho)?);
    }
    if state.iterations == 0 && state.z.amax() == 0.0 && state.u.amax() == 0.0 {
        // Cold start: seed the scaled dual at its fixed-point value for
        // coordinates that stay inactive, u = clamp(x_j'y/n, +/-lambda)/rho.
        // At lambda >= lambda_max this makes the all-zero solution an exact
        // fixed point instead of an asymptotic limit.
        let lambda = cfg.lambda();
        let xty_n = &state.factor.as_ref().expect("factor built above").xty_n;
        state.u = xty_n.map(|c| c.clamp(-lambda, lambda) / state.rho);
    }

    let alpha = acfg.over_relaxation;
    let mut converged = false;
    let mut rel_primal = f64::INFINITY;
    let mut rel_dual = f64::INFINITY;
    let mut iterations = 0;

    while iterations < acfg.max_iter {
        iterations += 1;
        let factor = state.factor.as_mut().expect("factor built above");
        factor.set_rho(design, state.rho)?;

        // beta-update: (X'X/n + rho I) beta = X'y/n + rho (z - u)
        let rhs = &factor.xty_n + (&state.z - &state.u) * state.rho;
        let beta = factor.solve(design, &rhs);

        // z-update on the over-relaxed point, then the scaled dual.
        let beta_hat = &beta * alpha + &state.z * (1.0 - alpha);
        let z_prev = std::mem::replace(&mut state.z, DVector::zeros(0));
        let prox_arg = &beta_hat + &state.u;
        let z = prox_vector(&prox_arg, 1.0 / state.rho, cfg)?;
        state.u += &beta_hat - &z;
        state.z = z;
        state.beta = beta;

        if state.beta.iter().chain(state.z.iter()).chain(state.u.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Diverged(format!(
                "non-finite iterate at iteration {iterations} (rho = {})",
                state.rho
            )));
        }

        let primal_norm = (&state.beta - &state.z).norm();
        let dual_norm = state.rho * (&state.z - &z_prev).norm();
        rel_primal = primal_norm / (sqrt_p * (1.0 + state.beta.norm().max(state.z.norm())));
        rel_dual = dual_norm / (sqrt_p * (1.0 + state.u.norm() * state.rho));
        if rel_primal <= acfg.tol_primal && rel_dual <= acfg.tol_dual {
            converged = true;
            break;
        }
        if acfg.adapt_rho {
            adapt_rho(&mut state, cfg, primal_norm, dual_norm);
        }
    }

    state.iterations = iterations;
    let (beta_orig, intercept) = destandardize(&state.z, design)?;
    let result = FitResult {
        beta: beta_orig,
        intercept,
        beta_std: state.z.clone(),
        iterations,
        primal_residual: rel_primal,
        dual_residual: rel_dual,
        converged,
        objective: objective_value(design, cfg, &state.z),
    };
    Ok((result, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{standardize, Dataset};
    use crate::prox::{prox_scalar, ProxRequest};
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_design(n: usize, p: usize, seed: u64) -> StandardizedDesign {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, p, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let y = DVector::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        standardize(&Dataset::new(x, y, None).unwrap()).unwrap()
    }

    /// Columns orthonormal under the 1/n inner product and orthogonal to the
    /// intercept, so X'X/n = I after standardization.
    fn orthonormal_design(n: usize, p: usize, seed: u64) -> StandardizedDesign {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cols: Vec<DVector<f64>> = vec![DVector::from_element(n, 1.0 / (n as f64).sqrt())];
        while cols.len() < p + 1 {
            let mut v = DVector::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
            for q in &cols {
                let proj = q.dot(&v);
                v -= q * proj;
            }
            let norm = v.norm();
            if norm > 1e-8 {
                cols.push(v / norm);
            }
        }
        let x = DMatrix::from_fn(n, p, |i, j| cols[j + 1][i] * (n as f64).sqrt());
        let y = DVector::from_fn(n, |_, _| rng.random::<f64>() * 4.0 - 2.0);
        standardize(&Dataset::new(x, y, None).unwrap()).unwrap()
    }

    #[test]
    fn adapt_rho_rules() {
        let cfg = PenaltyConfig::lasso(1.0).unwrap();
        let mut state = AdmmState::from_iterates(DVector::zeros(2), DVector::from_element(2, 1.0), 1.0);

        adapt_rho(&mut state, &cfg, 1.0, 1.0);
        assert_eq!(state.rho(), 1.0);

        adapt_rho(&mut state, &cfg, 100.0, 1.0);
        assert_eq!(state.rho(), 2.0);
        assert_eq!(state.u()[0], 0.5);

        adapt_rho(&mut state, &cfg, 1.0, 100.0);
        assert_eq!(state.rho(), 1.0);
        assert_eq!(state.u()[0], 1.0);
    }

    #[test]
    fn adapt_rho_cdf_floor_binds() {
        // nu = nu_min(lambda, rho) puts the floor exactly at the current rho.
        let lambda = 1.3;
        let rho = 0.8;
        let nu = crate::penalty::nu_min(lambda, rho).unwrap();
        let cfg = PenaltyConfig::cdf(lambda, nu).unwrap();
        let mut state = AdmmState::from_iterates(DVector::zeros(2), DVector::from_element(2, 1.0), rho);
        adapt_rho(&mut state, &cfg, 1.0, 100.0);
        assert_eq!(state.rho(), rho, "floor must bind");
        assert_eq!(state.u()[0], 1.0);
        // increases are always allowed
        adapt_rho(&mut state, &cfg, 100.0, 1.0);
        assert_eq!(state.rho(), 2.0 * rho);
    }

    #[test]
    fn lambda_zero_recovers_least_squares() {
        let design = random_design(30, 6, 17);
        let cfg = PenaltyConfig::lasso(0.0).unwrap();
        let acfg = AdmmConfig::default();
        let (fit_res, _) = fit(&design, &cfg, &acfg, None).unwrap();
        assert!(fit_res.converged);

        // Direct normal-equations oracle.
        let xs = design.xs();
        let gram = (xs.transpose() * xs) / design.n() as f64;
        let rhs = (xs.transpose() * design.y_centered()) / design.n() as f64;
        let ls = gram.lu().solve(&rhs).unwrap();
        for j in 0..6 {
            assert_abs_diff_eq!(fit_res.beta_std[j], ls[j], epsilon = 1e-6);
        }
    }

    #[test]
    fn all_zero_at_lambda_max() {
        let design = random_design(25, 8, 3);
        let lambda_max = (design.xs().transpose() * design.y_centered())
            .iter()
            .map(|v| v.abs())
            .fold(0.0f64, f64::max)
            / design.n() as f64;
        for cfg in [
            PenaltyConfig::lasso(lambda_max).unwrap(),
            PenaltyConfig::scad(lambda_max, 3.7).unwrap(),
            PenaltyConfig::mcp(lambda_max, 3.0).unwrap(),
            PenaltyConfig::cdf(lambda_max, 1.0).unwrap(),
        ] {
            let (fit_res, _) = fit(&design, &cfg, &AdmmConfig::default(), None).unwrap();
            assert!(fit_res.converged);
            assert!(
                fit_res.beta_std.iter().all(|v| *v == 0.0),
                "kind {:?}: {:?}",
                cfg.kind(),
                fit_res.beta_std.as_slice()
            );
        }
    }

    #[test]
    fn orthonormal_design_matches_componentwise_prox() {
        let design = orthonormal_design(40, 5, 7);
        let c = (design.xs().transpose() * design.y_centered()) / design.n() as f64;
        let lambda = 0.3;
        for cfg in [
            PenaltyConfig::lasso(lambda).unwrap(),
            PenaltyConfig::scad(lambda, 3.7).unwrap(),
            PenaltyConfig::mcp(lambda, 3.0).unwrap(),
            PenaltyConfig::cdf(lambda, 1.0).unwrap(),
        ] {
            let (fit_res, _) = fit(&design, &cfg, &AdmmConfig::default(), None).unwrap();
            for j in 0..5 {
                let expected = prox_scalar(&ProxRequest::new(c[j], 1.0, cfg).unwrap()).unwrap();
                assert_abs_diff_eq!(fit_res.beta_std[j], expected, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn fixed_point_consistency_and_exact_zeros() {
        let design = random_design(20, 40, 5); // p > n exercises Woodbury
        let cfg = PenaltyConfig::cdf(0.2, 0.5).unwrap();
        let acfg = AdmmConfig::default();
        let (fit_res, state) = fit(&design, &cfg, &acfg, None).unwrap();
        assert!(fit_res.converged);

        let arg = state.z() + state.u();
        let back = prox_vector(&arg, 1.0 / state.rho(), &cfg).unwrap();
        let gap = (state.z() - back).amax();
        assert!(gap <= 10.0 * acfg.tol_primal, "fixed-point gap {gap}");

        // zeros are exact, not small
        assert!(fit_res.beta_std.iter().any(|v| *v == 0.0));
        for v in fit_res.beta_std.iter() {
            assert!(*v == 0.0 || v.abs() > 1e-12);
        }
    }

    #[test]
    fn objective_no_worse_than_zero_and_warm_start() {
        let design = random_design(30, 10, 21);
        let cfg = PenaltyConfig::lasso(0.05).unwrap();
        let acfg = AdmmConfig::default();
        let (first, state) = fit(&design, &cfg, &acfg, None).unwrap();
        let zero_obj = objective_value(&design, &cfg, &DVector::zeros(10));
        assert!(first.objective <= zero_obj + 1e-12);

        // Warm-starting a nearby lambda must not degrade the solution.
        let cfg2 = cfg.with_lambda(0.04).unwrap();
        let warm_start_obj = objective_value(&design, &cfg2, state.z());
        let (second, _) = fit(&design, &cfg2, &acfg, Some(state)).unwrap();
        assert!(second.objective <= warm_start_obj + 1e-12);
    }

    #[test]
    fn random_inits_agree_in_convex_regimes() {
        // LASSO anywhere, CDF with nu >= nu_min on a full-rank design: the
        // minimizer is unique, so wild initializations must not matter.
        let design = random_design(40, 8, 33);
        let gram = (design.xs().transpose() * design.xs()) / design.n() as f64;
        let min_eig = gram.symmetric_eigenvalues().iter().fold(f64::INFINITY, |a, b| a.min(*b));
        assert!(min_eig > 1e-3);
        let lambda = 0.2;
        let acfg = AdmmConfig { tol_primal: 1e-9, tol_dual: 1e-9, ..AdmmConfig::default() };
        for cfg in [
            PenaltyConfig::lasso(lambda).unwrap(),
            PenaltyConfig::cdf(lambda, crate::penalty::nu_min(lambda, min_eig).unwrap()).unwrap(),
        ] {
            let mut rng = ChaCha8Rng::seed_from_u64(8);
            let mut reference: Option<DVector<f64>> = None;
            for _ in 0..20 {
                let z0 = DVector::from_fn(8, |_, _| 4.0 * rng.random::<f64>() - 2.0);
                let u0 = DVector::from_fn(8, |_, _| 4.0 * rng.random::<f64>() - 2.0);
                let warm = AdmmState::from_iterates(z0, u0, acfg.rho);
                let (fit_res, _) = fit(&design, &cfg, &acfg, Some(warm)).unwrap();
                assert!(fit_res.converged);
                match &reference {
                    None => reference = Some(fit_res.beta_std),
                    Some(r) => {
                        let gap = (r - &fit_res.beta_std).amax();
                        assert!(gap <= 1e-6, "kind {:?}: init spread {gap}", cfg.kind());
                    }
                }
            }
        }
    }

    #[test]
    fn warm_state_dimension_checked() {
        let design = random_design(10, 4, 1);
        let cfg = PenaltyConfig::lasso(0.1).unwrap();
        let bad = AdmmState::cold(7, 1.0);
        assert!(fit(&design, &cfg, &AdmmConfig::default(), Some(bad)).is_err());
    }

    #[test]
    fn config_validation() {
        let mut acfg = AdmmConfig::default();
        acfg.rho = 0.0;
        assert!(acfg.validate().is_err());
        acfg = AdmmConfig::default();
        acfg.over_relaxation = 2.0;
        assert!(acfg.validate().is_err());
        acfg = AdmmConfig::default();
        acfg.max_iter = 0;
        assert!(acfg.validate().is_err());
    }
}
