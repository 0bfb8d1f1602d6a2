//! Scalar and vector proximal operators
//! `prox(v) = argmin_z (z - v)^2 / (2*tau) + p(|z|)`
//! for each penalty kind. This is the z-update of the ADMM solver, with
//! `tau = 1/rho`.
//!
//! LASSO, SCAD and MCP have closed forms in their convex-enough regimes and
//! fall back to exact candidate enumeration otherwise (the objective is
//! piecewise quadratic, so the global minimizer is a piece stationary point,
//! a knot, or the origin). The CDF penalty has no closed form: stationary
//! points solve `z + tau*lambda*sqrt(2*pi)*phi(z/nu) = v`, of which there are
//! at most three; they are bracketed by the extrema of the left-hand side and
//! polished with safeguarded Newton, then compared by objective value
//! together with the origin. Ties break toward 0, then toward smaller |z|.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::penalty::{std_normal_pdf, PenaltyConfig, PenaltyKind, SQRT_2PI};

/// One scalar prox evaluation: input point, step `tau` (= 1/rho in ADMM) and
/// the penalty.
#[derive(Debug, Clone, Copy)]
pub struct ProxRequest {
    pub v: f64,
    pub tau: f64,
    pub cfg: PenaltyConfig,
}

impl ProxRequest {
    pub fn new(v: f64, tau: f64, cfg: PenaltyConfig) -> Result<Self> {
        if !v.is_finite() {
            return Err(Error::InvalidArgument(format!("prox input must be finite, got {v}")));
        }
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidArgument(format!("prox step tau must be > 0, got {tau}")));
        }
        Ok(ProxRequest { v, tau, cfg })
    }
}

/// `sign(v) * max(|v| - t, 0)`.
pub fn soft_threshold(v: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Global minimizer of `(z - v)^2 / (2*tau) + p(|z|)`.
pub fn prox_scalar(req: &ProxRequest) -> Result<f64> {
    let ProxRequest { v, tau, cfg } = *req;
    if v == 0.0 || cfg.lambda() == 0.0 {
        return Ok(v);
    }
    // Odd symmetry: solve on the nonnegative axis.
    let sign = if v < 0.0 { -1.0 } else { 1.0 };
    let va = v.abs();
    let lambda = cfg.lambda();
    let out = match cfg.kind() {
        PenaltyKind::Lasso => soft_threshold(va, tau * lambda),
        PenaltyKind::Mcp => prox_mcp(va, tau, &cfg),
        PenaltyKind::Scad => prox_scad(va, tau, &cfg),
        PenaltyKind::Cdf => prox_cdf(va, tau, &cfg)?,
    };
    Ok(if out == 0.0 { 0.0 } else { sign * out })
}

/// Componentwise [`prox_scalar`].
pub fn prox_vector(v: &DVector<f64>, tau: f64, cfg: &PenaltyConfig) -> Result<DVector<f64>> {
    let mut out = DVector::zeros(v.len());
    for (i, &vi) in v.iter().enumerate() {
        let req = ProxRequest::new(vi, tau, *cfg)?;
        out[i] = prox_scalar(&req).map_err(|e| {
            Error::Internal(format!("prox failed at component {i}: {e}"))
        })?;
    }
    Ok(out)
}

fn objective(z: f64, v: f64, tau: f64, cfg: &PenaltyConfig) -> f64 {
    let d = z - v;
    d * d / (2.0 * tau) + cfg.value(z)
}

/// Evaluate the prox objective at each candidate and keep the smallest.
/// Candidates are visited in ascending order so exact ties resolve toward 0
/// and then toward smaller magnitude.
fn pick_min(mut candidates: Vec<f64>, va: f64, tau: f64, cfg: &PenaltyConfig) -> f64 {
    candidates.sort_by(|a, b| a.partial_cmp(b).expect("finite candidates"));
    let mut best = candidates[0];
    let mut best_f = objective(best, va, tau, cfg);
    for &z in &candidates[1..] {
        let f = objective(z, va, tau, cfg);
        if f < best_f {
            best = z;
            best_f = f;
        }
    }
    best
}

/// MCP prox for `va >= 0`: firm thresholding when the piecewise objective is
/// convex (`tau < gamma`), exact candidate enumeration otherwise.
fn prox_mcp(va: f64, tau: f64, cfg: &PenaltyConfig) -> f64 {
    let lambda = cfg.lambda();
    let gamma = cfg.gamma().expect("mcp config has gamma");
    let glam = gamma * lambda;
    if tau < gamma {
        if va <= tau * lambda {
            0.0
        } else if va <= glam {
            gamma * (va - tau * lambda) / (gamma - tau)
        } else {
            va
        }
    } else {
        let mut candidates = vec![0.0, glam, va.max(glam)];
        if tau != gamma {
            let zi = gamma * (va - tau * lambda) / (gamma - tau);
            if zi > 0.0 && zi < glam {
                candidates.push(zi);
            }
        }
        pick_min(candidates, va, tau, cfg)
    }
}

/// SCAD prox for `va >= 0`: three-branch closed form when every piece is
/// convex (`tau < gamma - 1`), exact candidate enumeration otherwise.
fn prox_scad(va: f64, tau: f64, cfg: &PenaltyConfig) -> f64 {
    let lambda = cfg.lambda();
    let gamma = cfg.gamma().expect("scad config has gamma");
    let glam = gamma * lambda;
    if tau < gamma - 1.0 {
        if va <= tau * lambda {
            0.0
        } else if va <= lambda * (1.0 + tau) {
            va - tau * lambda
        } else if va <= glam {
            ((gamma - 1.0) * va - tau * glam) / (gamma - 1.0 - tau)
        } else {
            va
        }
    } else {
        let mut candidates = vec![
            0.0,
            (va - tau * lambda).clamp(0.0, lambda),
            lambda,
            glam,
            va.max(glam),
        ];
        let denom = gamma - 1.0 - tau;
        if denom != 0.0 {
            let zi = ((gamma - 1.0) * va - tau * glam) / denom;
            if zi > lambda && zi < glam {
                candidates.push(zi);
            }
        }
        pick_min(candidates, va, tau, cfg)
    }
}

/// CDF prox for `va >= 0`.
///
/// Writing `a = tau*lambda*sqrt(2*pi)`, interior stationary points solve
/// `g(z) = z + a*phi(z/nu) = va`. `g'(z) = 1 - (a/nu^2) z phi(z/nu)` is
/// positive everywhere iff `tau*lambda*exp(-1/2)/nu <= 1` (the `nu_min`
/// condition with floor `1/tau`); then `g` is strictly increasing, `g(0) =
/// tau*lambda`, and the objective is convex with the usual dead zone
/// `|v| <= tau*lambda`. Otherwise `g` has exactly two extrema at `z = nu*t`,
/// `t` solving `t*exp(-t^2/2) = nu/(tau*lambda)`, and up to three roots; each
/// monotone piece is searched for a sign change.
fn prox_cdf(va: f64, tau: f64, cfg: &PenaltyConfig) -> Result<f64> {
    let lambda = cfg.lambda();
    let nu = cfg.nu().expect("cdf config has nu");
    let a = tau * lambda * SQRT_2PI;
    let q = |z: f64| z + a * std_normal_pdf(z / nu) - va;
    let dq = |z: f64| 1.0 - (a / (nu * nu)) * z * std_normal_pdf(z / nu);

    let threshold = tau * lambda; // q(0) = tau*lambda - va
    let mut candidates = vec![0.0];
    let crit = tau * lambda * (-0.5f64).exp() / nu;
    if crit <= 1.0 {
        if va > threshold {
            // Single root in (0, va]: q(0) < 0 <= q(va).
            candidates.push(find_root(&q, &dq, 0.0, va, va)?.min(va));
        }
    } else {
        let c = nu / (tau * lambda); // < exp(-1/2)
        let t1 = solve_t_exp(c, TphiBranch::Low)?;
        let t2 = solve_t_exp(c, TphiBranch::High)?;
        let z1 = nu * t1;
        let z2 = nu * t2;
        let upper = va.max(z2) + 1.0; // g(z) >= z, so any root is below va < upper
        let knots = [0.0, z1, z2, upper];
        for w in knots.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if !(hi > lo) {
                continue;
            }
            let qlo = q(lo);
            let qhi = q(hi);
            if qlo == 0.0 {
                if lo > 0.0 {
                    candidates.push(lo);
                }
                continue;
            }
            if qhi == 0.0 {
                candidates.push(hi);
                continue;
            }
            if qlo.signum() != qhi.signum() {
                // Roots never exceed va because g(z) >= z.
                candidates.push(find_root(&q, &dq, lo, hi, 0.5 * (lo + hi))?.min(va));
            }
        }
    }
    Ok(pick_min(candidates, va, tau, cfg))
}

const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 100;

/// Newton iteration safeguarded by a sign-change bracket `[lo, hi]`; steps
/// leaving the bracket are replaced by bisection, and if the Newton budget
/// runs out the remaining bracket is bisected to floating-point width.
pub(crate) fn find_root<Q, D>(q: &Q, dq: &D, mut lo: f64, mut hi: f64, start: f64) -> Result<f64>
where
    Q: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut flo = q(lo);
    let fhi = q(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Internal(format!(
            "root bracket [{lo}, {hi}] has no sign change"
        )));
    }
    let mut x = start.clamp(lo, hi);
    for _ in 0..NEWTON_MAX_ITER {
        let fx = q(x);
        if fx.abs() <= NEWTON_TOL {
            return Ok(x);
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
        } else {
            hi = x;
        }
        let slope = dq(x);
        let newton = x - fx / slope;
        x = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    // Newton did not reach the residual tolerance; fall back to bisection.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = q(mid);
        if fm.abs() <= NEWTON_TOL || (hi - lo) <= f64::EPSILON * (1.0 + hi.abs()) {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

enum TphiBranch {
    /// Root in (0, 1].
    Low,
    /// Root in [1, inf).
    High,
}

/// Solve `t * exp(-t^2/2) = c` for `c` in `(0, exp(-1/2))` on the requested
/// side of the maximizer `t = 1`.
fn solve_t_exp(c: f64, branch: TphiBranch) -> Result<f64> {
    debug_assert!(c > 0.0 && c < (-0.5f64).exp());
    let f = |t: f64| t * (-0.5 * t * t).exp() - c;
    let df = |t: f64| (1.0 - t * t) * (-0.5 * t * t).exp();
    match branch {
        TphiBranch::Low => find_root(&f, &df, 0.0, 1.0, c),
        TphiBranch::High => {
            let mut hi = 2.0;
            while f(hi) > 0.0 && hi < 64.0 {
                hi *= 2.0;
            }
            find_root(&f, &df, 1.0, hi, 0.5 * (1.0 + hi))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penalty::nu_min;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Brute-force oracle: minimum of the prox objective over a uniform grid.
    fn grid_argmin(v: f64, tau: f64, cfg: &PenaltyConfig, points: usize) -> (f64, f64) {
        let lo = -2.0 * v.abs() - 1.0;
        let hi = 2.0 * v.abs() + 1.0;
        let mut best = lo;
        let mut best_f = objective(lo, v, tau, cfg);
        for i in 1..points {
            let z = lo + (hi - lo) * i as f64 / (points - 1) as f64;
            let f = objective(z, v, tau, cfg);
            if f < best_f {
                best = z;
                best_f = f;
            }
        }
        (best, best_f)
    }

    fn random_config(rng: &mut ChaCha8Rng) -> PenaltyConfig {
        let lambda = 0.01 + 1.99 * rng.random::<f64>();
        match rng.random_range(0..4) {
            0 => PenaltyConfig::cdf(lambda, 0.1 + 4.9 * rng.random::<f64>()).unwrap(),
            1 => PenaltyConfig::lasso(lambda).unwrap(),
            2 => PenaltyConfig::scad(lambda, crate::penalty::DEFAULT_SCAD_GAMMA).unwrap(),
            _ => PenaltyConfig::mcp(lambda, crate::penalty::DEFAULT_MCP_GAMMA).unwrap(),
        }
    }

    #[test]
    fn soft_threshold_basics() {
        assert_eq!(soft_threshold(2.0, 0.5), 1.5);
        assert_eq!(soft_threshold(-0.3, 0.5), 0.0);
        assert_eq!(soft_threshold(0.0, 3.0), 0.0);
        assert_eq!(soft_threshold(-2.0, 0.5), -1.5);
    }

    #[test]
    fn zero_lambda_is_identity() {
        for cfg in [
            PenaltyConfig::cdf(0.0, 1.0).unwrap(),
            PenaltyConfig::lasso(0.0).unwrap(),
            PenaltyConfig::scad(0.0, 3.7).unwrap(),
            PenaltyConfig::mcp(0.0, 3.0).unwrap(),
        ] {
            for v in [-4.2, 0.0, 0.3, 17.0] {
                let req = ProxRequest::new(v, 0.7, cfg).unwrap();
                assert_eq!(prox_scalar(&req).unwrap(), v);
            }
        }
    }

    #[test]
    fn cdf_dead_zone_is_global() {
        // Convex regime: inputs inside tau*lambda map to exactly 0, and the
        // grid oracle agrees that 0 attains the minimum.
        let tau = 1.0;
        let lambda = 1.0;
        let cfg = PenaltyConfig::cdf(lambda, 0.7).unwrap(); // nu > nu_min = 0.6065
        for v in [0.2, -0.5, 0.99, -0.999999, 1.0] {
            let req = ProxRequest::new(v, tau, cfg).unwrap();
            let out = prox_scalar(&req).unwrap();
            assert_eq!(out, 0.0, "v = {v}");
            let (_, best_f) = grid_argmin(v, tau, &cfg, 1_000_000);
            assert!(objective(0.0, v, tau, &cfg) <= best_f + 1e-9);
        }
        for v in [1.000001, -1.1, 2.0] {
            let req = ProxRequest::new(v, tau, cfg).unwrap();
            assert!(prox_scalar(&req).unwrap() != 0.0, "v = {v}");
        }
    }

    #[test]
    fn cdf_nearly_unbiased_far_from_origin() {
        let cfg = PenaltyConfig::cdf(1.0, 0.3).unwrap();
        let req = ProxRequest::new(3.0, 1.0, cfg).unwrap();
        let out = prox_scalar(&req).unwrap();
        // the true minimizer is 3 - ~2e-22, below v but not representably so
        assert!(out > 2.99 && out <= 3.0, "out = {out}");
        assert!((out - 3.0).abs() < 1e-6);
        let (_, best_f) = grid_argmin(3.0, 1.0, &cfg, 1_000_000);
        assert!(objective(out, 3.0, 1.0, &cfg) <= best_f + 1e-9);
    }

    #[test]
    fn mcp_firm_threshold_value() {
        let cfg = PenaltyConfig::mcp(1.0, 3.0).unwrap();
        let req = ProxRequest::new(2.0, 1.0, cfg).unwrap();
        let out = prox_scalar(&req).unwrap();
        assert_abs_diff_eq!(out, 1.5, epsilon = 1e-12);
        let (_, best_f) = grid_argmin(2.0, 1.0, &cfg, 1_000_000);
        assert!(objective(out, 2.0, 1.0, &cfg) <= best_f + 1e-9);
    }

    #[test]
    fn nonconvex_fallbacks_match_grid() {
        // tau beyond the closed-form regimes exercises candidate enumeration.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let v = 20.0 * rng.random::<f64>() - 10.0;
            let tau = 4.0 + 6.0 * rng.random::<f64>(); // > gamma for both kinds
            for cfg in [
                PenaltyConfig::mcp(0.5 + rng.random::<f64>(), 3.0).unwrap(),
                PenaltyConfig::scad(0.5 + rng.random::<f64>(), 3.7).unwrap(),
            ] {
                let req = ProxRequest::new(v, tau, cfg).unwrap();
                let out = prox_scalar(&req).unwrap();
                let (_, best_f) = grid_argmin(v, tau, &cfg, 200_000);
                assert!(
                    objective(out, v, tau, &cfg) <= best_f + 1e-9,
                    "kind {:?} v {v} tau {tau}",
                    cfg.kind()
                );
            }
        }
    }

    #[test]
    fn global_minimizer_oracle_random_configs() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let cfg = random_config(&mut rng);
            let v = 20.0 * rng.random::<f64>() - 10.0;
            let tau = 0.1 + 9.9 * rng.random::<f64>();
            let req = ProxRequest::new(v, tau, cfg).unwrap();
            let out = prox_scalar(&req).unwrap();
            let (_, best_f) = grid_argmin(v, tau, &cfg, 100_000);
            assert!(
                objective(out, v, tau, &cfg) <= best_f + 1e-9,
                "kind {:?} v {v} tau {tau}",
                cfg.kind()
            );
        }
    }

    #[test]
    fn thresholding_iff_in_convex_regimes() {
        // prox(v) = 0 iff |v| <= tau*lambda, checked just either side of the
        // threshold. Holds whenever the prox objective is convex: always for
        // LASSO, tau < gamma for MCP, tau < gamma - 1 for SCAD, nu >= nu_min
        // for CDF.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let lambda = 0.01 + 1.99 * rng.random::<f64>();
            let (cfg, tau) = match rng.random_range(0..4) {
                0 => {
                    let tau = 0.1 + 9.9 * rng.random::<f64>();
                    let floor = nu_min(lambda, 1.0 / tau).unwrap();
                    let nu = floor * (1.0 + 2.0 * rng.random::<f64>());
                    (PenaltyConfig::cdf(lambda, nu).unwrap(), tau)
                }
                1 => (PenaltyConfig::lasso(lambda).unwrap(), 0.1 + 9.9 * rng.random::<f64>()),
                2 => (
                    PenaltyConfig::scad(lambda, 3.7).unwrap(),
                    0.1 + 2.5 * rng.random::<f64>(),
                ),
                _ => (
                    PenaltyConfig::mcp(lambda, 3.0).unwrap(),
                    0.1 + 2.8 * rng.random::<f64>(),
                ),
            };
            let t = tau * lambda;
            for (v, expect_zero) in [
                (t * (1.0 - 1e-6), true),
                (-t * (1.0 - 1e-6), true),
                (t * (1.0 + 1e-6), false),
                (-t * (1.0 + 1e-6), false),
            ] {
                let req = ProxRequest::new(v, tau, cfg).unwrap();
                let out = prox_scalar(&req).unwrap();
                assert_eq!(
                    out == 0.0,
                    expect_zero,
                    "kind {:?} lambda {lambda} tau {tau} v {v} -> {out}",
                    cfg.kind()
                );
            }
        }
    }

    #[test]
    fn convex_regime_newton_multistart_agrees() {
        // With nu >= nu_min(lambda, 1/tau) the stationarity equation has one
        // root; Newton from different starts inside the bracket must agree.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let lambda = 0.05 + 1.95 * rng.random::<f64>();
            let tau = 0.1 + 4.9 * rng.random::<f64>();
            let nu = nu_min(lambda, 1.0 / tau).unwrap() * (1.0 + rng.random::<f64>());
            let va = tau * lambda * (1.0 + 3.0 * rng.random::<f64>());
            let a = tau * lambda * SQRT_2PI;
            let q = |z: f64| z + a * std_normal_pdf(z / nu) - va;
            let dq = |z: f64| 1.0 - (a / (nu * nu)) * z * std_normal_pdf(z / nu);
            let from_v = find_root(&q, &dq, 0.0, va, va).unwrap();
            let from_zero = find_root(&q, &dq, 0.0, va, 1e-12).unwrap();
            let from_mid = find_root(&q, &dq, 0.0, va, va / 2.0).unwrap();
            assert!((from_v - from_zero).abs() <= 1e-10);
            assert!((from_v - from_mid).abs() <= 1e-10);
        }
    }

    #[test]
    fn convex_regime_prox_is_monotone() {
        let lambda = 0.8;
        let tau = 1.7;
        let nu = nu_min(lambda, 1.0 / tau).unwrap();
        let cfg = PenaltyConfig::cdf(lambda, nu).unwrap();
        let mut prev = f64::NEG_INFINITY;
        let mut v = -6.0;
        while v <= 6.0 {
            let out = prox_scalar(&ProxRequest::new(v, tau, cfg).unwrap()).unwrap();
            assert!(out >= prev - 1e-12, "prox not monotone at v = {v}");
            prev = out;
            v += 0.01;
        }
    }

    #[test]
    fn prox_vector_componentwise() {
        let cfg = PenaltyConfig::cdf(0.7, 0.9).unwrap();
        let zero = DVector::from_element(5, 0.0);
        assert_eq!(prox_vector(&zero, 1.0, &cfg).unwrap(), zero);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v = DVector::from_fn(10, |_, _| 8.0 * rng.random::<f64>() - 4.0);
        let out = prox_vector(&v, 0.6, &cfg).unwrap();
        for i in 0..10 {
            let req = ProxRequest::new(v[i], 0.6, cfg).unwrap();
            assert_eq!(out[i], prox_scalar(&req).unwrap());
        }
    }

    #[test]
    fn invalid_requests_rejected() {
        let cfg = PenaltyConfig::lasso(1.0).unwrap();
        assert!(ProxRequest::new(1.0, 0.0, cfg).is_err());
        assert!(ProxRequest::new(f64::NAN, 1.0, cfg).is_err());
    }

    proptest! {
        #[test]
        fn odd_symmetry_and_shrinkage(
            v in -12.0f64..12.0,
            tau in 0.1f64..8.0,
            lambda in 0.0f64..2.0,
            nu in 0.1f64..5.0,
            pick in 0usize..4,
        ) {
            let cfg = match pick {
                0 => PenaltyConfig::cdf(lambda, nu).unwrap(),
                1 => PenaltyConfig::lasso(lambda).unwrap(),
                2 => PenaltyConfig::scad(lambda, 3.7).unwrap(),
                _ => PenaltyConfig::mcp(lambda, 3.0).unwrap(),
            };
            let plus = prox_scalar(&ProxRequest::new(v, tau, cfg).unwrap()).unwrap();
            let minus = prox_scalar(&ProxRequest::new(-v, tau, cfg).unwrap()).unwrap();
            prop_assert!((plus + minus).abs() <= 1e-12);
            prop_assert!(plus.abs() <= v.abs() + 1e-12);
            if plus != 0.0 {
                prop_assert_eq!(plus.signum(), v.signum());
            }
        }
    }
}
