//! Shared helpers for the integration and acceptance suites.

#![allow(dead_code)]

use cdfreg::prelude::*;

/// The prox objective `(z - v)^2 / (2*tau) + p(|z|)`.
pub fn prox_objective(z: f64, v: f64, tau: f64, cfg: &PenaltyConfig) -> f64 {
    (z - v) * (z - v) / (2.0 * tau) + cfg.value(z)
}

/// Brute-force oracle: minimum of the prox objective over a uniform grid on
/// `[-2|v|-1, 2|v|+1]`.
pub fn grid_min_objective(v: f64, tau: f64, cfg: &PenaltyConfig, points: usize) -> f64 {
    let lo = -2.0 * v.abs() - 1.0;
    let hi = 2.0 * v.abs() + 1.0;
    let mut best = f64::INFINITY;
    for i in 0..points {
        let z = lo + (hi - lo) * i as f64 / (points - 1) as f64;
        best = best.min(prox_objective(z, v, tau, cfg));
    }
    best
}

/// A standardized design and truth from the simulation generator's base
/// setup (n = 50, p = 100, Toeplitz 0.5, 10 signals in Unif(2, 2.5)).
pub fn paper_design(sigma: f64, seed: u64) -> (StandardizedDesign, TruthSpec) {
    let sc = Scenario::paper(sigma, 1, seed);
    let (dataset, truth) = gen_replicate(&sc, 0).expect("generator");
    (standardize(&dataset).expect("standardize"), truth)
}

/// Print the criterion's pass/fail line, then fail the test if anything was
/// collected.
pub fn report(name: &str, failures: Vec<String>) {
    if failures.is_empty() {
        println!("acceptance {name}: PASS");
    } else {
        println!("acceptance {name}: FAIL ({} problem(s))", failures.len());
        for f in &failures {
            println!("  - {f}");
        }
        panic!("criterion {name} failed");
    }
}
