//! Sparse penalized least squares with a Normal-CDF penalty.
//!
//! The crate fits `min (1/(2n))*||y - X*beta||^2 + sum_j p(|beta_j|)` by ADMM
//! for four penalty families (CDF, LASSO, SCAD, MCP), computes whole
//! regularization paths with warm starts, and ships the Monte-Carlo harness
//! used to compare the penalties on Toeplitz-correlated sparse-signal data.
//!
//! The CDF penalty `lambda*sqrt(2*pi)*nu*Phi(|beta|/nu)` interpolates between
//! hard-thresholding-like behaviour (small `nu`) and the LASSO (large `nu`).
//! [`penalty::nu_min`] gives the smallest `nu` at which every subproblem the
//! solver faces is strictly convex, which makes the fitted path unique.
//!
//! ```
//! use cdfreg::prelude::*;
//!
//! let sc = Scenario::paper(0.5, 1, 7);
//! let (dataset, _truth) = gen_replicate(&sc, 0).unwrap();
//! let design = standardize(&dataset).unwrap();
//! let spec = PathSpec::new(PenaltyKind::Cdf).with_n_lambda(20);
//! let path = fit_path(&design, &spec, &AdmmConfig::default()).unwrap();
//! assert_eq!(path.nonzero_counts[0], 0); // all-zero at lambda_max
//! ```

pub mod error;
pub mod metrics;
pub mod model;
pub mod path;
pub mod penalty;
pub mod prox;
pub mod sim;
pub mod solver;

pub use error::{Error, Result};

/// Commonly used items in one import.
pub mod prelude {
    pub use crate::error::{Error, Result};
    pub use crate::metrics::{fpr, mse, roc_auc, tpr, TruthSpec};
    pub use crate::model::{
        destandardize, load_dataset, standardize, ColumnSelector, Dataset, FitResult,
        StandardizedDesign,
    };
    pub use crate::path::{
        convexity_floor, fit_path, fit_path_at, fit_single, lambda_grid, lambda_max,
        nu_for_lambda, write_coefficients_csv, write_summary_csv, NuRule, PathResult, PathSpec,
    };
    pub use crate::penalty::{
        nu_min, PenaltyConfig, PenaltyKind, DEFAULT_MCP_GAMMA, DEFAULT_SCAD_GAMMA,
    };
    pub use crate::prox::{prox_scalar, prox_vector, soft_threshold, ProxRequest};
    pub use crate::sim::{
        child_seed, default_methods, gen_replicate, run_scenario, toeplitz_sigma, MethodSpec,
        Scenario, ScenarioReport, SupportMode,
    };
    pub use crate::solver::{adapt_rho, fit, objective_value, AdmmConfig, AdmmState};
}
