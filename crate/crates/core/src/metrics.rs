//! Support-recovery and estimation metrics: MSE, FPR, TPR and the
//! path-swept ROC/AUC.
//!
//! "Nonzero" always means exactly nonzero — the solver emits exact zeros, so
//! no epsilon is involved anywhere here.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::path::PathResult;

/// Ground truth for simulated data.
#[derive(Debug, Clone)]
pub struct TruthSpec {
    beta_true: DVector<f64>,
    support: Vec<usize>,
}

impl TruthSpec {
    /// Derive the support from the nonzero pattern of `beta_true`.
    pub fn new(beta_true: DVector<f64>) -> Self {
        let support = beta_true
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, _)| j)
            .collect();
        TruthSpec { beta_true, support }
    }

    pub fn beta_true(&self) -> &DVector<f64> {
        &self.beta_true
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn p(&self) -> usize {
        self.beta_true.len()
    }

    fn check_len(&self, estimate: &DVector<f64>) -> Result<()> {
        if estimate.len() != self.p() {
            return Err(Error::DimensionMismatch(format!(
                "estimate has {} entries, truth has {}",
                estimate.len(),
                self.p()
            )));
        }
        Ok(())
    }
}

/// `(1/B)(1/p) * sum_j sum_b (estimate[b][j] - truth[j])^2`.
pub fn mse(estimates: &[DVector<f64>], truth: &TruthSpec) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::InvalidArgument("mse needs at least one replicate".into()));
    }
    let p = truth.p() as f64;
    let b = estimates.len() as f64;
    let mut total = 0.0;
    for est in estimates {
        truth.check_len(est)?;
        total += (est - truth.beta_true()).norm_squared();
    }
    Ok(total / (b * p))
}

/// Fraction of true zeros estimated nonzero.
pub fn fpr(estimate: &DVector<f64>, truth: &TruthSpec) -> Result<f64> {
    truth.check_len(estimate)?;
    let n_zero = truth.p() - truth.support().len();
    if n_zero == 0 {
        return Err(Error::InvalidArgument(
            "fpr undefined: truth has no zero coefficients".into(),
        ));
    }
    let false_pos = estimate
        .iter()
        .enumerate()
        .filter(|(j, v)| truth.beta_true()[*j] == 0.0 && **v != 0.0)
        .count();
    Ok(false_pos as f64 / n_zero as f64)
}

/// Fraction of true nonzeros estimated nonzero.
pub fn tpr(estimate: &DVector<f64>, truth: &TruthSpec) -> Result<f64> {
    truth.check_len(estimate)?;
    if truth.support().is_empty() {
        return Err(Error::InvalidArgument(
            "tpr undefined: truth has an empty support".into(),
        ));
    }
    let true_pos = truth
        .support()
        .iter()
        .filter(|j| estimate[**j] != 0.0)
        .count();
    Ok(true_pos as f64 / truth.support().len() as f64)
}

/// ROC over the lambda sweep — one `(FPR, TPR)` point per lambda, augmented
/// with the `(0,0)` and `(1,1)` anchors — and its trapezoid-rule AUC. Points
/// are sorted by FPR; at tied FPR only the largest TPR is kept.
pub fn roc_auc(path: &PathResult, truth: &TruthSpec) -> Result<(Vec<(f64, f64)>, f64)> {
    if path.is_empty() {
        return Err(Error::InvalidArgument("roc_auc needs a nonempty path".into()));
    }
    let mut points = Vec::with_capacity(path.len() + 2);
    points.push((0.0, 0.0));
    points.push((1.0, 1.0));
    for fit in &path.fits {
        points.push((fpr(&fit.beta_std, truth)?, tpr(&fit.beta_std, truth)?));
    }
    points.sort_by(|a, b| a.partial_cmp(b).expect("finite rates"));

    // collapse tied FPR to the maximal TPR
    let mut roc: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for (x, y) in points {
        match roc.last_mut() {
            Some((px, py)) if *px == x => *py = py.max(y),
            _ => roc.push((x, y)),
        }
    }

    let mut auc = 0.0;
    for w in roc.windows(2) {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        auc += (x1 - x0) * (y0 + y1) / 2.0;
    }
    Ok((roc, auc))
}
