//! End-to-end checks on the library pipeline: generator -> standardize ->
//! path fit -> metrics.

use cdfreg::prelude::*;
use nalgebra::DVector;

fn easy_instance(seed: u64) -> (StandardizedDesign, TruthSpec, Dataset) {
    let sc = Scenario::paper(0.25, 1, seed);
    let (dataset, truth) = gen_replicate(&sc, 0).unwrap();
    let design = standardize(&dataset).unwrap();
    (design, truth, dataset)
}

#[test]
fn cdf_path_recovers_support_on_easy_data() {
    let (design, truth, _) = easy_instance(71);
    let spec = PathSpec::new(PenaltyKind::Cdf)
        .with_nu_rule(NuRule::NuMin)
        .with_n_lambda(60)
        .with_lambda_min_ratio(0.01);
    let path = fit_path(&design, &spec, &AdmmConfig::default()).unwrap();

    // Somewhere on the path the full support is recovered with few false
    // positives, and the swept ROC is clearly better than chance.
    let mut best = (0.0f64, 1.0f64); // (tpr, fpr)
    for fit in &path.fits {
        let t = tpr(&fit.beta_std, &truth).unwrap();
        let f = fpr(&fit.beta_std, &truth).unwrap();
        if t - f > best.0 - best.1 {
            best = (t, f);
        }
    }
    assert!(best.0 == 1.0, "no path point recovered the full support: {best:?}");
    assert!(best.1 <= 0.2, "best support recovery had FPR {}", best.1);

    let (_, auc) = roc_auc(&path, &truth).unwrap();
    assert!(auc > 0.9, "AUC {auc} on an easy instance");
}

#[test]
fn destandardized_fits_predict_identically() {
    let (design, _, dataset) = easy_instance(72);
    let spec = PathSpec::new(PenaltyKind::Mcp).with_n_lambda(20).with_lambda_min_ratio(0.05);
    let path = fit_path(&design, &spec, &AdmmConfig::default()).unwrap();
    for fit in &path.fits {
        let n = dataset.n();
        let pred_orig = dataset.x() * &fit.beta + DVector::from_element(n, fit.intercept);
        let pred_std = design.xs() * &fit.beta_std + DVector::from_element(n, design.y_mean());
        let gap = (pred_orig - pred_std).amax();
        assert!(gap <= 1e-10, "prediction gap {gap}");
    }
}

#[test]
fn path_nu_values_follow_the_rule() {
    let (design, _, _) = easy_instance(73);
    let acfg = AdmmConfig::default();
    let floor = convexity_floor(&design, &acfg); // p > n: equals rho
    assert_eq!(floor, acfg.rho);

    let spec = PathSpec::new(PenaltyKind::Cdf)
        .with_nu_rule(NuRule::NuBar)
        .with_n_lambda(12)
        .with_lambda_min_ratio(0.05);
    let path = fit_path(&design, &spec, &acfg).unwrap();
    for (k, &lambda) in path.lambdas.iter().enumerate() {
        let expected = (nu_min(lambda, floor).unwrap() + 3.0) / 2.0;
        assert_eq!(path.nus[k], expected);
    }
}

#[test]
fn scenario_report_row_counts_are_consistent() {
    let mut sc = Scenario::paper(0.5, 3, 99);
    sc.n = 30;
    sc.p = 40;
    sc.n_signal = 5;
    let methods = vec![
        MethodSpec::cdf(NuRule::NuMin),
        MethodSpec::new(PenaltyKind::Lasso),
    ];
    let spec = PathSpec::new(PenaltyKind::Lasso).with_n_lambda(15).with_lambda_min_ratio(0.02);
    let report = run_scenario(&sc, &methods, &spec, &AdmmConfig::default()).unwrap();

    assert_eq!(report.per_replicate.len(), 3);
    assert!(report.per_replicate.iter().all(|row| row.len() == 2));
    assert_eq!(report.mean_mse.len(), 2);
    assert!(report.mean_mse.iter().all(|per_lambda| per_lambda.len() == 15));
    assert_eq!(report.failures, vec![0, 0]);

    let mut csv = Vec::new();
    report.write_metrics_rows(&mut csv, true).unwrap();
    let lines = String::from_utf8(csv).unwrap().lines().count();
    assert_eq!(lines, 1 + 3 * 2 * 15); // header + replicates x methods x lambdas

    // aggregate means match a manual recomputation from the per-replicate rows
    for m in 0..2 {
        for k in [0usize, 7, 14] {
            let manual: f64 = report
                .per_replicate
                .iter()
                .map(|row| row[m].as_ref().unwrap().mse[k])
                .sum::<f64>()
                / 3.0;
            assert!((report.mean_mse[m][k] - manual).abs() <= 1e-15);
        }
    }
}
