use std::fs;

use local_time_lab::experiment::{mixture_diagnostic, run_experiment, ExperimentConfig, ExperimentKind, ExperimentOutput};

#[test]
fn variance_table_1d_approaches_limit_from_below() {
    let cfg = ExperimentConfig::new(ExperimentKind::VarianceTable1d).with("m", 1).unwrap();
    let ExperimentOutput::Table { table, summary } = run_experiment(&cfg).unwrap() else {
        panic!("expected a table");
    };
    let dev: Vec<f64> = table.rows.iter().map(|r| r[5].parse().unwrap()).collect();
    assert!(dev.iter().all(|&d| d < 0.0));
    assert!(dev.windows(2).all(|w| w[1] > w[0]));
    let fit = &summary["fits"][0];
    let ratio = fit["sigma_sq_from_fit"].as_f64().unwrap() / fit["sigma_sq"].as_f64().unwrap();
    assert!((ratio - 1.0).abs() < 0.01, "{ratio}");
}

#[test]
fn mixture_regression_separates_from_zero() {
    let base = ExperimentConfig::new(ExperimentKind::MixtureDiagnostic)
        .with("paths", 1000)
        .unwrap()
        .with("steps", 4096)
        .unwrap();
    let real = mixture_diagnostic(&base).unwrap().summary();
    assert!(real["regression_t"].as_f64().unwrap() > 3.0);
    let null = mixture_diagnostic(&base.with("null", true).unwrap()).unwrap().summary();
    assert!(null["studentized_excess_kurtosis"].as_f64().unwrap().abs() < 0.5);
    assert!(null["studentized_skewness"].as_f64().unwrap().abs() < 0.3);
}

#[test]
fn failed_sweep_keeps_finished_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let cfg = ExperimentConfig::new(ExperimentKind::AppendixSweep)
        .with("integrals", "sing1,sing7")
        .unwrap()
        .with("delta", "0.2,0.5")
        .unwrap()
        .with_output(&out);
    assert!(run_experiment(&cfg).is_err());
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().nth(2).unwrap().starts_with("sing1,5e-1,D"));
}

#[test]
fn table_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t2");
    let cfg = ExperimentConfig::new(ExperimentKind::VarianceTable2d)
        .with("m", "1,2")
        .unwrap()
        .with_output(&out);
    run_experiment(&cfg).unwrap();
    let a = (fs::read(dir.path().join("t2.csv")).unwrap(), fs::read(dir.path().join("t2.json")).unwrap());
    run_experiment(&cfg).unwrap();
    let b = (fs::read(dir.path().join("t2.csv")).unwrap(), fs::read(dir.path().join("t2.json")).unwrap());
    assert_eq!(a, b);
}

#[test]
fn modulus_scaling_reports_slope() {
    let cfg = ExperimentConfig::new(ExperimentKind::ModulusScaling)
        .with("paths", 300)
        .unwrap()
        .with("steps", 4096)
        .unwrap();
    let ExperimentOutput::Scaling(r) = run_experiment(&cfg).unwrap() else {
        panic!("expected a scaling report");
    };
    assert_eq!(r.points.len(), 4);
    assert!(r.slope > 1.5 && r.slope < 3.5, "{}", r.slope);
    assert!(r.slope_ci.0 < r.slope && r.slope < r.slope_ci.1);
}
