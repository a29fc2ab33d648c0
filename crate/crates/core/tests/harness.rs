use inar::montecarlo::{
    run_replications, run_replications_with_threads, rows_to_csv, Experiment, ExperimentConfig,
};
use inar::InnovationSpec;

fn config(targets: Vec<Experiment>) -> ExperimentConfig {
    ExperimentConfig {
        spec: InnovationSpec::geometric(0.5).unwrap(),
        h_grid: vec![0.0, 2.0],
        h0: 1.0,
        n_grid: vec![40, 80],
        replications: 150,
        alpha: 0.05,
        master_seed: 2024,
        targets,
        thresholds: vec![],
    }
}

#[test]
fn identical_across_runs_and_thread_counts() {
    let c = config(Experiment::ALL.to_vec());
    let one = run_replications_with_threads(&c, 1).unwrap();
    let four = run_replications_with_threads(&c, 4).unwrap();
    let default = run_replications(&c).unwrap();
    assert_eq!(one, four);
    assert_eq!(one, default);
    assert_eq!(rows_to_csv(&one), rows_to_csv(&four));
    assert_eq!(one.len(), Experiment::ALL.len() * 2 * 2);
}

#[test]
fn master_seed_changes_results() {
    let a = run_replications(&config(vec![Experiment::EstimatorRisk])).unwrap();
    let mut c = config(vec![Experiment::EstimatorRisk]);
    c.master_seed += 1;
    let b = run_replications(&c).unwrap();
    assert_ne!(a[1].estimate, b[1].estimate);
}

#[test]
fn failures_are_accounted() {
    // short paths under a strongly mean-reverting alternative make the plug-ins degenerate
    let mut c = config(vec![Experiment::EstimatorRisk, Experiment::OlsExplosion, Experiment::DfSize]);
    c.spec = InnovationSpec::geometric(0.9).unwrap();
    c.h_grid = vec![20.0];
    c.n_grid = vec![5];
    let rows = run_replications(&c).unwrap();
    for row in &rows {
        assert!(row.failures <= row.reps);
        assert_eq!(row.reps, 150);
    }
    let risk = rows.iter().find(|r| r.experiment == Experiment::EstimatorRisk).unwrap();
    assert!(risk.failures > 0, "expected some degenerate semiparametric fits");
    assert_eq!(risk.get("semiparam_failures"), Some(risk.failures as f64));
}

#[test]
fn likelihood_ratio_is_a_martingale() {
    let mut c = config(vec![Experiment::LrLaw]);
    c.h_grid = vec![0.5, 2.0, 3.0];
    c.n_grid = vec![60];
    c.replications = 2000;
    for row in run_replications(&c).unwrap() {
        assert_eq!(row.failures, 0);
        assert!(row.mc_se > 0.0);
        assert!(
            (row.estimate - 1.0).abs() < 4.0 * row.mc_se,
            "h={} mean LR {} se {}",
            row.h,
            row.estimate,
            row.mc_se
        );
    }
}

#[test]
fn mc_standard_errors_are_positive() {
    let rows = run_replications(&config(vec![Experiment::EstimatorRisk, Experiment::MomentCheck])).unwrap();
    for row in rows.iter().filter(|r| r.h > 0.0) {
        assert!(row.mc_se > 0.0, "{:?}", row.experiment);
    }
}

#[test]
fn json_rows_render_infinities_and_rounding() {
    let rows = run_replications(&config(vec![Experiment::DownMoveLaw])).unwrap();
    let v: serde_json::Value = serde_json::to_value(&rows).unwrap();
    assert_eq!(v[0]["experiment"], "down_move_law");
    assert!(v[0]["details"]["poisson_mean"].is_number());
}
