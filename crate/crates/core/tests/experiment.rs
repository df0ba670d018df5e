use std::fs;
use std::path::Path;

use learned_harmonic::experiment::{
    regen_ground_truth, run_bayes_factor, run_experiment, write_ground_truth, EstimatorKind, ExperimentConfig,
    ProblemName, TrialStatus,
};
use learned_harmonic::benchmarks::GroundTruthSource;
use serde_json::Value;

fn tiny(problem: ProblemName, dir: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::for_problem(problem);
    cfg.sampler.n_walkers = 8;
    cfg.sampler.n_steps = 150;
    cfg.sampler.burn_in = 100;
    cfg.training.epochs = 3;
    cfg.n_trials = 2;
    cfg.output_dir = dir.to_path_buf();
    cfg
}

fn schema_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/schemas"))
}

fn assert_valid(schema: &str, path: &Path) {
    let schema: Value = serde_json::from_str(&fs::read_to_string(schema_dir().join(schema)).unwrap()).unwrap();
    let instance: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(&instance).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{}: {errors:?}", path.display());
}

#[test]
fn bundle_layout_and_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(ProblemName::Rosenbrock, dir.path());
    let summary = run_experiment(&cfg).unwrap();
    assert_eq!(summary.n_failed, 0);
    assert_eq!(summary.groups[0].n_ok, 2);
    assert_eq!(summary.groups[0].ground_truth_source, GroundTruthSource::Quadrature);
    for t in 0..2 {
        let stem = format!("rosenbrock_{t:03}");
        assert_valid("trial.schema.json", &dir.path().join("trials").join(format!("{stem}.json")));
        assert_valid("flow.schema.json", &dir.path().join("flows").join(format!("{stem}.json")));
        let loss = fs::read_to_string(dir.path().join("loss").join(format!("{stem}.csv"))).unwrap();
        assert!(loss.starts_with("epoch,mean_nll\n"));
        assert_eq!(loss.lines().count(), 4);
    }
    assert_valid("summary.schema.json", &dir.path().join("summary.json"));
    let corner = fs::read_to_string(dir.path().join("corner.csv")).unwrap();
    assert!(corner.starts_with("group,source,x0,x1\n"));
    let posterior = corner.lines().filter(|l| l.contains(",posterior,")).count();
    let flow = corner.lines().filter(|l| l.contains(",flow,")).count();
    assert_eq!(posterior, 8 * 150);
    assert_eq!(flow, 10_000);
    let violin = fs::read_to_string(dir.path().join("violin.csv")).unwrap();
    assert_eq!(violin.lines().count(), 3);
    let resolved = ExperimentConfig::load(&dir.path().join("config.json")).unwrap();
    assert_eq!(resolved, cfg);
}

#[test]
fn identical_config_gives_identical_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut cfg = tiny(ProblemName::NormalGamma, a.path());
    cfg.problem_params.tau0 = vec![0.01];
    cfg.n_trials = 1;
    run_experiment(&cfg).unwrap();
    cfg.output_dir = b.path().to_path_buf();
    cfg.jobs = 2;
    run_experiment(&cfg).unwrap();
    for file in ["trials/tau0_1e-2_000.json", "flows/tau0_1e-2_000.json", "corner.csv", "violin.csv", "summary.json"] {
        let x = fs::read(a.path().join(file)).unwrap();
        let y = fs::read(b.path().join(file)).unwrap();
        assert!(x == y, "{file} differs");
    }
}

#[test]
fn unwritable_output_fails_before_compute() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let mut cfg = tiny(ProblemName::Rosenbrock, &blocker.join("out"));
    cfg.sampler.n_steps = 10_000_000;
    let start = std::time::Instant::now();
    assert!(run_experiment(&cfg).is_err());
    assert!(start.elapsed().as_secs() < 5);
}

#[test]
fn failed_trials_are_recorded_and_counted() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(ProblemName::Rosenbrock, dir.path());
    // Outside the prior box every start has zero posterior density.
    cfg.sampler.init_center = vec![100.0, 100.0];
    cfg.sampler.init_radius = 0.1;
    let summary = run_experiment(&cfg).unwrap();
    assert_eq!(summary.n_failed, 2);
    assert_eq!(summary.groups[0].mean_log_z, None);
    let text = fs::read_to_string(dir.path().join("trials/rosenbrock_001.json")).unwrap();
    let record: learned_harmonic::experiment::TrialRecord = serde_json::from_str(&text).unwrap();
    assert_eq!(record.status, TrialStatus::Failed);
    assert!(record.error.unwrap().contains("initial"));
    assert_valid("summary.schema.json", &dir.path().join("summary.json"));
}

#[test]
fn bayes_factor_against_itself_and_swapped() {
    let root = tempfile::tempdir().unwrap();
    let a = tiny(ProblemName::Rosenbrock, &root.path().join("a"));
    let b = tiny(ProblemName::Rosenbrock, &root.path().join("b"));
    let same = run_bayes_factor(&a, &b, &root.path().join("same.json")).unwrap();
    assert_eq!(same.log_bf, 0.0);
    assert!(same.per_trial.iter().all(|p| p.log_bf == 0.0));
    assert_valid("bayes_factor.schema.json", &root.path().join("same.json"));

    let mut c = tiny(ProblemName::NormalGamma, &root.path().join("c"));
    c.problem_params.tau0 = vec![1.0];
    let forward = run_bayes_factor(&a, &c, &root.path().join("fwd.json")).unwrap();
    let backward = run_bayes_factor(&c, &a, &root.path().join("bwd.json")).unwrap();
    assert_eq!(forward.log_bf, -backward.log_bf);
    assert_eq!(forward.sigma_log_bf, backward.sigma_log_bf);
    assert!((forward.bf12 - forward.log_bf.exp()).abs() <= 1e-12 * forward.bf12);
}

#[test]
fn original_estimator_runs_without_training() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(ProblemName::NormalGamma, dir.path());
    cfg.estimator = EstimatorKind::Original;
    cfg.problem_params.tau0 = vec![1.0];
    let summary = run_experiment(&cfg).unwrap();
    assert_eq!(summary.n_failed, 0);
    assert!(fs::read_dir(dir.path().join("flows")).unwrap().next().is_none());
    let text = fs::read_to_string(dir.path().join("trials/tau0_1e0_000.json")).unwrap();
    assert!(text.contains("\"final_loss\": null"));
}

#[test]
fn ground_truth_reports() {
    let dir = tempfile::tempdir().unwrap();
    let ros = regen_ground_truth(&ExperimentConfig::for_problem(ProblemName::Rosenbrock)).unwrap();
    assert_eq!(ros[0].source, GroundTruthSource::Quadrature);
    assert!((ros[0].log_z.unwrap() - (std::f64::consts::PI / 4000.0).ln()).abs() < 1e-3);

    let ng = ExperimentConfig::for_problem(ProblemName::NormalGamma);
    let path = dir.path().join("gt.json");
    let reports = write_ground_truth(&ng, &path).unwrap();
    assert_eq!(reports.len(), 3);
    assert!(reports.iter().all(|r| r.source == GroundTruthSource::Analytic && r.log_z.is_some()));
    assert_valid("ground_truth.schema.json", &path);

    let pima = regen_ground_truth(&ExperimentConfig::for_problem(ProblemName::PimaM1)).unwrap();
    assert_eq!(pima[0].source, GroundTruthSource::Published);
    assert_eq!(pima[0].log_z, None);
    assert_eq!(pima[0].published_log_bf12, Some(2.6362));
}

#[test]
fn config_validation() {
    let mut cfg = ExperimentConfig::default();
    cfg.temperature = 0.0;
    assert!(cfg.validate().is_err());
    cfg.temperature = 0.9;
    cfg.n_trials = 0;
    assert!(cfg.validate().is_err());
    let mut ng = ExperimentConfig::for_problem(ProblemName::NormalGamma);
    ng.problem_params.tau0 = vec![];
    assert!(ng.validate().is_err());
    assert!(ExperimentConfig::from_json(r#"{"problem": "pima_m3"}"#).is_err());
    let parsed = ExperimentConfig::from_json(r#"{"problem": "pima_m2", "n_trials": 4}"#).unwrap();
    assert_eq!((parsed.problem, parsed.n_trials, parsed.temperature), (ProblemName::PimaM2, 4, 0.9));
    assert_eq!(parsed.sampler.n_steps, 2000);
    let nested = ExperimentConfig::from_json(r#"{"problem": "normal_gamma", "sampler": {"burn_in": 7}}"#).unwrap();
    assert_eq!((nested.sampler.burn_in, nested.sampler.n_steps, nested.sampler.n_walkers), (7, 1500, 40));
}
