//! Repeated trials with per-trial files, plot data and a summary on disk.

use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{EstimatorKind, ExperimentConfig, ProblemInstance};
use super::pipeline::{estimate_from_chains, prior_estimate, sample_problem};
use crate::benchmarks::{GroundTruthSource, PUBLISHED_LOG_BF12};
use crate::chains::Chains;
use crate::error::{Error, Result};
use crate::evidence::EvidenceResult;
use crate::flow::RealNvpFlow;

/// Cap on points per source in `corner.csv`.
pub const CORNER_POINTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Ok,
    Failed,
}

/// Contents of `trials/<group>_<trial>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub problem: String,
    pub group: String,
    pub trial: usize,
    pub seed: u64,
    pub estimator: EstimatorKind,
    pub status: TrialStatus,
    pub error: Option<String>,
    pub result: Option<EvidenceResult>,
    pub acceptance_rate: Option<f64>,
    pub final_loss: Option<f64>,
    pub ground_truth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: String,
    pub params: serde_json::Value,
    pub ground_truth: Option<f64>,
    pub ground_truth_source: GroundTruthSource,
    pub n_ok: usize,
    pub n_failed: usize,
    pub log_z: Vec<f64>,
    pub mean_log_z: Option<f64>,
    /// Sample standard deviation across trials; needs two successes.
    pub std_log_z: Option<f64>,
    pub mean_sigma_log_z: Option<f64>,
    pub mean_error: Option<f64>,
}

impl GroupSummary {
    /// Standard error of `mean_log_z`: the spread across trials when there
    /// are several, otherwise the lone trial's own sigma.
    pub fn standard_error(&self) -> Option<f64> {
        match (self.n_ok, self.std_log_z) {
            (n, Some(sd)) if n >= 2 => Some(sd / (n as f64).sqrt()),
            (1, _) => self.mean_sigma_log_z,
            _ => None,
        }
    }
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub problem: String,
    pub estimator: EstimatorKind,
    pub temperature: f64,
    pub n_trials: usize,
    pub n_failed: usize,
    pub groups: Vec<GroupSummary>,
}

struct TrialOutcome {
    group: usize,
    record: TrialRecord,
    corner: Option<(Vec<Vec<f64>>, Vec<Vec<f64>>)>,
}

/// Fails before any compute if `dir` cannot be created or written.
pub fn ensure_writable(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(".write_test");
    fs::write(&probe, b"").map_err(|e| Error::io(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_csv(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn subsample(rows: Vec<Vec<f64>>, cap: usize) -> Vec<Vec<f64>> {
    if rows.len() <= cap {
        return rows;
    }
    let stride = rows.len().div_ceil(cap);
    rows.into_iter().step_by(stride).collect()
}

fn mean_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    match values.len() {
        0 => (None, None),
        1 => (Some(values[0]), None),
        _ => {
            let (m, v) = crate::stats::mean_var(values);
            (Some(m), Some(v.sqrt()))
        }
    }
}

struct TrialValue {
    result: EvidenceResult,
    acceptance_rate: f64,
    flow: Option<RealNvpFlow>,
    loss_trace: Vec<f64>,
    posterior: Chains,
}

fn run_one(cfg: &ExperimentConfig, inst: &ProblemInstance, seed: u64) -> Result<TrialValue> {
    let (chains, acceptance_rate) = sample_problem(&inst.problem, &cfg.sampler, seed)?;
    match cfg.estimator {
        EstimatorKind::Original => Ok(TrialValue {
            result: prior_estimate(&inst.problem, &chains)?,
            acceptance_rate,
            flow: None,
            loss_trace: Vec::new(),
            posterior: chains,
        }),
        EstimatorKind::Learned => {
            let (training, inference) = chains.split_half(seed)?;
            let training_cfg = crate::training::TrainingConfig { seed, ..cfg.training.clone() };
            let preset = cfg.preset_for(&inst.problem);
            let out = estimate_from_chains(&inst.problem, training, inference, &preset, &training_cfg, cfg.temperature, seed)?;
            Ok(TrialValue {
                result: out.result,
                acceptance_rate,
                flow: Some(out.flow),
                loss_trace: out.loss_trace,
                posterior: chains,
            })
        }
    }
}

/// Runs every trial of every group, writing
///
/// * `config.json`, the resolved configuration,
/// * `trials/<group>_<t>.json` per trial, plus `loss/` and `flows/` for learned runs,
/// * `corner.csv` with posterior and flow samples from trial 0 of each group,
/// * `violin.csv` with one row per successful trial,
/// * `summary.json`.
///
/// Trial failures are recorded and counted; only setup and I/O errors abort.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentSummary> {
    cfg.validate()?;
    let out = &cfg.output_dir;
    ensure_writable(out)?;
    let instances = cfg.problems()?;
    for inst in &instances {
        let mut sampler = cfg.sampler.clone();
        if sampler.init_center.is_empty() {
            sampler.init_center = inst.problem.init_center.clone();
        }
        sampler.validate()?;
    }
    let truths = instances
        .iter()
        .map(|i| i.problem.ground_truth())
        .collect::<Result<Vec<_>>>()?;
    for dir in ["trials", "loss", "flows"] {
        fs::create_dir_all(out.join(dir)).map_err(|e| Error::io(out.join(dir), e))?;
    }
    write_json(&out.join("config.json"), cfg)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let jobs: Vec<(usize, usize)> = (0..instances.len())
        .flat_map(|g| (0..cfg.n_trials).map(move |t| (g, t)))
        .collect();
    let outcomes = pool.install(|| {
        jobs.par_iter()
            .map(|&(g, t)| -> Result<TrialOutcome> {
                let inst = &instances[g];
                let seed = cfg.seed + t as u64;
                let stem = format!("{}_{t:03}", inst.group);
                let mut record = TrialRecord {
                    problem: cfg.problem.as_str().into(),
                    group: inst.group.clone(),
                    trial: t,
                    seed,
                    estimator: cfg.estimator,
                    status: TrialStatus::Ok,
                    error: None,
                    result: None,
                    acceptance_rate: None,
                    final_loss: None,
                    ground_truth: truths[g].log_z,
                };
                let mut corner = None;
                match run_one(cfg, inst, seed) {
                    Ok(v) => {
                        info!("{stem}: log z = {:.5} ± {:.5}", v.result.log_z, v.result.sigma_log_z);
                        record.acceptance_rate = Some(v.acceptance_rate);
                        record.final_loss = v.loss_trace.last().copied();
                        if let Some(flow) = &v.flow {
                            flow.save(&out.join("flows").join(format!("{stem}.json")))?;
                            write_csv(
                                &out.join("loss").join(format!("{stem}.csv")),
                                &["epoch".into(), "mean_nll".into()],
                                v.loss_trace.iter().enumerate().map(|(e, l)| vec![e.to_string(), l.to_string()]),
                            )?;
                        }
                        if t == 0 {
                            let flow_samples = match &v.flow {
                                Some(flow) => flow.sample(CORNER_POINTS, cfg.temperature, seed)?,
                                None => Vec::new(),
                            };
                            corner = Some((subsample(v.posterior.to_rows(), CORNER_POINTS), flow_samples));
                        }
                        record.result = Some(v.result);
                    }
                    Err(e) => {
                        warn!("{stem} failed: {e}");
                        record.status = TrialStatus::Failed;
                        record.error = Some(e.to_string());
                    }
                }
                write_json(&out.join("trials").join(format!("{stem}.json")), &record)?;
                Ok(TrialOutcome { group: g, record, corner })
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let dim = instances.iter().map(|i| crate::model::Model::dim(&i.problem)).max().unwrap_or(0);
    let mut header = vec!["group".to_string(), "source".to_string()];
    header.extend((0..dim).map(|i| format!("x{i}")));
    let mut corner_rows = Vec::new();
    for o in &outcomes {
        if let Some((posterior, flow)) = &o.corner {
            for (source, rows) in [("posterior", posterior), ("flow", flow)] {
                for row in rows {
                    let mut r = vec![o.record.group.clone(), source.to_string()];
                    r.extend(row.iter().map(f64::to_string));
                    corner_rows.push(r);
                }
            }
        }
    }
    write_csv(&out.join("corner.csv"), &header, corner_rows)?;

    let violin_header: Vec<String> = ["group", "trial", "seed", "log_z", "sigma_log_z", "ground_truth"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let violin_rows = outcomes.iter().filter_map(|o| {
        let r = o.record.result.as_ref()?;
        Some(vec![
            o.record.group.clone(),
            o.record.trial.to_string(),
            o.record.seed.to_string(),
            r.log_z.to_string(),
            r.sigma_log_z.to_string(),
            o.record.ground_truth.map(|v| v.to_string()).unwrap_or_default(),
        ])
    });
    write_csv(&out.join("violin.csv"), &violin_header, violin_rows)?;

    let groups: Vec<GroupSummary> = instances
        .iter()
        .enumerate()
        .map(|(g, inst)| {
            let results: Vec<&EvidenceResult> = outcomes
                .iter()
                .filter(|o| o.group == g)
                .filter_map(|o| o.record.result.as_ref())
                .collect();
            let log_z: Vec<f64> = results.iter().map(|r| r.log_z).collect();
            let sigmas: Vec<f64> = results.iter().map(|r| r.sigma_log_z).collect();
            let (mean_log_z, std_log_z) = mean_std(&log_z);
            let truth = truths[g].log_z;
            GroupSummary {
                group: inst.group.clone(),
                params: inst.params.clone(),
                ground_truth: truth,
                ground_truth_source: truths[g].source,
                n_ok: log_z.len(),
                n_failed: cfg.n_trials - log_z.len(),
                mean_log_z,
                std_log_z,
                mean_sigma_log_z: mean_std(&sigmas).0,
                mean_error: mean_log_z.zip(truth).map(|(m, t)| m - t),
                log_z,
            }
        })
        .collect();
    let summary = ExperimentSummary {
        problem: cfg.problem.as_str().into(),
        estimator: cfg.estimator,
        temperature: cfg.temperature,
        n_trials: cfg.n_trials,
        n_failed: groups.iter().map(|g| g.n_failed).sum(),
        groups,
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedTrial {
    pub trial: usize,
    pub log_bf: f64,
    pub sigma_log_bf: f64,
}

/// Contents of the Bayes factor report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesFactorReport {
    pub first: String,
    pub second: String,
    pub log_z_first: f64,
    pub log_z_second: f64,
    pub log_bf: f64,
    pub sigma_log_bf: f64,
    /// `exp(log_bf)`.
    pub bf12: f64,
    pub per_trial: Vec<PairedTrial>,
    pub published_log_bf12: Option<f64>,
    pub n_failed: usize,
}

/// Runs both experiments (each into its own `output_dir`) and compares the
/// first group of each. Trials are paired by index.
pub fn run_bayes_factor(first: &ExperimentConfig, second: &ExperimentConfig, report: &Path) -> Result<BayesFactorReport> {
    first.validate()?;
    second.validate()?;
    if let Some(parent) = report.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_writable(parent)?;
    }
    let a = run_experiment(first)?;
    let b = run_experiment(second)?;
    let (ga, gb) = (&a.groups[0], &b.groups[0]);
    let (Some(za), Some(zb)) = (ga.mean_log_z, gb.mean_log_z) else {
        return Err(Error::InvalidArgument("every trial of one model failed".into()));
    };
    let se = ga.standard_error().unwrap_or(f64::NAN).hypot(gb.standard_error().unwrap_or(f64::NAN));
    let per_trial = paired_trials(&first.output_dir, &ga.group, &second.output_dir, &gb.group, first.n_trials.min(second.n_trials))?;
    let pima_pair = matches!(
        (a.problem.as_str(), b.problem.as_str()),
        ("pima_m1", "pima_m2") | ("pima_m2", "pima_m1")
    );
    let log_bf = za - zb;
    let out = BayesFactorReport {
        first: a.problem.clone(),
        second: b.problem.clone(),
        log_z_first: za,
        log_z_second: zb,
        log_bf,
        sigma_log_bf: se,
        bf12: log_bf.exp(),
        per_trial,
        published_log_bf12: pima_pair.then(|| if a.problem == "pima_m1" { PUBLISHED_LOG_BF12 } else { -PUBLISHED_LOG_BF12 }),
        n_failed: a.n_failed + b.n_failed,
    };
    write_json(report, &out)?;
    Ok(out)
}

fn paired_trials(dir_a: &Path, group_a: &str, dir_b: &Path, group_b: &str, n: usize) -> Result<Vec<PairedTrial>> {
    let read = |dir: &Path, group: &str, t: usize| -> Result<TrialRecord> {
        let path: PathBuf = dir.join("trials").join(format!("{group}_{t:03}.json"));
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    };
    let mut out = Vec::new();
    for t in 0..n {
        if let (Some(ra), Some(rb)) = (read(dir_a, group_a, t)?.result, read(dir_b, group_b, t)?.result) {
            let (log_bf, sigma_log_bf) = crate::evidence::log_bayes_factor(&ra, &rb);
            out.push(PairedTrial { trial: t, log_bf, sigma_log_bf });
        }
    }
    Ok(out)
}

/// One entry of the ground-truth file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthReport {
    pub problem: String,
    pub group: String,
    pub params: serde_json::Value,
    pub log_z: Option<f64>,
    pub source: GroundTruthSource,
    pub published_log_bf12: Option<f64>,
}

/// Reference evidence for every group of `cfg`'s problem.
pub fn regen_ground_truth(cfg: &ExperimentConfig) -> Result<Vec<GroundTruthReport>> {
    cfg.validate()?;
    cfg.problems()?
        .into_iter()
        .map(|inst| {
            let truth = inst.problem.ground_truth()?;
            Ok(GroundTruthReport {
                problem: cfg.problem.as_str().into(),
                group: inst.group,
                params: inst.params,
                log_z: truth.log_z,
                source: truth.source,
                published_log_bf12: (truth.source == GroundTruthSource::Published).then_some(PUBLISHED_LOG_BF12),
            })
        })
        .collect()
}

/// Writes [`regen_ground_truth`] output as a JSON array.
pub fn write_ground_truth(cfg: &ExperimentConfig, path: &Path) -> Result<Vec<GroundTruthReport>> {
    let reports = regen_ground_truth(cfg)?;
    write_json(path, &reports)?;
    Ok(reports)
}
