//! One estimation trial: sample, split, train, concentrate, estimate.

use crate::benchmarks::BenchmarkProblem;
use crate::chains::Chains;
use crate::error::Result;
use crate::evidence::{estimate_evidence_by_chain, flow_estimator_terms, log_estimator_terms, EvidenceResult, PriorTarget};
use crate::flow::{FlowPreset, RealNvpFlow};
use crate::model::Model;
use crate::sampler::{run_sampler, SamplerConfig};
use crate::training::{train_flow, TrainingConfig};

/// Everything produced by one trial.
#[derive(Debug, Clone)]
pub struct TrialOutput {
    pub result: EvidenceResult,
    pub flow: RealNvpFlow,
    pub loss_trace: Vec<f64>,
    pub training: Chains,
    pub inference: Chains,
    pub acceptance_rate: f64,
}

/// Trains a flow on `training` (standardizing first when the preset asks for it).
pub fn fit_flow(
    training: &Chains,
    preset: &FlowPreset,
    cfg: &TrainingConfig,
    seed: u64,
) -> Result<(RealNvpFlow, Vec<f64>)> {
    let mut flow = RealNvpFlow::new(training.dim(), preset, seed)?;
    if preset.standardize {
        flow.fit_standardization(training)?;
    }
    let trained = train_flow(&flow, training, cfg)?;
    Ok((trained.flow, trained.loss_trace))
}

/// Learned harmonic mean estimate from already split chains.
pub fn estimate_from_chains<M: Model + ?Sized>(
    model: &M,
    training: Chains,
    inference: Chains,
    preset: &FlowPreset,
    cfg: &TrainingConfig,
    temperature: f64,
    seed: u64,
) -> Result<TrialOutput> {
    let (flow, loss_trace) = fit_flow(&training, preset, cfg, seed)?;
    let terms = flow_estimator_terms(&flow, temperature, &inference, model)?;
    let lengths: Vec<usize> = inference.chains().iter().map(|c| c.len()).collect();
    let result = estimate_evidence_by_chain(&terms, &lengths)?.with_temperature(temperature);
    Ok(TrialOutput {
        result,
        flow,
        loss_trace,
        training,
        inference,
        acceptance_rate: f64::NAN,
    })
}

/// Full trial for a benchmark problem. `sampler.seed` is replaced by `seed`;
/// see [`sample_problem`] for initialization.
pub fn run_trial(
    problem: &BenchmarkProblem,
    sampler: &SamplerConfig,
    preset: &FlowPreset,
    training_cfg: &TrainingConfig,
    temperature: f64,
    seed: u64,
) -> Result<TrialOutput> {
    let (chains, acceptance_rate) = sample_problem(problem, sampler, seed)?;
    let (training, inference) = chains.split_half(seed)?;
    let training_cfg = TrainingConfig {
        seed,
        ..training_cfg.clone()
    };
    let mut out = estimate_from_chains(problem, training, inference, preset, &training_cfg, temperature, seed)?;
    out.acceptance_rate = acceptance_rate;
    Ok(out)
}

/// Samples the posterior for `problem` with initialization taken from the
/// problem unless `sampler.init_center` is already set.
pub fn sample_problem(problem: &BenchmarkProblem, sampler: &SamplerConfig, seed: u64) -> Result<(Chains, f64)> {
    let mut cfg = SamplerConfig { seed, ..sampler.clone() };
    if cfg.init_center.is_empty() {
        cfg.init_center = problem.init_center.clone();
        cfg.init_radius = problem.init_radius;
    }
    let out = run_sampler(|x: &[f64]| problem.log_posterior(x), &cfg)?;
    Ok((out.chains, out.acceptance_rate))
}

/// The original harmonic mean estimate (target = prior) on every sample.
pub fn prior_estimate<M: Model + ?Sized>(model: &M, chains: &Chains) -> Result<EvidenceResult> {
    let terms = log_estimator_terms(&PriorTarget(model), chains, model)?;
    let lengths: Vec<usize> = chains.chains().iter().map(|c| c.len()).collect();
    estimate_evidence_by_chain(&terms, &lengths)
}
