//! Prior sensitivity on the Normal-Gamma model: learned and original
//! harmonic mean estimates against the closed form as the prior widens.

use learned_harmonic::benchmarks::{generate_normal_gamma_data, BenchmarkProblem, NormalGammaPrior};
use learned_harmonic::experiment::{fit_flow, prior_estimate, sample_problem};
use learned_harmonic::evidence::flow_estimator_terms;
use learned_harmonic::{estimate_evidence_by_chain, SamplerConfig, TrainingConfig};

fn main() -> learned_harmonic::Result<()> {
    let data = generate_normal_gamma_data(100, 0.0, 1.0, 0)?;
    let sampler = SamplerConfig { n_walkers: 40, n_steps: 1500, burn_in: 500, ..SamplerConfig::default() };
    println!("{:>8} {:>12} {:>12} {:>12}", "tau0", "analytic", "learned", "original");
    for tau0 in [1e-4, 1e-2, 1.0] {
        let problem = BenchmarkProblem::normal_gamma(&data, NormalGammaPrior::vague(tau0))?;
        let truth = problem.ground_truth()?.log_z.unwrap_or(f64::NAN);
        let (chains, _) = sample_problem(&problem, &sampler, 0)?;
        let (training, inference) = chains.split_half(0)?;
        let (flow, _) = fit_flow(&training, &problem.flow_preset, &TrainingConfig::default(), 0)?;
        let terms = flow_estimator_terms(&flow, 0.9, &inference, &problem)?;
        let lengths: Vec<usize> = inference.chains().iter().map(|c| c.len()).collect();
        let learned = estimate_evidence_by_chain(&terms, &lengths)?;
        let original = prior_estimate(&problem, &inference)?;
        println!("{tau0:>8.0e} {truth:>12.4} {:>12.4} {:>12.4}", learned.log_z, original.log_z);
    }
    Ok(())
}
