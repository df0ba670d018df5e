//! One Rosenbrock trial compared with the quadrature reference.

use learned_harmonic::benchmarks::BenchmarkProblem;
use learned_harmonic::experiment::run_trial;
use learned_harmonic::{SamplerConfig, TrainingConfig};

fn main() -> learned_harmonic::Result<()> {
    let problem = BenchmarkProblem::rosenbrock();
    let sampler = SamplerConfig { n_walkers: 40, n_steps: 2500, burn_in: 1000, ..SamplerConfig::default() };
    let out = run_trial(&problem, &sampler, &problem.flow_preset, &TrainingConfig::default(), 0.9, 0)?;
    let truth = problem.ground_truth()?.log_z.expect("quadrature reference");
    println!(
        "log z = {:.4} ± {:.4}, quadrature {truth:.4}, final loss {:.4}, acceptance {:.3}",
        out.result.log_z,
        out.result.sigma_log_z,
        out.loss_trace.last().copied().unwrap_or(f64::NAN),
        out.acceptance_rate
    );
    Ok(())
}
