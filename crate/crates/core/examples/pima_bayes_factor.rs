//! Log Bayes factor between the two Pima Indians logistic regression models.
//! Takes a few minutes on one core.

use learned_harmonic::experiment::{run_bayes_factor, ExperimentConfig, ProblemName};

fn main() -> learned_harmonic::Result<()> {
    let out = std::env::temp_dir().join("lhm_pima_example");
    let mut first = ExperimentConfig::for_problem(ProblemName::PimaM1);
    let mut second = ExperimentConfig::for_problem(ProblemName::PimaM2);
    first.output_dir = out.join("m1");
    second.output_dir = out.join("m2");
    let report = run_bayes_factor(&first, &second, &out.join("bayes_factor.json"))?;
    println!(
        "log z M1 = {:.4}, log z M2 = {:.4}, log BF12 = {:.4} ± {:.4} (published {:?})",
        report.log_z_first, report.log_z_second, report.log_bf, report.sigma_log_bf, report.published_log_bf12
    );
    println!("bundle in {}", out.display());
    Ok(())
}
