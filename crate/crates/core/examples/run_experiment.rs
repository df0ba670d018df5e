//! A configured multi-trial experiment, writing the full result bundle.

use learned_harmonic::experiment::{run_experiment, ExperimentConfig};

fn main() -> learned_harmonic::Result<()> {
    let out = std::env::temp_dir().join("lhm_normal_gamma_example");
    let cfg = ExperimentConfig::from_json(&format!(
        r#"{{
            "problem": "normal_gamma",
            "problem_params": {{ "tau0": [0.0001, 1.0] }},
            "sampler": {{ "n_steps": 600, "burn_in": 300 }},
            "training": {{ "epochs": 40 }},
            "n_trials": 2,
            "output_dir": {:?}
        }}"#,
        out.display().to_string()
    ))?;
    let summary = run_experiment(&cfg)?;
    for g in &summary.groups {
        println!("{}: mean log z {:?}, truth {:?}", g.group, g.mean_log_z, g.ground_truth);
    }
    println!("bundle in {}", out.display());
    Ok(())
}
