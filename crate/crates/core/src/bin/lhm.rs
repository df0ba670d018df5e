use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use learned_harmonic::experiment::{
    run_bayes_factor, run_experiment, write_ground_truth, EstimatorKind, ExperimentConfig, ProblemName,
};
use learned_harmonic::Result;

#[derive(Parser)]
#[command(name = "lhm", version, about = "Learned harmonic mean evidence estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run repeated evidence trials for one problem.
    Run(Overrides),
    /// Run two experiments and report their log Bayes factor.
    BayesFactor {
        /// First model: a config file or a problem name.
        #[arg(long, default_value = "pima_m1")]
        first: String,
        /// Second model: a config file or a problem name.
        #[arg(long, default_value = "pima_m2")]
        second: String,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Write reference evidence values for a problem.
    GroundTruth {
        /// Output file; stdout when absent.
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
}

/// Flags override fields of the config file; names mirror config paths.
#[derive(Args, Clone)]
struct Overrides {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<ProblemName>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    n_trials: Option<usize>,
    #[arg(long)]
    temperature: Option<f64>,
    /// learned or original
    #[arg(long, value_parser = parse_estimator)]
    estimator: Option<EstimatorKind>,
    #[arg(long = "sampler.n-walkers")]
    n_walkers: Option<usize>,
    #[arg(long = "sampler.n-steps")]
    n_steps: Option<usize>,
    #[arg(long = "sampler.burn-in")]
    burn_in: Option<usize>,
    #[arg(long = "training.epochs")]
    epochs: Option<usize>,
    #[arg(long = "training.learning-rate")]
    learning_rate: Option<f64>,
    /// Comma-separated Normal-Gamma prior precisions.
    #[arg(long = "problem-params.tau0", value_delimiter = ',')]
    tau0: Option<Vec<f64>>,
    #[arg(long = "problem-params.data-path")]
    data_path: Option<PathBuf>,
}

fn parse_estimator(s: &str) -> std::result::Result<EstimatorKind, String> {
    match s {
        "learned" => Ok(EstimatorKind::Learned),
        "original" => Ok(EstimatorKind::Original),
        _ => Err(format!("expected 'learned' or 'original', got '{s}'")),
    }
}

impl Overrides {
    fn resolve(&self, base: Option<&str>) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, base) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(b)) if b.ends_with(".json") => ExperimentConfig::load(b.as_ref())?,
            (None, Some(b)) => ExperimentConfig::for_problem(b.parse()?),
            (None, None) => ExperimentConfig::for_problem(self.problem.unwrap_or(ProblemName::Rosenbrock)),
        };
        if let Some(p) = self.problem.filter(|_| base.is_none()) {
            cfg.problem = p;
        }
        macro_rules! set {
            ($($field:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = self.$field.clone() { $target = v; })*
            };
        }
        set! {
            seed => cfg.seed,
            jobs => cfg.jobs,
            output_dir => cfg.output_dir,
            n_trials => cfg.n_trials,
            temperature => cfg.temperature,
            estimator => cfg.estimator,
            n_walkers => cfg.sampler.n_walkers,
            n_steps => cfg.sampler.n_steps,
            burn_in => cfg.sampler.burn_in,
            epochs => cfg.training.epochs,
            learning_rate => cfg.training.learning_rate,
            tau0 => cfg.problem_params.tau0,
        }
        if let Some(path) = &self.data_path {
            cfg.problem_params.data_path = Some(path.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run(o) => {
            let cfg = o.resolve(None)?;
            let summary = run_experiment(&cfg)?;
            for g in &summary.groups {
                println!(
                    "{}: mean log z = {} (std {}, truth {}), {} ok, {} failed",
                    g.group,
                    fmt(g.mean_log_z),
                    fmt(g.std_log_z),
                    fmt(g.ground_truth),
                    g.n_ok,
                    g.n_failed
                );
            }
            println!("results in {}", cfg.output_dir.display());
            Ok(summary.n_failed == 0)
        }
        Command::BayesFactor { first, second, overrides } => {
            let out_dir = overrides.output_dir.clone().unwrap_or_else(|| PathBuf::from("results/bayes_factor"));
            let mut a = overrides.resolve(Some(&first))?;
            let mut b = overrides.resolve(Some(&second))?;
            a.output_dir = out_dir.join("first");
            b.output_dir = out_dir.join("second");
            let report = run_bayes_factor(&a, &b, &out_dir.join("bayes_factor.json"))?;
            println!(
                "log BF({} / {}) = {:.4} ± {:.4}, BF = {:.4}",
                report.first, report.second, report.log_bf, report.sigma_log_bf, report.bf12
            );
            Ok(report.n_failed == 0)
        }
        Command::GroundTruth { output, overrides } => {
            let cfg = overrides.resolve(None)?;
            match output {
                Some(path) => {
                    let reports = write_ground_truth(&cfg, &path)?;
                    for r in reports {
                        println!("{} {}: {} ({:?})", r.problem, r.group, fmt(r.log_z), r.source);
                    }
                }
                None => {
                    let reports = learned_harmonic::experiment::regen_ground_truth(&cfg)?;
                    println!("{}", serde_json::to_string_pretty(&reports)?);
                }
            }
            Ok(true)
        }
    }
}

fn fmt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.5}"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("some trials failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
