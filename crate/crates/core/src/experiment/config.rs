//! Experiment configuration, read from a single JSON document.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::benchmarks::{
    generate_normal_gamma_data, load_pima_data, BenchmarkProblem, NormalGammaPrior, PimaDataset, PimaModel,
};
use crate::error::{Error, Result};
use crate::flow::{check_temperature, FlowPreset};
use crate::sampler::SamplerConfig;
use crate::training::TrainingConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemName {
    Rosenbrock,
    NormalGamma,
    PimaM1,
    PimaM2,
}

impl ProblemName {
    pub fn as_str(self) -> &'static str {
        match self {
            ProblemName::Rosenbrock => "rosenbrock",
            ProblemName::NormalGamma => "normal_gamma",
            ProblemName::PimaM1 => "pima_m1",
            ProblemName::PimaM2 => "pima_m2",
        }
    }
}

impl std::str::FromStr for ProblemName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rosenbrock" => Ok(ProblemName::Rosenbrock),
            "normal_gamma" => Ok(ProblemName::NormalGamma),
            "pima_m1" => Ok(ProblemName::PimaM1),
            "pima_m2" => Ok(ProblemName::PimaM2),
            other => Err(Error::InvalidArgument(format!("unknown problem '{other}'"))),
        }
    }
}

/// Which target density the estimator divides by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Temperature-concentrated flow trained on half the chains.
    #[default]
    Learned,
    /// The prior, i.e. the original harmonic mean, on all chains.
    Original,
}

/// Problem-specific knobs. Fields irrelevant to the chosen problem are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProblemParams {
    /// Normal-Gamma prior precision scales; one group of trials per value.
    pub tau0: Vec<f64>,
    pub n_data: usize,
    pub data_seed: u64,
    pub data_mean: f64,
    pub data_precision: f64,
    /// Pima CSV; the bundled copy when absent.
    pub data_path: Option<PathBuf>,
}

impl Default for ProblemParams {
    fn default() -> Self {
        Self {
            tau0: vec![1e-4, 1e-2, 1.0],
            n_data: 100,
            data_seed: 0,
            data_mean: 0.0,
            data_precision: 1.0,
            data_path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub problem: ProblemName,
    pub problem_params: ProblemParams,
    /// An empty `init_center` means "use the problem's initialization".
    pub sampler: SamplerConfig,
    /// `None` picks the problem's preset.
    pub flow_preset: Option<FlowPreset>,
    pub training: TrainingConfig,
    pub estimator: EstimatorKind,
    pub temperature: f64,
    pub n_trials: usize,
    /// Trial `t` uses seed `seed + t`.
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Worker threads; 0 lets rayon decide.
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::for_problem(ProblemName::Rosenbrock)
    }
}

impl ExperimentConfig {
    /// Desk-scale defaults for each problem.
    pub fn for_problem(problem: ProblemName) -> Self {
        let (n_steps, burn_in) = match problem {
            ProblemName::Rosenbrock => (2500, 1000),
            ProblemName::NormalGamma => (1500, 500),
            ProblemName::PimaM1 | ProblemName::PimaM2 => (2000, 1000),
        };
        Self {
            problem,
            problem_params: ProblemParams::default(),
            sampler: SamplerConfig {
                n_walkers: 40,
                n_steps,
                burn_in,
                ..SamplerConfig::default()
            },
            flow_preset: None,
            training: TrainingConfig::default(),
            estimator: EstimatorKind::Learned,
            temperature: 0.9,
            n_trials: 1,
            seed: 0,
            output_dir: PathBuf::from("results"),
            jobs: 1,
        }
    }

    /// Fields missing from `text` take the defaults of the problem it names.
    pub fn from_json(text: &str) -> Result<Self> {
        let given: serde_json::Value = serde_json::from_str(text)?;
        let problem = match given.get("problem") {
            Some(p) => serde_json::from_value(p.clone())?,
            None => ProblemName::Rosenbrock,
        };
        let mut merged = serde_json::to_value(Self::for_problem(problem))?;
        merge(&mut merged, given);
        Ok(serde_json::from_value(merged)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Checks everything that can be checked without building the problems.
    pub fn validate(&self) -> Result<()> {
        check_temperature(self.temperature)?;
        if self.n_trials == 0 {
            return Err(Error::InvalidArgument("n_trials must be at least 1".into()));
        }
        self.training.validate()?;
        if self.problem == ProblemName::NormalGamma {
            let p = &self.problem_params;
            if p.tau0.is_empty() || p.tau0.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
                return Err(Error::InvalidArgument("tau0 must be a non-empty list of positive values".into()));
            }
        }
        Ok(())
    }

    /// One problem instance per group of trials, each with a label and the
    /// parameters that define it.
    pub fn problems(&self) -> Result<Vec<ProblemInstance>> {
        let p = &self.problem_params;
        let instances = match self.problem {
            ProblemName::Rosenbrock => vec![ProblemInstance {
                group: "rosenbrock".into(),
                params: serde_json::json!({}),
                problem: BenchmarkProblem::rosenbrock(),
            }],
            ProblemName::NormalGamma => {
                let data = generate_normal_gamma_data(p.n_data, p.data_mean, p.data_precision, p.data_seed)?;
                p.tau0
                    .iter()
                    .map(|&tau0| {
                        Ok(ProblemInstance {
                            group: format!("tau0_{tau0:e}"),
                            params: serde_json::json!({
                                "tau0": tau0,
                                "n_data": p.n_data,
                                "data_seed": p.data_seed,
                                "data_mean": p.data_mean,
                                "data_precision": p.data_precision,
                            }),
                            problem: BenchmarkProblem::normal_gamma(&data, NormalGammaPrior::vague(tau0))?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?
            }
            ProblemName::PimaM1 | ProblemName::PimaM2 => {
                let data = match &p.data_path {
                    Some(path) => load_pima_data(path)?,
                    None => PimaDataset::bundled(),
                };
                let which = if self.problem == ProblemName::PimaM1 { PimaModel::M1 } else { PimaModel::M2 };
                vec![ProblemInstance {
                    group: self.problem.as_str().into(),
                    params: serde_json::json!({ "data_path": p.data_path }),
                    problem: BenchmarkProblem::pima(&data, which),
                }]
            }
        };
        Ok(instances)
    }

    pub fn preset_for(&self, problem: &BenchmarkProblem) -> FlowPreset {
        self.flow_preset.clone().unwrap_or_else(|| problem.flow_preset.clone())
    }
}

/// Overlays `patch` onto `base`, recursing into objects.
fn merge(base: &mut serde_json::Value, patch: serde_json::Value) {
    match (base, patch) {
        (serde_json::Value::Object(b), serde_json::Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) if v.is_object() && slot.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, p) => *b = p,
    }
}

#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub group: String,
    pub params: serde_json::Value,
    pub problem: BenchmarkProblem,
}
