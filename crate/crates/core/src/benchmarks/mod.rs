//! Benchmark problems with their ground-truth oracles.

pub mod normal_gamma;
pub mod pima;
pub mod quadrature;
pub mod rosenbrock;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::flow::FlowPreset;
use crate::model::Model;

pub use normal_gamma::{
    generate_normal_gamma_data, normal_gamma_analytic_log_evidence, normal_gamma_log_posterior, NormalGamma,
    NormalGammaPrior,
};
pub use pima::{
    gaussian_log_prior, load_pima_data, logistic_log_likelihood, pima_design_matrix, LogisticModel, PimaDataset,
    PimaModel, PUBLISHED_LOG_BF12,
};
pub use quadrature::{quadrature_log_evidence, Box2, GridSpec, QuadratureResult};
pub use rosenbrock::{rosenbrock_log_likelihood, uniform_log_prior, Rosenbrock};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundTruthSource {
    Analytic,
    Quadrature,
    Published,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Absent when only a derived quantity (a Bayes factor) is published.
    pub log_z: Option<f64>,
    pub source: GroundTruthSource,
}

#[derive(Debug, Clone)]
enum Kind {
    Rosenbrock(Rosenbrock),
    NormalGamma(NormalGamma),
    Pima(LogisticModel),
}

/// A named model with sampler initialization, flow architecture and oracle.
#[derive(Debug, Clone)]
pub struct BenchmarkProblem {
    pub name: String,
    kind: Kind,
    pub init_center: Vec<f64>,
    pub init_radius: f64,
    pub flow_preset: FlowPreset,
}

impl BenchmarkProblem {
    pub fn rosenbrock() -> Self {
        Self {
            name: "rosenbrock".into(),
            kind: Kind::Rosenbrock(Rosenbrock),
            init_center: vec![1.0, 1.0],
            init_radius: 0.5,
            flow_preset: FlowPreset::default(),
        }
    }

    pub fn normal_gamma(data: &[f64], prior: NormalGammaPrior) -> Result<Self> {
        let model = NormalGamma::new(data, prior)?;
        Ok(Self {
            name: "normal_gamma".into(),
            init_center: model.init_center(),
            init_radius: 0.1,
            kind: Kind::NormalGamma(model),
            flow_preset: FlowPreset::default(),
        })
    }

    pub fn pima(data: &PimaDataset, which: PimaModel) -> Self {
        let model = LogisticModel::pima(data, which);
        Self {
            name: match which {
                PimaModel::M1 => "pima_m1".into(),
                PimaModel::M2 => "pima_m2".into(),
            },
            init_center: vec![0.0; model.dim()],
            init_radius: 0.1,
            kind: Kind::Pima(model),
            flow_preset: FlowPreset::pima(),
        }
    }

    fn model(&self) -> &dyn Model {
        match &self.kind {
            Kind::Rosenbrock(m) => m,
            Kind::NormalGamma(m) => m,
            Kind::Pima(m) => m,
        }
    }

    /// Exact, numerically integrated or published reference evidence.
    pub fn ground_truth(&self) -> Result<GroundTruth> {
        Ok(match &self.kind {
            Kind::Rosenbrock(m) => GroundTruth {
                log_z: Some(
                    quadrature_log_evidence(|x: &[f64]| m.log_posterior(x), rosenbrock::PRIOR_BOX, GridSpec::default())?
                        .log_z,
                ),
                source: GroundTruthSource::Quadrature,
            },
            Kind::NormalGamma(m) => GroundTruth {
                log_z: Some(m.analytic_log_evidence()),
                source: GroundTruthSource::Analytic,
            },
            Kind::Pima(_) => GroundTruth {
                log_z: None,
                source: GroundTruthSource::Published,
            },
        })
    }
}

impl Model for BenchmarkProblem {
    fn dim(&self) -> usize {
        self.model().dim()
    }

    fn log_likelihood(&self, theta: &[f64]) -> f64 {
        self.model().log_likelihood(theta)
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        self.model().log_prior(theta)
    }

    fn log_posterior(&self, theta: &[f64]) -> f64 {
        self.model().log_posterior(theta)
    }
}
