//! Learned harmonic mean estimation of the Bayesian evidence.
//!
//! Posterior samples are split by chain; a real NVP flow is fitted to the
//! training half by maximum likelihood, its base distribution is concentrated
//! by lowering the temperature, and the concentrated density serves as the
//! normalized target of the re-targeted harmonic mean estimator evaluated on
//! the inference half.

pub mod benchmarks;
pub mod chains;
pub mod error;
pub mod evidence;
pub mod experiment;
pub mod flow;
pub mod model;
pub mod sampler;
pub mod stats;
pub mod training;

pub use chains::Chains;
pub use error::{Error, Result};
pub use evidence::{estimate_evidence, estimate_evidence_by_chain, log_bayes_factor, EvidenceResult};
pub use flow::{FlowPreset, RealNvpFlow, ScaleMode};
pub use model::Model;
pub use sampler::{run_sampler, SamplerConfig};
pub use training::{train_flow, TrainingConfig};
