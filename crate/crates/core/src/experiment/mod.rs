//! Experiment runner: repeated seeded trials with results written to disk.

pub mod config;
pub mod pipeline;
pub mod runner;

pub use config::{EstimatorKind, ExperimentConfig, ProblemInstance, ProblemName, ProblemParams};
pub use pipeline::{estimate_from_chains, fit_flow, prior_estimate, run_trial, sample_problem, TrialOutput};
pub use runner::{
    ensure_writable, regen_ground_truth, run_bayes_factor, run_experiment, write_ground_truth, BayesFactorReport,
    ExperimentSummary, GroundTruthReport, GroupSummary, PairedTrial, TrialRecord, TrialStatus, CORNER_POINTS,
};
