//! Maximum-likelihood fitting of a flow to posterior samples.
//!
//! Training always evaluates the flow at temperature 1; concentration is an
//! estimation-time setting only.

mod adam;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use adam::{adam_step, AdamState};

use crate::chains::Chains;
use crate::error::{Error, Result};
use crate::flow::RealNvpFlow;

/// Samples per gradient work unit. Fixed so the reduction order, and hence
/// the summed gradient, does not depend on the thread count.
const GRAD_CHUNK: usize = 64;
const MAX_BATCH: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub epochs: usize,
    /// `None` selects `min(512, N / 10)`.
    pub batch_size: Option<usize>,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: None,
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |b: f64| b > 0.0 && b < 1.0;
        if !(self.learning_rate > 0.0)
            || !unit(self.adam_beta1)
            || !unit(self.adam_beta2)
            || !(self.adam_epsilon > 0.0)
            || self.batch_size == Some(0)
        {
            return Err(Error::InvalidArgument(format!("invalid training config {self:?}")));
        }
        Ok(())
    }

    pub fn effective_batch_size(&self, n_samples: usize) -> usize {
        self.batch_size
            .unwrap_or_else(|| (n_samples / 10).clamp(1, MAX_BATCH))
    }
}

/// Mean negative log-density of `batch` under `flow` at temperature 1.
pub fn nll_loss(flow: &RealNvpFlow, batch: &[Vec<f64>]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let sum = batch
        .iter()
        .map(|theta| flow.log_density(theta, 1.0))
        .sum::<Result<f64>>()?;
    Ok(-sum / batch.len() as f64)
}

/// Loss and its gradient with respect to [`RealNvpFlow::parameters`].
pub fn loss_and_grad(flow: &RealNvpFlow, batch: &[&[f64]]) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let n_params = flow.n_params();
    let partials = batch
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| {
            let mut grad = vec![0.0; n_params];
            let mut total = 0.0;
            for theta in chunk {
                total += flow.log_density_with_grad(theta, 1.0, &mut grad)?;
            }
            Ok((total, grad))
        })
        .collect::<Result<Vec<_>>>()?;
    let scale = -1.0 / batch.len() as f64;
    let mut grad = vec![0.0; n_params];
    let mut total = 0.0;
    for (t, g) in partials {
        total += t;
        grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
    }
    grad.iter_mut().for_each(|g| *g *= scale);
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("loss gradient".into()));
    }
    Ok((total * scale, grad))
}

/// Gradient of [`nll_loss`] with respect to [`RealNvpFlow::parameters`].
pub fn grad_nll(flow: &RealNvpFlow, batch: &[Vec<f64>]) -> Result<Vec<f64>> {
    let refs: Vec<&[f64]> = batch.iter().map(Vec::as_slice).collect();
    loss_and_grad(flow, &refs).map(|(_, g)| g)
}

#[derive(Debug, Clone)]
pub struct TrainedFlow {
    pub flow: RealNvpFlow,
    /// Mean training loss per epoch, averaged over that epoch's batches.
    pub loss_trace: Vec<f64>,
}

/// Mini-batch Adam on the mean negative log-likelihood of `training`.
pub fn train_flow(flow: &RealNvpFlow, training: &Chains, cfg: &TrainingConfig) -> Result<TrainedFlow> {
    cfg.validate()?;
    if training.n_samples() == 0 {
        return Err(Error::InvalidArgument("no training samples".into()));
    }
    if training.dim() != flow.dim() {
        return Err(Error::DimensionMismatch {
            expected: flow.dim(),
            found: training.dim(),
        });
    }
    let samples: Vec<&[f64]> = training.iter().map(|(s, _)| s).collect();
    let batch_size = cfg.effective_batch_size(samples.len());
    let mut flow = flow.clone();
    let mut params = flow.parameters();
    let mut state = AdamState::new(params.len());
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut loss_trace = Vec::with_capacity(cfg.epochs);
    let mut batch: Vec<&[f64]> = Vec::with_capacity(batch_size);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut weighted = 0.0;
        for idx in order.chunks(batch_size) {
            batch.clear();
            batch.extend(idx.iter().map(|&i| samples[i]));
            let (loss, grad) = loss_and_grad(&flow, &batch).map_err(|e| Error::Diverged {
                epoch,
                reason: e.to_string(),
                loss_trace: loss_trace.clone(),
            })?;
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    reason: format!("loss {loss}"),
                    loss_trace,
                });
            }
            weighted += loss * idx.len() as f64;
            adam_step(&mut params, &grad, &mut state, cfg)?;
            flow.set_parameters(&params).map_err(|e| Error::Diverged {
                epoch,
                reason: e.to_string(),
                loss_trace: loss_trace.clone(),
            })?;
        }
        let mean = weighted / samples.len() as f64;
        log::debug!("epoch {epoch}: mean nll {mean:.6}");
        loss_trace.push(mean);
    }
    Ok(TrainedFlow { flow, loss_trace })
}
