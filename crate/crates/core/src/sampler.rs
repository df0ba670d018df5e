//! Affine-invariant ensemble sampler (Goodman–Weare stretch move).
//!
//! The ensemble is split into two halves; each half is updated in turn
//! against the frozen positions of the other, so walker updates within a
//! pass are independent and run in parallel. Every walker owns its RNG
//! stream, so results do not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chains::Chains;
use crate::error::{Error, Result};

const INIT_RETRIES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub n_walkers: usize,
    /// Retained samples per walker, after burn-in.
    pub n_steps: usize,
    pub burn_in: usize,
    pub stretch_a: f64,
    pub seed: u64,
    pub init_center: Vec<f64>,
    pub init_radius: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            n_walkers: 40,
            n_steps: 1500,
            burn_in: 1000,
            stretch_a: 2.0,
            seed: 0,
            init_center: Vec::new(),
            init_radius: 1.0,
        }
    }
}

impl SamplerConfig {
    pub fn dim(&self) -> usize {
        self.init_center.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Err(Error::InvalidArgument("init_center must be non-empty".into()));
        }
        if self.n_walkers < 2 * d || self.n_walkers % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "n_walkers must be even and at least 2*dim = {}, got {}",
                2 * d,
                self.n_walkers
            )));
        }
        if !(self.stretch_a > 1.0) {
            return Err(Error::InvalidArgument("stretch_a must exceed 1".into()));
        }
        if !(self.init_radius > 0.0) || self.init_center.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("invalid initialization ball".into()));
        }
        if self.n_steps == 0 {
            return Err(Error::InvalidArgument("n_steps must be positive".into()));
        }
        Ok(())
    }
}

/// Output of [`run_sampler`]: one chain per walker plus move statistics.
#[derive(Debug, Clone)]
pub struct SamplerOutput {
    pub chains: Chains,
    /// Accepted fraction over all moves, burn-in included.
    pub acceptance_rate: f64,
    /// Candidates rejected because the target returned NaN or `+inf`.
    pub non_finite_rejections: usize,
}

/// Stretch move: `z = ((a-1)u + 1)^2 / a` and `candidate = partner + z (walker - partner)`.
pub fn stretch_proposal(walker: &[f64], partner: &[f64], a: f64, u: f64) -> (Vec<f64>, f64) {
    let z = ((a - 1.0) * u + 1.0).powi(2) / a;
    let candidate = walker
        .iter()
        .zip(partner)
        .map(|(&w, &p)| p + z * (w - p))
        .collect();
    (candidate, z)
}

fn walker_rng(seed: u64, walker: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(walker as u64);
    rng
}

fn init_walker<F>(log_target: &F, cfg: &SamplerConfig, rng: &mut ChaCha8Rng) -> Result<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> f64,
{
    let d = cfg.dim();
    for _ in 0..INIT_RETRIES {
        let dir: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let r = cfg.init_radius * rng.random::<f64>().powf(1.0 / d as f64);
        let pos: Vec<f64> = cfg
            .init_center
            .iter()
            .zip(&dir)
            .map(|(c, v)| c + r * v / norm)
            .collect();
        let lp = log_target(&pos);
        if lp.is_finite() {
            return Ok((pos, lp));
        }
    }
    Err(Error::Initialization(INIT_RETRIES))
}

struct Walker {
    pos: Vec<f64>,
    log_p: f64,
    rng: ChaCha8Rng,
    samples: Vec<f64>,
    log_post: Vec<f64>,
    accepted: usize,
    non_finite: usize,
}

impl Walker {
    fn step<F>(&mut self, log_target: &F, partners: &[Walker], a: f64)
    where
        F: Fn(&[f64]) -> f64,
    {
        let partner = &partners[self.rng.random_range(0..partners.len())].pos;
        let (candidate, z) = stretch_proposal(&self.pos, partner, a, self.rng.random::<f64>());
        let lp = log_target(&candidate);
        let accept_u: f64 = self.rng.random();
        if lp.is_nan() || lp == f64::INFINITY {
            self.non_finite += 1;
            return;
        }
        let log_ratio = (self.pos.len() as f64 - 1.0) * z.ln() + lp - self.log_p;
        if accept_u.ln() < log_ratio {
            self.pos = candidate;
            self.log_p = lp;
            self.accepted += 1;
        }
    }

    fn record(&mut self) {
        self.samples.extend_from_slice(&self.pos);
        self.log_post.push(self.log_p);
    }
}

/// Runs the ensemble and returns one chain per walker with burn-in discarded.
pub fn run_sampler<F>(log_target: F, cfg: &SamplerConfig) -> Result<SamplerOutput>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    let mut walkers = (0..cfg.n_walkers)
        .into_par_iter()
        .map(|i| {
            let mut rng = walker_rng(cfg.seed, i);
            let (pos, log_p) = init_walker(&log_target, cfg, &mut rng)?;
            Ok(Walker {
                pos,
                log_p,
                rng,
                samples: Vec::with_capacity(cfg.n_steps * cfg.dim()),
                log_post: Vec::with_capacity(cfg.n_steps),
                accepted: 0,
                non_finite: 0,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let half = cfg.n_walkers / 2;
    for step in 0..cfg.burn_in + cfg.n_steps {
        {
            let (first, second) = walkers.split_at_mut(half);
            first
                .par_iter_mut()
                .for_each(|w| w.step(&log_target, second, cfg.stretch_a));
        }
        {
            let (first, second) = walkers.split_at_mut(half);
            second
                .par_iter_mut()
                .for_each(|w| w.step(&log_target, first, cfg.stretch_a));
        }
        if step >= cfg.burn_in {
            walkers.iter_mut().for_each(Walker::record);
        }
    }

    let moves = (cfg.n_walkers * (cfg.burn_in + cfg.n_steps)) as f64;
    let accepted: usize = walkers.iter().map(|w| w.accepted).sum();
    let non_finite: usize = walkers.iter().map(|w| w.non_finite).sum();
    if non_finite > 0 {
        log::warn!("sampler rejected {non_finite} candidates with non-finite log target");
    }
    let chains = Chains::from_flat(
        cfg.dim(),
        walkers.into_iter().map(|w| (w.samples, w.log_post)).collect(),
    )?;
    Ok(SamplerOutput {
        chains,
        acceptance_rate: accepted as f64 / moves,
        non_finite_rejections: non_finite,
    })
}
