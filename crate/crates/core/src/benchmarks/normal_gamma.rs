//! Normal-Gamma model with unknown mean and precision.
//!
//! Sampled in `(μ, ℓ)` with `ℓ = ln τ`, so the posterior lives on all of
//! ℝ². The prior density in these coordinates carries the Jacobian `e^ℓ`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::model::Model;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalGammaPrior {
    pub mu0: f64,
    pub tau0: f64,
    pub a0: f64,
    pub b0: f64,
}

impl NormalGammaPrior {
    /// `μ₀ = 0`, `a₀ = b₀ = 10⁻³`.
    pub fn vague(tau0: f64) -> Self {
        Self {
            mu0: 0.0,
            tau0,
            a0: 1e-3,
            b0: 1e-3,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.tau0 > 0.0 && self.a0 > 0.0 && self.b0 > 0.0 && self.mu0.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid Normal-Gamma prior {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalGamma {
    prior: NormalGammaPrior,
    n: f64,
    sum: f64,
    sum_sq: f64,
}

impl NormalGamma {
    pub fn new(data: &[f64], prior: NormalGammaPrior) -> Result<Self> {
        prior.validate()?;
        if data.iter().any(|y| !y.is_finite()) {
            return Err(Error::NonFinite("Normal-Gamma data".into()));
        }
        Ok(Self {
            prior,
            n: data.len() as f64,
            sum: data.iter().sum(),
            sum_sq: data.iter().map(|y| y * y).sum(),
        })
    }

    pub fn prior(&self) -> &NormalGammaPrior {
        &self.prior
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    fn mean(&self) -> f64 {
        if self.n > 0.0 {
            self.sum / self.n
        } else {
            0.0
        }
    }

    /// `Σ (y_i - ȳ)²`.
    fn scatter(&self) -> f64 {
        (self.sum_sq - self.n * self.mean().powi(2)).max(0.0)
    }

    /// Closed-form conjugate evidence `ln z`.
    pub fn analytic_log_evidence(&self) -> f64 {
        let NormalGammaPrior { mu0, tau0, a0, b0 } = self.prior;
        let n = self.n;
        let a_n = a0 + n / 2.0;
        let b_n = b0 + 0.5 * (self.scatter() + tau0 * n * (self.mean() - mu0).powi(2) / (tau0 + n));
        -0.5 * n * LN_2PI + 0.5 * (tau0 / (tau0 + n)).ln() + ln_gamma(a_n) - ln_gamma(a0) + a0 * b0.ln()
            - a_n * b_n.ln()
    }

    /// Posterior mode region used to start the sampler: `(ȳ, ln(1/s²))`.
    pub fn init_center(&self) -> Vec<f64> {
        let var = if self.n > 1.0 { self.scatter() / (self.n - 1.0) } else { 1.0 };
        vec![self.mean(), -(var.max(1e-12)).ln()]
    }

    /// Log prior in `(μ, τ)`, without the `ℓ` Jacobian.
    pub fn log_prior_mu_tau(&self, mu: f64, tau: f64) -> f64 {
        if !(tau > 0.0) || !tau.is_finite() {
            return f64::NEG_INFINITY;
        }
        let NormalGammaPrior { mu0, tau0, a0, b0 } = self.prior;
        let normal = 0.5 * ((tau0 * tau).ln() - LN_2PI) - 0.5 * tau0 * tau * (mu - mu0).powi(2);
        let gamma = a0 * b0.ln() - ln_gamma(a0) + (a0 - 1.0) * tau.ln() - b0 * tau;
        normal + gamma
    }

    pub fn log_likelihood_mu_tau(&self, mu: f64, tau: f64) -> f64 {
        if !(tau > 0.0) || !tau.is_finite() {
            return f64::NEG_INFINITY;
        }
        let sq = self.sum_sq - 2.0 * mu * self.sum + self.n * mu * mu;
        0.5 * self.n * (tau.ln() - LN_2PI) - 0.5 * tau * sq
    }
}

impl Model for NormalGamma {
    fn dim(&self) -> usize {
        2
    }

    fn log_likelihood(&self, v: &[f64]) -> f64 {
        self.log_likelihood_mu_tau(v[0], v[1].exp())
    }

    fn log_prior(&self, v: &[f64]) -> f64 {
        let lp = self.log_prior_mu_tau(v[0], v[1].exp());
        if lp.is_finite() {
            lp + v[1]
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// `ln L + ln π` in `(μ, ℓ)` for the given data and prior.
pub fn normal_gamma_log_posterior(v: &[f64], data: &[f64], prior: NormalGammaPrior) -> Result<f64> {
    Ok(NormalGamma::new(data, prior)?.log_posterior(v))
}

pub fn normal_gamma_analytic_log_evidence(data: &[f64], prior: NormalGammaPrior) -> Result<f64> {
    Ok(NormalGamma::new(data, prior)?.analytic_log_evidence())
}

/// `n` i.i.d. draws from `N(mean, 1/precision)`.
pub fn generate_normal_gamma_data(n: usize, mean: f64, precision: f64, seed: u64) -> Result<Vec<f64>> {
    if !(precision > 0.0) {
        return Err(Error::InvalidArgument("precision must be positive".into()));
    }
    let dist = Normal::new(mean, precision.powf(-0.5)).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| dist.sample(&mut rng)).collect())
}
