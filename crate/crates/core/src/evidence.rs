//! Re-targeted harmonic mean estimator of the reciprocal evidence.
//!
//! Each posterior sample contributes a log term
//! `x_i = ln φ(θ_i) − ln L(θ_i) − ln π(θ_i)`; the estimate is
//! `ρ̂ = (1/N) Σ exp(x_i)` with `z = 1/ρ`. Every reduction is carried out
//! after shifting by `max x_i`, so terms near `e^{±300}` are fine.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chains::Chains;
use crate::error::{Error, Result};
use crate::flow::{check_temperature, RealNvpFlow};
use crate::model::Model;
use crate::stats::logsumexp;

/// Gap above the median log term that counts a sample as a tail outlier.
pub const TAIL_GAP: f64 = 20.0;
/// Share of the total estimator mass a single term may carry before a run is flagged.
pub const TOP_TERM_FLAG: f64 = 0.99;

/// A normalized target density `φ`.
pub trait LogDensity: Sync {
    fn ln_density(&self, theta: &[f64]) -> Result<f64>;
}

impl<F> LogDensity for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn ln_density(&self, theta: &[f64]) -> Result<f64> {
        Ok(self(theta))
    }
}

/// A flow evaluated at a fixed base temperature.
#[derive(Debug, Clone, Copy)]
pub struct ConcentratedFlow<'a> {
    flow: &'a RealNvpFlow,
    temperature: f64,
}

impl<'a> ConcentratedFlow<'a> {
    pub fn new(flow: &'a RealNvpFlow, temperature: f64) -> Result<Self> {
        check_temperature(temperature)?;
        Ok(Self { flow, temperature })
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }
}

impl LogDensity for ConcentratedFlow<'_> {
    fn ln_density(&self, theta: &[f64]) -> Result<f64> {
        self.flow.log_density(theta, self.temperature)
    }
}

/// The prior as the target, which recovers the original harmonic mean estimator.
pub struct PriorTarget<'a, M: Model + ?Sized>(pub &'a M);

impl<M: Model + ?Sized> LogDensity for PriorTarget<'_, M> {
    fn ln_density(&self, theta: &[f64]) -> Result<f64> {
        Ok(self.0.log_prior(theta))
    }
}

/// Log estimator terms `ln φ − ln L − ln π` over every inference sample, in chain order.
pub fn log_estimator_terms<T, M>(target: &T, inference: &Chains, model: &M) -> Result<Vec<f64>>
where
    T: LogDensity + ?Sized,
    M: Model + ?Sized,
{
    if inference.n_samples() == 0 {
        return Err(Error::InvalidArgument("no inference samples".into()));
    }
    if inference.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: inference.dim(),
        });
    }
    let samples: Vec<&[f64]> = inference.iter().map(|(s, _)| s).collect();
    samples
        .par_iter()
        .map(|theta| {
            let x = target.ln_density(theta)? - model.log_likelihood(theta) - model.log_prior(theta);
            if x.is_finite() {
                Ok(x)
            } else {
                Err(Error::NonFinite(format!("estimator term at {theta:?}")))
            }
        })
        .collect()
}

/// Convenience wrapper: terms for a flow concentrated at `temperature`.
pub fn flow_estimator_terms<M: Model + ?Sized>(
    flow: &RealNvpFlow,
    temperature: f64,
    inference: &Chains,
    model: &M,
) -> Result<Vec<f64>> {
    log_estimator_terms(&ConcentratedFlow::new(flow, temperature)?, inference, model)
}

mod log_or_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }
}

/// Estimate of the evidence with its error estimates.
///
/// Variances are stored as natural logs (`-inf` for an exact zero, written
/// as `null` in JSON) because `ρ̂²` routinely underflows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceResult {
    pub log_z: f64,
    pub sigma_log_z: f64,
    pub log_rho_hat: f64,
    #[serde(with = "log_or_null")]
    pub var_rho_hat_log: f64,
    #[serde(with = "log_or_null")]
    pub var_of_var_log: f64,
    pub n_terms: usize,
    pub temperature: Option<f64>,
    pub flagged: bool,
    /// Fraction of terms more than [`TAIL_GAP`] above the median term.
    pub tail_fraction: f64,
    /// Share of `Σ exp(x_i)` carried by the largest term.
    pub top_term_share: f64,
}

impl EvidenceResult {
    pub fn var_rho_hat(&self) -> f64 {
        self.var_rho_hat_log.exp()
    }

    pub fn var_of_var(&self) -> f64 {
        self.var_of_var_log.exp()
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = Some(temperature);
        self
    }
}

/// Reduces log terms to `ρ̂`, its variance `s²/N` and the variance of that variance.
///
/// The variance of `s²` is estimated from the fourth central moment `m₄` as
/// `(m₄ − s⁴ (N−3)/(N−1)) / N`; dividing by `N²` gives the variance of
/// `s²/N`. Negative finite-sample values are clamped to zero.
pub fn estimate_evidence(terms: &[f64]) -> Result<EvidenceResult> {
    let n = terms.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 terms, got {n}")));
    }
    if terms.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("estimator terms".into()));
    }
    let nf = n as f64;
    let shift = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = terms.iter().map(|x| (x - shift).exp()).collect();
    let sum_w: f64 = w.iter().sum();
    let mean_w = sum_w / nf;
    let (m2, m4) = w.iter().fold((0.0, 0.0), |(a, b), &v| {
        let d2 = (v - mean_w).powi(2);
        (a + d2, b + d2 * d2)
    });
    let s2 = m2 / (nf - 1.0);
    let m4 = m4 / nf;
    let var_s2 = ((m4 - s2 * s2 * (nf - 3.0) / (nf - 1.0)) / nf).max(0.0);

    let log_rho_hat = shift + mean_w.ln();
    let var_rho_hat_log = 2.0 * shift + s2.ln() - nf.ln();
    let var_of_var_log = 4.0 * shift + var_s2.ln() - 3.0 * nf.ln();
    Ok(assemble(terms, log_rho_hat, var_rho_hat_log, var_of_var_log, sum_w))
}

/// Like [`estimate_evidence`], but the variance comes from the spread of
/// per-chain means (batch means), which stays honest when samples within a
/// chain are autocorrelated.
///
/// With chain means `m_c`, lengths `n_c`, pooled mean `ρ̂` and
/// `v = Σ n_c (m_c − ρ̂)² / N`, the variance of `ρ̂` is `v / (n_eff − 1)` where
/// `n_eff = N² / Σ n_c²`. Its variance is `v² / n_eff³ · (κ − 1 + 2/(n_eff − 1))`
/// with `κ = Σ n_c (m_c − ρ̂)⁴ / (N v²)`.
pub fn estimate_evidence_by_chain(terms: &[f64], chain_lengths: &[usize]) -> Result<EvidenceResult> {
    if chain_lengths.len() < 2 || chain_lengths.contains(&0) {
        return Err(Error::InvalidArgument("need at least 2 non-empty chains".into()));
    }
    let n: usize = chain_lengths.iter().sum();
    if n != terms.len() {
        return Err(Error::Misaligned {
            what: "terms and chain lengths",
            left: terms.len(),
            right: n,
        });
    }
    if terms.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("estimator terms".into()));
    }
    let nf = n as f64;
    let shift = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sums = Vec::with_capacity(chain_lengths.len());
    let mut start = 0;
    for &len in chain_lengths {
        sums.push(terms[start..start + len].iter().map(|x| (x - shift).exp()).sum::<f64>());
        start += len;
    }
    let sum_w: f64 = sums.iter().sum();
    let mean_w = sum_w / nf;
    let (mut v, mut k4, mut sq_len) = (0.0, 0.0, 0.0);
    for (&s, &len) in sums.iter().zip(chain_lengths) {
        let len = len as f64;
        let d2 = (s / len - mean_w).powi(2);
        v += len * d2;
        k4 += len * d2 * d2;
        sq_len += len * len;
    }
    v /= nf;
    let n_eff = nf * nf / sq_len;
    let kurtosis = k4 / nf / (v * v);
    let log_rho_hat = shift + mean_w.ln();
    let var_rho_hat_log = 2.0 * shift + v.ln() - (n_eff - 1.0).ln();
    let var_of_var_log = if v > 0.0 {
        4.0 * shift + 2.0 * v.ln() - 3.0 * n_eff.ln() + ((kurtosis - 1.0) + 2.0 / (n_eff - 1.0)).max(0.0).ln()
    } else {
        f64::NEG_INFINITY
    };
    Ok(assemble(terms, log_rho_hat, var_rho_hat_log, var_of_var_log, sum_w))
}

/// Packs the moments with the tail diagnostics. `sum_w` is `Σ exp(x_i − max x)`.
fn assemble(terms: &[f64], log_rho_hat: f64, var_rho_hat_log: f64, var_of_var_log: f64, sum_w: f64) -> EvidenceResult {
    let n = terms.len();
    let nf = n as f64;
    let sigma_log_z = (0.5 * var_rho_hat_log - log_rho_hat).exp();
    let mut sorted = terms.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let tail_fraction = terms.iter().filter(|&&x| x > median + TAIL_GAP).count() as f64 / nf;
    let top_term_share = 1.0 / sum_w;

    EvidenceResult {
        log_z: -log_rho_hat,
        sigma_log_z,
        log_rho_hat,
        var_rho_hat_log,
        var_of_var_log,
        n_terms: n,
        temperature: None,
        flagged: top_term_share > TOP_TERM_FLAG,
        tail_fraction,
        top_term_share,
    }
}

/// `ln z₁ − ln z₂` and its standard deviation, treating the two estimates as independent.
pub fn log_bayes_factor(first: &EvidenceResult, second: &EvidenceResult) -> (f64, f64) {
    (
        first.log_z - second.log_z,
        first.sigma_log_z.hypot(second.sigma_log_z),
    )
}

/// `ln ρ̂` straight from `logsumexp`, used as a cross-check of the shifted reduction.
pub fn log_mean_exp(terms: &[f64]) -> f64 {
    logsumexp(terms) - (terms.len() as f64).ln()
}
