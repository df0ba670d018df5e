//! Real NVP normalizing flow over a zero-mean Gaussian base with covariance `T·I`.
//!
//! Generative direction: `z → layer_0 → permute → layer_1 → … → layer_{L-1} → u`,
//! then `θ = shift + scale ⊙ u`. The elementwise affine `(shift, scale)` is a
//! fixed standardization fitted from training data; it is identity on a fresh
//! flow and is not a trainable parameter.

mod coupling;
mod dense;

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use coupling::{CouplingLayer, ScaleMode};
pub use dense::{DenseNet, DEFAULT_LEAKY_SLOPE};

use crate::chains::Chains;
use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;
pub const FLOW_DOCUMENT_VERSION: u32 = 1;

/// Architecture of a flow; parameters are drawn separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowPreset {
    pub n_layers: usize,
    /// The first `n_scaled` layers carry a scale network.
    pub n_scaled: usize,
    /// Hidden width; `None` means `max(2·D, 8)`.
    pub hidden: Option<usize>,
    pub scale_mode: ScaleMode,
    pub leaky_slope: f64,
    /// Fit the standardizing affine from the training samples before training.
    pub standardize: bool,
    /// Start every coupling at (or nearest to) the identity: output weights
    /// zero, translation bias zero, scale bias at [`ScaleMode::neutral_raw`].
    /// Hidden layers stay random.
    pub identity_init: bool,
}

impl Default for FlowPreset {
    fn default() -> Self {
        Self {
            n_layers: 6,
            n_scaled: 2,
            hidden: None,
            scale_mode: ScaleMode::Softplus,
            leaky_slope: DEFAULT_LEAKY_SLOPE,
            standardize: true,
            identity_init: true,
        }
    }
}

impl FlowPreset {
    /// Eight layers, six scaled.
    pub fn pima() -> Self {
        Self {
            n_layers: 8,
            n_scaled: 6,
            ..Self::default()
        }
    }

    pub fn hidden_width(&self, dim: usize) -> usize {
        self.hidden.unwrap_or((2 * dim).max(8))
    }
}

pub fn check_temperature(temperature: f64) -> Result<()> {
    if temperature > 0.0 && temperature <= 1.0 {
        Ok(())
    } else {
        Err(Error::Temperature(temperature))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealNvpFlow {
    dim: usize,
    layers: Vec<CouplingLayer>,
    shift: Vec<f64>,
    scale: Vec<f64>,
}

impl RealNvpFlow {
    /// Randomly initialized flow.
    pub fn new(dim: usize, preset: &FlowPreset, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut flow = Self::build(dim, preset, |d, h, o| {
            DenseNet::random(d, h, o, preset.leaky_slope, &mut rng)
        })?;
        if preset.identity_init {
            let neutral = preset.scale_mode.neutral_raw();
            for layer in &mut flow.layers {
                layer.translate_net = layer.translate_net.clone().constant_output(0.0);
                layer.scale_net = layer.scale_net.take().map(|net| net.constant_output(neutral));
            }
        }
        Ok(flow)
    }

    /// Flow with every network parameter zero.
    pub fn zeros(dim: usize, preset: &FlowPreset) -> Result<Self> {
        Self::build(dim, preset, |d, h, o| DenseNet::zeros(d, h, o, preset.leaky_slope))
    }

    fn build(
        dim: usize,
        preset: &FlowPreset,
        mut make: impl FnMut(usize, usize, usize) -> DenseNet,
    ) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidArgument("flows need dimension >= 2".into()));
        }
        if preset.n_scaled > preset.n_layers {
            return Err(Error::InvalidArgument("more scaled layers than layers".into()));
        }
        let split = dim.div_ceil(2);
        let hidden = preset.hidden_width(dim);
        let layers = (0..preset.n_layers)
            .map(|i| {
                let translate = make(split, hidden, dim - split);
                let scale = (i < preset.n_scaled).then(|| make(split, hidden, dim - split));
                CouplingLayer::new(dim, split, scale, translate, preset.scale_mode)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_layers(dim, layers)
    }

    /// Assembles a flow from explicit layers; every coordinate must be
    /// transformed by at least one layer once permutations are applied.
    pub fn from_layers(dim: usize, layers: Vec<CouplingLayer>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidArgument("flows need dimension >= 2".into()));
        }
        if let Some(l) = layers.iter().find(|l| l.dim != dim || l.split != dim.div_ceil(2)) {
            return Err(Error::InvalidArgument(format!(
                "layer with dim {} split {} does not fit a flow of dim {dim}",
                l.dim, l.split
            )));
        }
        let flow = Self {
            dim,
            layers,
            shift: vec![0.0; dim],
            scale: vec![1.0; dim],
        };
        if !flow.transforms_every_coordinate() {
            return Err(Error::InvalidArgument(
                "layer stack leaves some coordinate untransformed".into(),
            ));
        }
        Ok(flow)
    }

    fn transforms_every_coordinate(&self) -> bool {
        let d = self.split();
        let mut origin: Vec<usize> = (0..self.dim).collect();
        let mut touched = vec![false; self.dim];
        for (i, _) in self.layers.iter().enumerate() {
            for &o in &origin[d..] {
                touched[o] = true;
            }
            if i + 1 < self.layers.len() {
                origin = self.permute(&origin);
            }
        }
        touched.into_iter().all(|t| t)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn split(&self) -> usize {
        self.dim.div_ceil(2)
    }

    pub fn layers(&self) -> &[CouplingLayer] {
        &self.layers
    }

    pub fn standardization(&self) -> (&[f64], &[f64]) {
        (&self.shift, &self.scale)
    }

    pub fn set_standardization(&mut self, shift: Vec<f64>, scale: Vec<f64>) -> Result<()> {
        if shift.len() != self.dim || scale.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: shift.len().max(scale.len()),
            });
        }
        if shift.iter().any(|v| !v.is_finite()) || scale.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidArgument("standardization must be finite with positive scale".into()));
        }
        self.shift = shift;
        self.scale = scale;
        Ok(())
    }

    /// Sets the standardization to the per-coordinate sample mean and std.
    pub fn fit_standardization(&mut self, samples: &Chains) -> Result<()> {
        let n = samples.n_samples() as f64;
        if n < 2.0 {
            return Err(Error::InvalidArgument("need at least two samples to standardize".into()));
        }
        let mut mean = vec![0.0; self.dim];
        for (s, _) in samples.iter() {
            mean.iter_mut().zip(s).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; self.dim];
        for (s, _) in samples.iter() {
            var.iter_mut().zip(s).zip(&mean).for_each(|((a, v), m)| *a += (v - m).powi(2));
        }
        let std = var.into_iter().map(|v| (v / (n - 1.0)).sqrt().max(1e-12)).collect();
        self.set_standardization(mean, std)
    }

    /// `out[i] = x[(i + d) mod D]`.
    fn permute<T: Copy>(&self, x: &[T]) -> Vec<T> {
        let d = self.split();
        (0..self.dim).map(|i| x[(i + d) % self.dim]).collect()
    }

    fn unpermute<T: Copy + Default>(&self, x: &[T]) -> Vec<T> {
        let d = self.split();
        let mut out = vec![T::default(); self.dim];
        for (i, &v) in x.iter().enumerate() {
            out[(i + d) % self.dim] = v;
        }
        out
    }

    fn log_scale_sum(&self) -> f64 {
        self.scale.iter().map(|s| s.ln()).sum()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("flow input".into()));
        }
        Ok(())
    }

    /// Base point to parameter space; returns `θ` and `ln|det ∂θ/∂z|`.
    pub fn forward(&self, z: &[f64]) -> Result<(Vec<f64>, f64)> {
        self.check_input(z)?;
        let mut x = z.to_vec();
        let mut log_det = 0.0;
        for (i, layer) in self.layers.iter().enumerate() {
            let (y, ld) = layer.forward(&x)?;
            log_det += ld;
            x = if i + 1 < self.layers.len() { self.permute(&y) } else { y };
        }
        let theta = x
            .iter()
            .zip(&self.shift)
            .zip(&self.scale)
            .map(|((u, m), s)| m + s * u)
            .collect();
        Ok((theta, log_det + self.log_scale_sum()))
    }

    /// Parameter space to base point; returns `z` and `ln|det ∂z/∂θ|`.
    pub fn inverse(&self, theta: &[f64]) -> Result<(Vec<f64>, f64)> {
        self.check_input(theta)?;
        let mut x: Vec<f64> = theta
            .iter()
            .zip(&self.shift)
            .zip(&self.scale)
            .map(|((t, m), s)| (t - m) / s)
            .collect();
        let mut log_det = -self.log_scale_sum();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            if i + 1 < self.layers.len() {
                x = self.unpermute(&x);
            }
            let (z, ld) = layer.inverse(&x)?;
            log_det += ld;
            x = z;
        }
        Ok((x, log_det))
    }

    /// `ln q_T(z) + ln|det ∂z/∂θ|` with `q_T = N(0, T·I)`.
    pub fn log_density(&self, theta: &[f64], temperature: f64) -> Result<f64> {
        check_temperature(temperature)?;
        let (z, log_det) = self.inverse(theta)?;
        Ok(self.base_log_density(&z, temperature) + log_det)
    }

    fn base_log_density(&self, z: &[f64], temperature: f64) -> f64 {
        let sq: f64 = z.iter().map(|v| v * v).sum();
        -0.5 * self.dim as f64 * (LN_2PI + temperature.ln()) - sq / (2.0 * temperature)
    }

    /// Draws `n` points by pushing `N(0, T·I)` through the flow.
    pub fn sample(&self, n: usize, temperature: f64, seed: u64) -> Result<Vec<Vec<f64>>> {
        check_temperature(temperature)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sd = temperature.sqrt();
        let base: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..self.dim)
                    .map(|_| sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
                    .collect()
            })
            .collect();
        base.par_iter()
            .map(|z| self.forward(z).map(|(theta, _)| theta))
            .collect()
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(CouplingLayer::n_params).sum()
    }

    /// Flattened trainable parameters: per layer, translate net then scale net.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for layer in &self.layers {
            out.extend_from_slice(layer.translate_net.params());
            if let Some(net) = &layer.scale_net {
                out.extend_from_slice(net.params());
            }
        }
        out
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::DimensionMismatch {
                expected: self.n_params(),
                found: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("flow parameters".into()));
        }
        let mut rest = params;
        for layer in &mut self.layers {
            let nets = std::iter::once(&mut layer.translate_net).chain(layer.scale_net.as_mut());
            for net in nets {
                let (head, tail) = rest.split_at(net.n_params());
                net.params_mut().copy_from_slice(head);
                rest = tail;
            }
        }
        Ok(())
    }

    /// Returns `ln p_T(θ)` and adds `∂ ln p_T(θ) / ∂params` into `grad`.
    pub fn log_density_with_grad(&self, theta: &[f64], temperature: f64, grad: &mut [f64]) -> Result<f64> {
        self.check_input(theta)?;
        if grad.len() != self.n_params() {
            return Err(Error::DimensionMismatch {
                expected: self.n_params(),
                found: grad.len(),
            });
        }
        let mut x: Vec<f64> = theta
            .iter()
            .zip(&self.shift)
            .zip(&self.scale)
            .map(|((t, m), s)| (t - m) / s)
            .collect();
        let mut log_det = -self.log_scale_sum();
        let mut caches = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate().rev() {
            if i + 1 < self.layers.len() {
                x = self.unpermute(&x);
            }
            let (z, ld, cache) = layer.inverse_cached(&x);
            log_det += ld;
            caches.push(cache);
            x = z;
        }
        if x.iter().any(|v| !v.is_finite()) || !log_det.is_finite() {
            return Err(Error::NonFinite("flow inverse".into()));
        }
        let value = self.base_log_density(&x, temperature) + log_det;

        // Caches were pushed last layer first; walk back in generative order.
        let mut g: Vec<f64> = x.iter().map(|v| -v / temperature).collect();
        let mut offset = 0;
        for (i, (layer, cache)) in self.layers.iter().zip(caches.iter().rev()).enumerate() {
            let n = layer.n_params();
            g = layer.backward_inverse(cache, &g, &mut grad[offset..offset + n]);
            offset += n;
            if i + 1 < self.layers.len() {
                g = self.permute(&g);
            }
        }
        Ok(value)
    }

    pub fn to_document(&self) -> FlowDocument {
        FlowDocument {
            version: FLOW_DOCUMENT_VERSION,
            dim: self.dim,
            shift: self.shift.clone(),
            scale: self.scale.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| LayerDocument {
                    split: l.split,
                    hidden: l.translate_net.hidden(),
                    leaky_slope: l.translate_net.leaky_slope(),
                    scale_mode: l.scale_mode,
                    translate_params: l.translate_net.params().to_vec(),
                    scale_params: l.scale_net.as_ref().map(|n| n.params().to_vec()),
                })
                .collect(),
        }
    }

    pub fn from_document(doc: FlowDocument) -> Result<Self> {
        if doc.version != FLOW_DOCUMENT_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported flow document version {}",
                doc.version
            )));
        }
        let dim = doc.dim;
        let layers = doc
            .layers
            .into_iter()
            .map(|l| {
                let out = dim.saturating_sub(l.split);
                let net = |p: Vec<f64>| {
                    DenseNet::from_params(l.split, l.hidden, out, l.leaky_slope, p)
                        .ok_or_else(|| Error::InvalidArgument("malformed network parameters".into()))
                };
                let translate = net(l.translate_params)?;
                let scale = l.scale_params.map(net).transpose()?;
                CouplingLayer::new(dim, l.split, scale, translate, l.scale_mode)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut flow = Self::from_layers(dim, layers)?;
        flow.set_standardization(doc.shift, doc.scale)?;
        Ok(flow)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Self::from_document(serde_json::from_str(json)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Versioned on-disk form of a flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowDocument {
    pub version: u32,
    pub dim: usize,
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
    pub layers: Vec<LayerDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerDocument {
    pub split: usize,
    pub hidden: usize,
    pub leaky_slope: f64,
    pub scale_mode: ScaleMode,
    pub translate_params: Vec<f64>,
    pub scale_params: Option<Vec<f64>>,
}
