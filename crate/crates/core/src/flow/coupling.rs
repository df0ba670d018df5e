//! Affine coupling layer.
//!
//! Forward: `y[..d] = z[..d]`, `y[d..] = z[d..] ⊙ exp(s(z[..d])) + t(z[..d])`
//! with `log|det J| = Σ s`. Unscaled layers have `s ≡ 0`.

use serde::{Deserialize, Serialize};

use super::dense::{DenseCache, DenseNet};
use crate::error::{Error, Result};
use crate::stats::{sigmoid, softplus};

const MIN_MULTIPLIER: f64 = 1e-3;
const MAX_MULTIPLIER: f64 = 1e3;

/// How the raw scale-net output becomes the log-scale `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleMode {
    /// Multiplier is `softplus(raw)` clamped to `[1e-3, 1e3]`, so
    /// `s = ln softplus(raw)` and the layer may contract or expand.
    #[default]
    Softplus,
    /// `s = softplus(raw)`, multiplier `exp(softplus(raw)) >= 1`: the forward
    /// map can only expand.
    ExpSoftplus,
}

impl ScaleMode {
    /// Raw output giving the smallest available log-scale: `s = 0` under
    /// [`ScaleMode::Softplus`], `s = ln 2` under [`ScaleMode::ExpSoftplus`].
    pub fn neutral_raw(self) -> f64 {
        match self {
            ScaleMode::Softplus => (std::f64::consts::E - 1.0).ln(),
            ScaleMode::ExpSoftplus => 0.0,
        }
    }

    /// Returns `(s, ds/draw)`.
    #[inline]
    pub fn log_scale(self, raw: f64) -> (f64, f64) {
        match self {
            ScaleMode::ExpSoftplus => (softplus(raw), sigmoid(raw)),
            ScaleMode::Softplus => {
                let sp = softplus(raw);
                if sp < MIN_MULTIPLIER {
                    (MIN_MULTIPLIER.ln(), 0.0)
                } else if sp > MAX_MULTIPLIER {
                    (MAX_MULTIPLIER.ln(), 0.0)
                } else {
                    (sp.ln(), sigmoid(raw) / sp)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingLayer {
    pub(crate) dim: usize,
    pub(crate) split: usize,
    pub(crate) scale_net: Option<DenseNet>,
    pub(crate) translate_net: DenseNet,
    pub(crate) scale_mode: ScaleMode,
}

/// Intermediate values of an inverse pass, enough to backpropagate.
pub(crate) struct InverseCache {
    y: Vec<f64>,
    z_tail: Vec<f64>,
    log_scale: Vec<f64>,
    dlog_scale: Vec<f64>,
    translate: DenseCache,
    scale: Option<DenseCache>,
}

fn check_finite(v: &[f64], what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

impl CouplingLayer {
    pub fn new(
        dim: usize,
        split: usize,
        scale_net: Option<DenseNet>,
        translate_net: DenseNet,
        scale_mode: ScaleMode,
    ) -> Result<Self> {
        if split == 0 || split >= dim {
            return Err(Error::InvalidArgument(format!(
                "split index {split} must lie in 1..{dim}"
            )));
        }
        let nets = std::iter::once(&translate_net).chain(scale_net.as_ref());
        for net in nets {
            if net.input() != split || net.output() != dim - split {
                return Err(Error::InvalidArgument(format!(
                    "coupling net shape {}->{} does not match split {split} of {dim}",
                    net.input(),
                    net.output()
                )));
            }
        }
        Ok(Self {
            dim,
            split,
            scale_net,
            translate_net,
            scale_mode,
        })
    }

    pub fn is_scaled(&self) -> bool {
        self.scale_net.is_some()
    }

    pub fn split(&self) -> usize {
        self.split
    }

    pub fn scale_mode(&self) -> ScaleMode {
        self.scale_mode
    }

    pub fn scale_net(&self) -> Option<&DenseNet> {
        self.scale_net.as_ref()
    }

    pub fn translate_net(&self) -> &DenseNet {
        &self.translate_net
    }

    pub fn n_params(&self) -> usize {
        self.translate_net.n_params() + self.scale_net.as_ref().map_or(0, DenseNet::n_params)
    }

    /// Scale and translation conditioned on the pass-through block.
    fn conditioner(&self, head: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>, DenseCache, Option<DenseCache>) {
        let (t, t_cache) = self.translate_net.forward_cached(head);
        match &self.scale_net {
            Some(net) => {
                let (raw, s_cache) = net.forward_cached(head);
                let (s, ds): (Vec<f64>, Vec<f64>) =
                    raw.iter().map(|&r| self.scale_mode.log_scale(r)).unzip();
                (t, s, ds, t_cache, Some(s_cache))
            }
            None => {
                let n = self.dim - self.split;
                (t, vec![0.0; n], vec![0.0; n], t_cache, None)
            }
        }
    }

    pub fn forward(&self, z: &[f64]) -> Result<(Vec<f64>, f64)> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: z.len(),
            });
        }
        check_finite(z, "coupling input")?;
        let (head, tail) = z.split_at(self.split);
        let (t, s, ..) = self.conditioner(head);
        let mut y = head.to_vec();
        y.extend(tail.iter().zip(&s).zip(&t).map(|((v, s), t)| v * s.exp() + t));
        check_finite(&y, "coupling output")?;
        Ok((y, s.iter().sum()))
    }

    pub fn inverse(&self, y: &[f64]) -> Result<(Vec<f64>, f64)> {
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: y.len(),
            });
        }
        check_finite(y, "coupling input")?;
        let (z, log_det, _) = self.inverse_cached(y);
        check_finite(&z, "coupling output")?;
        Ok((z, log_det))
    }

    pub(crate) fn inverse_cached(&self, y: &[f64]) -> (Vec<f64>, f64, InverseCache) {
        let (head, tail) = y.split_at(self.split);
        let (t, s, ds, t_cache, s_cache) = self.conditioner(head);
        let z_tail: Vec<f64> = tail
            .iter()
            .zip(&s)
            .zip(&t)
            .map(|((v, s), t)| (v - t) * (-s).exp())
            .collect();
        let mut z = head.to_vec();
        z.extend_from_slice(&z_tail);
        let log_det = -s.iter().sum::<f64>();
        let cache = InverseCache {
            y: y.to_vec(),
            z_tail,
            log_scale: s,
            dlog_scale: ds,
            translate: t_cache,
            scale: s_cache,
        };
        (z, log_det, cache)
    }

    /// Backpropagates `F` through one inverse step, where `F` depends on the
    /// layer output `z` and additively on this layer's `log_det_inv`.
    /// `g_z` is `∂F/∂z`; returns `∂F/∂y` and accumulates into `grad`
    /// (laid out translate net first, then scale net).
    pub(crate) fn backward_inverse(&self, cache: &InverseCache, g_z: &[f64], grad: &mut [f64]) -> Vec<f64> {
        let d = self.split;
        let head = &cache.y[..d];
        let (g_head_out, g_tail) = g_z.split_at(d);
        let n = self.dim - d;
        let mut g_y = vec![0.0; self.dim];
        let mut g_t = vec![0.0; n];
        let mut g_raw = vec![0.0; n];
        for k in 0..n {
            let inv_scale = (-cache.log_scale[k]).exp();
            g_y[d + k] = g_tail[k] * inv_scale;
            g_t[k] = -g_tail[k] * inv_scale;
            let g_s = -g_tail[k] * cache.z_tail[k] - 1.0;
            g_raw[k] = g_s * cache.dlog_scale[k];
        }
        let (g_translate, g_scale) = grad.split_at_mut(self.translate_net.n_params());
        let g_head_t = self.translate_net.backward(head, &cache.translate, &g_t, g_translate);
        for i in 0..d {
            g_y[i] = g_head_out[i] + g_head_t[i];
        }
        if let (Some(net), Some(s_cache)) = (&self.scale_net, &cache.scale) {
            let g_head_s = net.backward(head, s_cache, &g_raw, g_scale);
            for i in 0..d {
                g_y[i] += g_head_s[i];
            }
        }
        g_y
    }
}
