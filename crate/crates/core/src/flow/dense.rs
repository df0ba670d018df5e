//! Two-layer dense network `out = W2 · leaky_relu(W1 · x + b1) + b2`.

use rand::Rng;
use serde::{Deserialize, Serialize};

pub const DEFAULT_LEAKY_SLOPE: f64 = 0.01;

/// Parameters live in one flat buffer laid out as `[W1 | b1 | W2 | b2]`,
/// weights row-major with one row per output unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNet {
    input: usize,
    hidden: usize,
    output: usize,
    leaky_slope: f64,
    params: Vec<f64>,
}

/// Hidden pre-activations kept for the backward pass.
#[derive(Debug, Clone)]
pub(crate) struct DenseCache {
    pre: Vec<f64>,
}

impl DenseNet {
    pub fn zeros(input: usize, hidden: usize, output: usize, leaky_slope: f64) -> Self {
        let n = hidden * input + hidden + output * hidden + output;
        Self {
            input,
            hidden,
            output,
            leaky_slope,
            params: vec![0.0; n],
        }
    }

    /// Weights uniform in `±1/sqrt(fan_in)`, biases zero.
    pub fn random<R: Rng + ?Sized>(
        input: usize,
        hidden: usize,
        output: usize,
        leaky_slope: f64,
        rng: &mut R,
    ) -> Self {
        let mut net = Self::zeros(input, hidden, output, leaky_slope);
        let b1 = 1.0 / (input as f64).sqrt();
        let b2 = 1.0 / (hidden as f64).sqrt();
        let (w1_end, w2_start, w2_end) = net.offsets();
        for w in &mut net.params[..w1_end] {
            *w = rng.random_range(-b1..=b1);
        }
        for w in &mut net.params[w2_start..w2_end] {
            *w = rng.random_range(-b2..=b2);
        }
        net
    }

    /// Zeroes the output weights and fills the output biases with `bias`, so
    /// the net starts as a constant map.
    pub fn constant_output(mut self, bias: f64) -> Self {
        let (_, w2_start, w2_end) = self.offsets();
        self.params[w2_start..w2_end].fill(0.0);
        self.params[w2_end..].fill(bias);
        self
    }

    pub(crate) fn from_params(
        input: usize,
        hidden: usize,
        output: usize,
        leaky_slope: f64,
        params: Vec<f64>,
    ) -> Option<Self> {
        let net = Self::zeros(input, hidden, output, leaky_slope);
        (params.len() == net.params.len() && params.iter().all(|p| p.is_finite())).then_some(
            Self { params, ..net },
        )
    }

    /// End of W1, start of W2, end of W2.
    fn offsets(&self) -> (usize, usize, usize) {
        let w1_end = self.hidden * self.input;
        let w2_start = w1_end + self.hidden;
        (w1_end, w2_start, w2_start + self.output * self.hidden)
    }

    pub fn input(&self) -> usize {
        self.input
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn output(&self) -> usize {
        self.output
    }

    pub fn leaky_slope(&self) -> f64 {
        self.leaky_slope
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_cached(x).0
    }

    pub(crate) fn forward_cached(&self, x: &[f64]) -> (Vec<f64>, DenseCache) {
        debug_assert_eq!(x.len(), self.input);
        let (w1_end, w2_start, w2_end) = self.offsets();
        let (w1, b1) = (&self.params[..w1_end], &self.params[w1_end..w2_start]);
        let (w2, b2) = (&self.params[w2_start..w2_end], &self.params[w2_end..]);
        let pre: Vec<f64> = w1
            .chunks_exact(self.input)
            .zip(b1)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect();
        let act: Vec<f64> = pre.iter().map(|&h| self.leaky(h)).collect();
        let out = w2
            .chunks_exact(self.hidden)
            .zip(b2)
            .map(|(row, b)| b + row.iter().zip(&act).map(|(w, a)| w * a).sum::<f64>())
            .collect();
        (out, DenseCache { pre })
    }

    #[inline]
    fn leaky(&self, h: f64) -> f64 {
        if h > 0.0 {
            h
        } else {
            self.leaky_slope * h
        }
    }

    /// Accumulates `∂F/∂params` into `grad` given `∂F/∂out`; returns `∂F/∂x`.
    pub(crate) fn backward(
        &self,
        x: &[f64],
        cache: &DenseCache,
        g_out: &[f64],
        grad: &mut [f64],
    ) -> Vec<f64> {
        let (w1_end, w2_start, w2_end) = self.offsets();
        let w1 = &self.params[..w1_end];
        let w2 = &self.params[w2_start..w2_end];
        let (g_w1, rest) = grad.split_at_mut(w1_end);
        let (g_b1, rest) = rest.split_at_mut(self.hidden);
        let (g_w2, g_b2) = rest.split_at_mut(self.output * self.hidden);

        let mut g_act = vec![0.0; self.hidden];
        for (o, &g) in g_out.iter().enumerate() {
            g_b2[o] += g;
            let row = &w2[o * self.hidden..(o + 1) * self.hidden];
            let g_row = &mut g_w2[o * self.hidden..(o + 1) * self.hidden];
            for j in 0..self.hidden {
                g_row[j] += g * self.leaky(cache.pre[j]);
                g_act[j] += g * row[j];
            }
        }
        let mut g_x = vec![0.0; self.input];
        for j in 0..self.hidden {
            let g_h = if cache.pre[j] > 0.0 {
                g_act[j]
            } else {
                self.leaky_slope * g_act[j]
            };
            g_b1[j] += g_h;
            let row = &w1[j * self.input..(j + 1) * self.input];
            let g_row = &mut g_w1[j * self.input..(j + 1) * self.input];
            for i in 0..self.input {
                g_row[i] += g_h * x[i];
                g_x[i] += g_h * row[i];
            }
        }
        g_x
    }
}
