//! Log-space reductions shared by the estimator and the quadrature oracle.

/// `ln Σ exp(x_i)` with the max-shift trick. Empty input or all `-inf` gives `-inf`.
pub fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return max;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + values.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// Streaming accumulator for `ln Σ w_i exp(x_i)` with non-negative weights.
///
/// Keeps a running maximum and rescales the partial sum whenever it grows,
/// so arbitrarily large or small exponents never overflow.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_weighted(&mut self, log_value: f64, weight: f64) {
        if log_value == f64::NEG_INFINITY || weight == 0.0 {
            return;
        }
        if log_value > self.max {
            self.sum = self.sum * (self.max - log_value).exp() + weight;
            self.max = log_value;
        } else {
            self.sum += weight * (log_value - self.max).exp();
        }
    }

    pub fn add(&mut self, log_value: f64) {
        self.add_weighted(log_value, 1.0);
    }

    pub fn merge(&mut self, other: &LogSumExp) {
        if other.max == f64::NEG_INFINITY {
            return;
        }
        self.add_weighted(other.max, other.sum);
    }

    pub fn value(&self) -> f64 {
        if self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// Natural log of the logistic sigmoid, `-ln(1 + e^{-x})`, stable for large |x|.
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Sample mean and unbiased variance of a slice.
pub fn mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}
