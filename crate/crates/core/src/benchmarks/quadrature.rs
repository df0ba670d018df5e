//! Log-space trapezoid rule over a 2D box, refined by grid doubling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::LogSumExp;

/// Closed box `[x_lo, x_hi] × [y_lo, y_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box2 {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Intervals per axis on the first pass.
    pub initial: usize,
    /// Largest number of intervals per axis before giving up.
    pub max: usize,
    /// Stop when successive log estimates differ by less than this.
    pub tolerance: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            initial: 64,
            max: 16_384,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub log_z: f64,
    /// Intervals per axis of the accepted estimate.
    pub intervals: usize,
    /// Difference from the previous refinement.
    pub last_change: f64,
}

/// `ln ∫∫ exp(f)` by the trapezoid rule on an `n × n` interval grid.
pub fn trapezoid_log_integral<F>(log_integrand: &F, bounds: Box2, n: usize) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let hx = (bounds.x.1 - bounds.x.0) / n as f64;
    let hy = (bounds.y.1 - bounds.y.0) / n as f64;
    let edge = |i: usize| if i == 0 || i == n { 0.5 } else { 1.0 };
    let rows: Vec<LogSumExp> = (0..=n)
        .into_par_iter()
        .map(|i| {
            let x = bounds.x.0 + i as f64 * hx;
            let mut acc = LogSumExp::new();
            for j in 0..=n {
                let y = bounds.y.0 + j as f64 * hy;
                acc.add_weighted(log_integrand(&[x, y]), edge(i) * edge(j));
            }
            acc
        })
        .collect();
    let mut total = LogSumExp::new();
    rows.iter().for_each(|r| total.merge(r));
    total.value() + (hx * hy).ln()
}

/// Doubles the grid until successive estimates of `ln z` agree to `grid.tolerance`.
pub fn quadrature_log_evidence<F>(log_integrand: F, bounds: Box2, grid: GridSpec) -> Result<QuadratureResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if !(bounds.x.1 > bounds.x.0 && bounds.y.1 > bounds.y.0) || grid.initial == 0 {
        return Err(Error::InvalidArgument("degenerate quadrature box or grid".into()));
    }
    let mut n = grid.initial;
    let mut prev = trapezoid_log_integral(&log_integrand, bounds, n);
    while n * 2 <= grid.max {
        n *= 2;
        let next = trapezoid_log_integral(&log_integrand, bounds, n);
        let change = (next - prev).abs();
        if change < grid.tolerance || (next == f64::NEG_INFINITY && prev == f64::NEG_INFINITY) {
            return Ok(QuadratureResult {
                log_z: next,
                intervals: n,
                last_change: change,
            });
        }
        prev = next;
    }
    Err(Error::QuadratureNonConvergence(grid.max))
}

#[cfg(test)]
mod tests {
    use super::*;

    const ROSENBROCK_BOX: Box2 = Box2 {
        x: (-10.0, 10.0),
        y: (-5.0, 15.0),
    };

    #[test]
    fn normalized_uniform_prior() {
        let r = quadrature_log_evidence(|_: &[f64]| -400f64.ln(), ROSENBROCK_BOX, GridSpec::default()).unwrap();
        assert!(r.log_z.abs() < 1e-12);
    }

    #[test]
    fn gaussian_likelihood_on_box() {
        let f = |x: &[f64]| -0.5 * (x[0] * x[0] + x[1] * x[1]) - 400f64.ln();
        let r = quadrature_log_evidence(f, ROSENBROCK_BOX, GridSpec::default()).unwrap();
        let expected = (2.0 * std::f64::consts::PI / 400.0).ln();
        assert!((r.log_z - expected).abs() < 1e-6, "{} vs {expected}", r.log_z);
    }

    #[test]
    fn rejects_degenerate_box() {
        let b = Box2 { x: (1.0, 1.0), y: (0.0, 1.0) };
        assert!(quadrature_log_evidence(|_: &[f64]| 0.0, b, GridSpec::default()).is_err());
    }

    #[test]
    fn reports_non_convergence() {
        // A spike narrower than the finest grid keeps moving the estimate.
        let f = |x: &[f64]| -1e12 * ((x[0] - 0.1234567).powi(2) + (x[1] - 0.7654321).powi(2));
        let grid = GridSpec { initial: 4, max: 64, tolerance: 1e-6 };
        let b = Box2 { x: (0.0, 1.0), y: (0.0, 1.0) };
        assert!(matches!(quadrature_log_evidence(f, b, grid), Err(Error::QuadratureNonConvergence(64))));
    }
}
