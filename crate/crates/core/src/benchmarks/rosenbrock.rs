//! Rosenbrock likelihood under a uniform box prior.

use super::quadrature::Box2;
use crate::model::Model;

pub const ROSENBROCK_A: f64 = 1.0;
pub const ROSENBROCK_B: f64 = 100.0;

/// Prior support, closed on every side.
pub const PRIOR_BOX: Box2 = Box2 {
    x: (-10.0, 10.0),
    y: (-5.0, 15.0),
};

/// `-[(a - x₀)² + b (x₁ - x₀²)²]`.
pub fn rosenbrock_log_likelihood(x: &[f64]) -> f64 {
    -((ROSENBROCK_A - x[0]).powi(2) + ROSENBROCK_B * (x[1] - x[0] * x[0]).powi(2))
}

pub fn uniform_log_prior(x: &[f64]) -> f64 {
    let inside = (PRIOR_BOX.x.0..=PRIOR_BOX.x.1).contains(&x[0]) && (PRIOR_BOX.y.0..=PRIOR_BOX.y.1).contains(&x[1]);
    if inside {
        -((PRIOR_BOX.x.1 - PRIOR_BOX.x.0) * (PRIOR_BOX.y.1 - PRIOR_BOX.y.0)).ln()
    } else {
        f64::NEG_INFINITY
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Rosenbrock;

impl Model for Rosenbrock {
    fn dim(&self) -> usize {
        2
    }

    fn log_likelihood(&self, theta: &[f64]) -> f64 {
        rosenbrock_log_likelihood(theta)
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        uniform_log_prior(theta)
    }
}
