//! Likelihood/prior pair of a Bayesian model.

/// A model in the coordinates the posterior is sampled in. `log_prior` must
/// include any change-of-variables Jacobian so that it integrates to one in
/// those coordinates; `-inf` marks points outside the prior support.
pub trait Model: Sync {
    fn dim(&self) -> usize;

    fn log_likelihood(&self, theta: &[f64]) -> f64;

    fn log_prior(&self, theta: &[f64]) -> f64;

    fn log_posterior(&self, theta: &[f64]) -> f64 {
        let lp = self.log_prior(theta);
        if lp == f64::NEG_INFINITY {
            lp
        } else {
            lp + self.log_likelihood(theta)
        }
    }
}

impl<M: Model + ?Sized> Model for &M {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn log_likelihood(&self, theta: &[f64]) -> f64 {
        (**self).log_likelihood(theta)
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        (**self).log_prior(theta)
    }

    fn log_posterior(&self, theta: &[f64]) -> f64 {
        (**self).log_posterior(theta)
    }
}
