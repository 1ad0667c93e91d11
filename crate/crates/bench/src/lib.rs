//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use gpbandit::env::{make_grid_gp, GridGpEnv};
use gpbandit::{BestValue, BoxDomain, Covariance, Environment, Kernel, MaternNu, Result};

pub fn matern52(lengthscale: f64) -> Arc<dyn Covariance> {
    Arc::new(Kernel::matern(MaternNu::FiveHalves, lengthscale, 1.0).expect("valid kernel"))
}

/// A sampled one-dimensional GP objective.
pub fn gp_env_1d(seed: u64) -> GridGpEnv {
    make_grid_gp(matern52(0.2), BoxDomain::unit(1), 129, 0.1, seed).expect("valid environment")
}

/// A closed-form objective, so benchmarks in high dimension time the
/// algorithm rather than function sampling.
#[derive(Debug, Clone)]
pub struct Cosines {
    pub domain: BoxDomain,
}

impl Cosines {
    pub fn new(dim: usize) -> Self {
        Cosines { domain: BoxDomain::unit(dim) }
    }
}

impl Environment for Cosines {
    fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    fn noise_std(&self) -> f64 {
        0.0
    }

    fn query(&mut self, x: &[f64]) -> Result<f64> {
        self.true_value(x)
    }

    fn true_value(&mut self, x: &[f64]) -> Result<f64> {
        Ok(x.iter().enumerate().map(|(i, v)| (3.0 * v + i as f64).cos()).sum::<f64>() / x.len() as f64)
    }

    fn best_value(&mut self) -> BestValue {
        BestValue { value: 1.0, exact: false }
    }
}
