//! Synthetic objectives with known (or grid-approximate) optima.

mod contextual;
mod grid_gp;
mod toy;

pub use contextual::{make_contextual_env, Composition, ContextualEnvironment, ContextualGpEnv};
pub use grid_gp::{make_grid_gp, uniform_grid, GridGpEnv};
pub use toy::{toy1_gamma_closed_form, toy1_gamma_lower, Toy1Kernel, Toy2Run, ToyEnv1, ToyEnv2};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::partition::BoxDomain;

/// Reference optimum used to score regret.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestValue {
    pub value: f64,
    /// `false` when the value is a maximum over a finite search set and hence
    /// a lower bound on the true supremum.
    pub exact: bool,
}

/// A noisy black-box objective `y = f(x) + eta`, `eta ~ N(0, sigma^2)`.
pub trait Environment {
    fn domain(&self) -> &BoxDomain;

    fn noise_std(&self) -> f64;

    /// Noisy observation at `x`.
    fn query(&mut self, x: &[f64]) -> Result<f64>;

    /// Noise-free `f(x)`. May reveal new function values lazily, but is
    /// deterministic for a given environment.
    fn true_value(&mut self, x: &[f64]) -> Result<f64>;

    fn best_value(&mut self) -> BestValue;
}

/// Gaussian observation noise on its own random stream, so the same function
/// sample can be replayed under different noise.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    sigma: f64,
    rng: ChaCha8Rng,
}

impl NoiseSource {
    pub fn new(sigma: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        NoiseSource { sigma, rng }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn sample(&mut self) -> f64 {
        if self.sigma == 0.0 {
            return 0.0;
        }
        let z: f64 = StandardNormal.sample(&mut self.rng);
        self.sigma * z
    }
}

/// Random stream for the function sample itself.
pub(crate) fn function_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
