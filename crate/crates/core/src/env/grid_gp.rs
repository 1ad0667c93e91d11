use std::sync::Arc;

use super::{BestValue, Environment, NoiseSource};
use crate::error::{Error, Result};
use crate::kernel::Covariance;
use crate::partition::BoxDomain;
use crate::sampling::{LazySampler, MAX_GRID};

/// `res` points per axis, endpoints included (`res = 1` gives the center).
pub fn uniform_grid(domain: &BoxDomain, res: usize) -> Result<Vec<Vec<f64>>> {
    let d = domain.dim();
    let size = (res as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    if res == 0 || size > MAX_GRID as u128 {
        return Err(Error::GridTooLarge { size: size.min(usize::MAX as u128) as usize, limit: MAX_GRID });
    }
    let axis = |a: usize, j: usize| {
        if res == 1 {
            0.5 * (domain.lower()[a] + domain.upper()[a])
        } else {
            domain.lower()[a] + domain.side(a) * j as f64 / (res - 1) as f64
        }
    };
    let mut out = Vec::with_capacity(size as usize);
    let mut idx = vec![0usize; d];
    loop {
        out.push((0..d).map(|a| axis(a, idx[a])).collect());
        let mut a = 0;
        while a < d {
            idx[a] += 1;
            if idx[a] < res {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
        if a == d {
            return Ok(out);
        }
    }
}

/// A GP sample path: values on a reference grid are revealed up front, every
/// other location is drawn lazily conditional on everything revealed so far.
#[derive(Debug, Clone)]
pub struct GridGpEnv {
    domain: BoxDomain,
    sampler: LazySampler,
    grid: Vec<Vec<f64>>,
    best: f64,
    noise: NoiseSource,
}

/// Builds a [`GridGpEnv`] with `grid_res` points per axis.
pub fn make_grid_gp(
    kernel: Arc<dyn Covariance>,
    domain: BoxDomain,
    grid_res: usize,
    sigma: f64,
    seed: u64,
) -> Result<GridGpEnv> {
    let grid = uniform_grid(&domain, grid_res)?;
    GridGpEnv::with_grid(kernel, domain, grid, sigma, seed)
}

impl GridGpEnv {
    /// Like [`make_grid_gp`] with an explicit reference grid.
    pub fn with_grid(
        kernel: Arc<dyn Covariance>,
        domain: BoxDomain,
        grid: Vec<Vec<f64>>,
        sigma: f64,
        seed: u64,
    ) -> Result<Self> {
        if grid.len() > MAX_GRID {
            return Err(Error::GridTooLarge { size: grid.len(), limit: MAX_GRID });
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!("noise std must be finite and >= 0, got {sigma}")));
        }
        for p in &grid {
            if !domain.contains(p) {
                return Err(Error::OutOfDomain(p.clone()));
            }
        }
        let mut sampler = LazySampler::new(kernel, seed);
        // Sequential conditional draws have the joint law of the grid sample.
        let best = grid.iter().map(|p| sampler.sample(p)).fold(f64::NEG_INFINITY, f64::max);
        Ok(GridGpEnv { domain, sampler, grid, best, noise: NoiseSource::new(sigma, seed) })
    }

    /// Replaces the noise stream, keeping the function sample.
    pub fn reseed_noise(&mut self, seed: u64) {
        self.noise = NoiseSource::new(self.noise.sigma(), seed);
    }

    pub fn grid(&self) -> &[Vec<f64>] {
        &self.grid
    }

    /// Conditional law of `f(x)` given everything revealed so far.
    pub fn conditional(&self, x: &[f64]) -> (f64, f64) {
        self.sampler.conditional(x)
    }
}

impl Environment for GridGpEnv {
    fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    fn noise_std(&self) -> f64 {
        self.noise.sigma()
    }

    fn query(&mut self, x: &[f64]) -> Result<f64> {
        let f = self.true_value(x)?;
        Ok(f + self.noise.sample())
    }

    fn true_value(&mut self, x: &[f64]) -> Result<f64> {
        if !self.domain.contains(x) {
            return Err(Error::OutOfDomain(x.to_vec()));
        }
        let f = self.sampler.sample(x);
        self.best = self.best.max(f);
        Ok(f)
    }

    fn best_value(&mut self) -> BestValue {
        BestValue { value: self.best, exact: false }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{Kernel, MaternNu};

    fn kernel() -> Arc<dyn Covariance> {
        Arc::new(Kernel::matern(MaternNu::ThreeHalves, 0.2, 1.0).unwrap())
    }

    #[test]
    fn grid_points_match_grid_sample() {
        let mut env = make_grid_gp(kernel(), BoxDomain::unit(1), 2, 0.1, 4).unwrap();
        let (m, s) = env.conditional(&[1.0]);
        assert_eq!(s, 0.0);
        assert_eq!(env.true_value(&[1.0]).unwrap(), m);
    }

    #[test]
    fn best_dominates_revealed_values() {
        let mut env = make_grid_gp(kernel(), BoxDomain::unit(1), 16, 0.1, 9).unwrap();
        for i in 0..50 {
            let f = env.true_value(&[i as f64 / 49.0 * 0.999]).unwrap();
            assert!(env.best_value().value >= f);
            assert!(!env.best_value().exact);
        }
    }

    #[test]
    fn same_seed_same_function() {
        let a = make_grid_gp(kernel(), BoxDomain::unit(2), 5, 0.0, 12).unwrap();
        let b = make_grid_gp(kernel(), BoxDomain::unit(2), 5, 0.0, 12).unwrap();
        for p in a.grid() {
            assert_eq!(a.conditional(p), b.conditional(p));
        }
    }

    #[test]
    fn noise_averages_out() {
        let mut env = make_grid_gp(kernel(), BoxDomain::unit(1), 8, 0.5, 2).unwrap();
        let f = env.true_value(&[0.3]).unwrap();
        let n = 10_000;
        let mean = (0..n).map(|_| env.query(&[0.3]).unwrap()).sum::<f64>() / n as f64;
        assert!((mean - f).abs() < 3.0 * 0.5 / (n as f64).sqrt());
    }

    #[test]
    fn rejects_out_of_domain_and_large_grids() {
        let mut env = make_grid_gp(kernel(), BoxDomain::unit(1), 4, 0.0, 0).unwrap();
        assert!(matches!(env.query(&[1.5]), Err(Error::OutOfDomain(_))));
        assert!(matches!(
            make_grid_gp(kernel(), BoxDomain::unit(2), 65, 0.0, 0),
            Err(Error::GridTooLarge { size: 4225, .. })
        ));
    }

    #[test]
    fn uniform_grid_layout() {
        let g = uniform_grid(&BoxDomain::new(vec![-1.0, 0.0], vec![1.0, 2.0]).unwrap(), 3).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], vec![-1.0, 0.0]);
        assert_eq!(g[4], vec![0.0, 1.0]);
        assert_eq!(g[8], vec![1.0, 2.0]);
    }
}
