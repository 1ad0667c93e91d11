//! Drawing GP sample paths: joint draws on a finite grid and lazy sequential
//! draws at arbitrary points.

use std::collections::HashMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::kernel::Covariance;
use crate::linalg;
use crate::posterior::PosteriorState;

/// Largest grid accepted by dense joint sampling.
pub const MAX_GRID: usize = 4096;

const MAX_JITTER_STEPS: usize = 8;

/// Factor of a grid's Gram matrix, reusable for many joint draws.
#[derive(Debug, Clone)]
pub struct GridSampler {
    n: usize,
    chol: Vec<f64>,
    jitter: f64,
}

impl GridSampler {
    /// Factors `Gram + jitter I`, starting at `1e-10` times the largest prior
    /// variance and growing tenfold until the factorization succeeds.
    pub fn new(k: &dyn Covariance, grid: &[Vec<f64>]) -> Result<Self> {
        let n = grid.len();
        if n > MAX_GRID {
            return Err(Error::GridTooLarge { size: n, limit: MAX_GRID });
        }
        let mut gram = vec![0.0; n * n];
        let mut scale: f64 = 0.0;
        for i in 0..n {
            for j in 0..=i {
                let c = k.cov(&grid[i], &grid[j]);
                gram[i * n + j] = c;
                gram[j * n + i] = c;
            }
            scale = scale.max(gram[i * n + i]);
        }
        let mut jitter = 1e-10 * scale.max(f64::MIN_POSITIVE);
        let mut last = Error::Invariant("empty jitter schedule".into());
        for _ in 0..MAX_JITTER_STEPS {
            let mut a = gram.clone();
            for i in 0..n {
                a[i * n + i] += jitter;
            }
            match linalg::cholesky_in_place(&mut a, n) {
                Ok(()) => return Ok(GridSampler { n, chol: a, jitter }),
                Err(e) => last = e,
            }
            jitter *= 10.0;
        }
        Err(last)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Diagonal jitter that made the factorization succeed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z: Vec<f64> = (0..self.n).map(|_| StandardNormal.sample(rng)).collect();
        self.apply(&z)
    }

    /// `L z` for the stored factor.
    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        linalg::lower_mul(&self.chol, self.n, z)
    }
}

/// One joint draw of `f` on `grid`, deterministic in `seed`.
pub fn sample_grid(k: &dyn Covariance, grid: &[Vec<f64>], seed: u64) -> Result<Vec<f64>> {
    let sampler = GridSampler::new(k, grid)?;
    Ok(sampler.draw(&mut ChaCha8Rng::seed_from_u64(seed)))
}

fn key(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| (v + 0.0).to_bits()).collect()
}

/// A GP sample path revealed point by point.
///
/// Each new location is drawn from its exact conditional law given every
/// previously revealed value, so any query sequence has the GP's joint law.
#[derive(Debug, Clone)]
pub struct LazySampler {
    posterior: PosteriorState,
    rng: ChaCha8Rng,
    revealed: HashMap<Vec<u64>, f64>,
}

impl LazySampler {
    pub fn new(kernel: Arc<dyn Covariance>, seed: u64) -> Self {
        LazySampler {
            posterior: PosteriorState::new(kernel, 0.0).expect("zero noise is valid"),
            rng: ChaCha8Rng::seed_from_u64(seed),
            revealed: HashMap::new(),
        }
    }

    /// `f(x)`, drawn on first use and cached afterwards.
    pub fn sample(&mut self, x: &[f64]) -> f64 {
        if let Some(&v) = self.revealed.get(&key(x)) {
            return v;
        }
        let (mu, sd) = self.posterior.query(x);
        let z: f64 = StandardNormal.sample(&mut self.rng);
        let value = mu + sd * z;
        // A breakdown means x is numerically determined by revealed points;
        // the value is cached but not added to the factor.
        let _ = self.posterior.update(x, value);
        self.revealed.insert(key(x), value);
        value
    }

    /// Conditional mean and standard deviation of `f(x)` given the revealed values.
    pub fn conditional(&self, x: &[f64]) -> (f64, f64) {
        match self.revealed.get(&key(x)) {
            Some(&v) => (v, 0.0),
            None => self.posterior.query(x),
        }
    }

    pub fn is_revealed(&self, x: &[f64]) -> bool {
        self.revealed.contains_key(&key(x))
    }

    pub fn revealed_count(&self) -> usize {
        self.revealed.len()
    }

    pub fn revealed_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.revealed.values().copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{Kernel, MaternNu};
    use rand::Rng;

    fn m32() -> Kernel {
        Kernel::matern(MaternNu::ThreeHalves, 0.3, 1.0).unwrap()
    }

    #[test]
    fn single_point_is_scaled_standard_normal() {
        let k = Kernel::squared_exponential(1.0, 4.0).unwrap();
        let v = sample_grid(&k, &[vec![0.5]], 17).unwrap();
        let z: f64 = StandardNormal.sample(&mut ChaCha8Rng::seed_from_u64(17));
        assert!((v[0] - (4.0f64 + 4e-10).sqrt() * z).abs() < 1e-12);
    }

    #[test]
    fn deterministic_per_seed() {
        let grid: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64 / 49.0]).collect();
        assert_eq!(sample_grid(&m32(), &grid, 3).unwrap(), sample_grid(&m32(), &grid, 3).unwrap());
        assert_ne!(sample_grid(&m32(), &grid, 3).unwrap(), sample_grid(&m32(), &grid, 4).unwrap());
    }

    #[test]
    fn rejects_large_grid() {
        let grid: Vec<Vec<f64>> = (0..MAX_GRID + 1).map(|i| vec![i as f64]).collect();
        assert!(matches!(sample_grid(&m32(), &grid, 0), Err(Error::GridTooLarge { size, .. }) if size == MAX_GRID + 1));
    }

    #[test]
    fn empirical_covariance_matches_gram() {
        let k = m32();
        let grid = vec![vec![0.1], vec![0.3], vec![0.8]];
        let s = GridSampler::new(&k, &grid).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let draws = 10_000;
        let mut acc = [[0.0; 3]; 3];
        for _ in 0..draws {
            let f = s.draw(&mut rng);
            for i in 0..3 {
                for j in 0..3 {
                    acc[i][j] += f[i] * f[j];
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                let emp = acc[i][j] / draws as f64;
                let gram = k.cov(&grid[i], &grid[j]);
                // 5% of the marginal scale; off-diagonal entries can be tiny.
                assert!((emp - gram).abs() <= 0.05 * k.variance(), "{i},{j}: {emp} vs {gram}");
            }
        }
    }

    #[test]
    fn lazy_cache_is_consistent() {
        let mut s = LazySampler::new(Arc::new(m32()), 5);
        let a = s.sample(&[0.25]);
        s.sample(&[0.6]);
        assert_eq!(s.sample(&[0.25]), a);
        assert_eq!(s.revealed_count(), 2);
        let mut t = LazySampler::new(Arc::new(m32()), 6);
        assert_ne!(t.sample(&[0.25]), a);
    }

    #[test]
    fn lazy_conditional_matches_noiseless_posterior() {
        let k: Arc<dyn Covariance> = Arc::new(m32());
        let mut s = LazySampler::new(k.clone(), 8);
        let grid: Vec<f64> = (0..16).map(|i| i as f64 / 15.0).collect();
        let mut oracle = PosteriorState::new(k, 0.0).unwrap();
        for &g in &grid {
            let v = s.sample(&[g]);
            oracle.update(&[g], v).unwrap();
        }
        let (m1, s1) = s.conditional(&[0.51]);
        let (m2, s2) = oracle.query(&[0.51]);
        assert!((m1 - m2).abs() < 1e-12 && (s1 - s2).abs() < 1e-12);
    }

    #[test]
    fn lazy_marginal_variance() {
        // Second point drawn conditionally still has the prior marginal.
        let k = Arc::new(m32());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 20_000;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let mut s = LazySampler::new(k.clone(), rng.random());
            s.sample(&[0.2]);
            let v = s.sample(&[0.4]);
            sum_sq += v * v;
        }
        let var = sum_sq / n as f64;
        assert!((var - 1.0).abs() < 0.05, "{var}");
    }
}
