//! Exact GP posterior with an incrementally grown Cholesky factor.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernel::Covariance;
use crate::linalg;

/// Relative diagonal jitter used when observations are noiseless.
pub const NOISELESS_JITTER: f64 = 1e-10;

/// Posterior of a zero-mean GP given noisy observations `y = f(x) + eta`.
///
/// The factor `L` of `Gram + (noise_var + jitter) I` is stored packed by rows
/// and grown one row per observation, so an update costs `O(t^2)`.
#[derive(Debug, Clone)]
pub struct PosteriorState {
    kernel: Arc<dyn Covariance>,
    noise_var: f64,
    points: Vec<Vec<f64>>,
    observations: Vec<f64>,
    chol: Vec<f64>,
    // L^{-1} y
    z: Vec<f64>,
}

impl PosteriorState {
    pub fn new(kernel: Arc<dyn Covariance>, noise_var: f64) -> Result<Self> {
        if !(noise_var >= 0.0) || !noise_var.is_finite() {
            return Err(Error::InvalidConfig(format!("noise variance must be finite and >= 0, got {noise_var}")));
        }
        Ok(PosteriorState {
            kernel,
            noise_var,
            points: Vec::new(),
            observations: Vec::new(),
            chol: Vec::new(),
            z: Vec::new(),
        })
    }

    pub fn kernel(&self) -> &Arc<dyn Covariance> {
        &self.kernel
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    fn diag_extra(&self, x: &[f64]) -> f64 {
        if self.noise_var > 0.0 {
            self.noise_var
        } else {
            NOISELESS_JITTER * self.kernel.prior_variance(x)
        }
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        let start = i * (i + 1) / 2;
        &self.chol[start..start + i + 1]
    }

    /// Solves `L v = k(X, x)` from scratch.
    fn solve_cross(&self, x: &[f64]) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        self.extend_cross(x, &mut v);
        v
    }

    /// Extends a partial solve `v` of `L v = k(X, x)` to the current size.
    fn extend_cross(&self, x: &[f64], v: &mut Vec<f64>) {
        for j in v.len()..self.len() {
            let row = self.row(j);
            let s = linalg::dot(&row[..j], &v[..j]);
            v.push((self.kernel.cov(&self.points[j], x) - s) / row[j]);
        }
    }

    /// Appends the observation `(x, y)`.
    pub fn update(&mut self, x: &[f64], y: f64) -> Result<()> {
        if !y.is_finite() {
            return Err(Error::NonFiniteObservation(y));
        }
        if let Some(first) = self.points.first() {
            if first.len() != x.len() {
                return Err(Error::DimensionMismatch { expected: first.len(), got: x.len() });
            }
        }
        let v = self.solve_cross(x);
        let pivot = self.kernel.prior_variance(x) + self.diag_extra(x) - linalg::dot(&v, &v);
        if !(pivot > 0.0) {
            return Err(Error::SingularGram { row: self.len(), pivot });
        }
        let ljj = pivot.sqrt();
        let zj = (y - linalg::dot(&v, &self.z)) / ljj;
        self.chol.extend_from_slice(&v);
        self.chol.push(ljj);
        self.z.push(zj);
        self.points.push(x.to_vec());
        self.observations.push(y);
        Ok(())
    }

    fn finish(&self, x: &[f64], v: &[f64]) -> (f64, f64) {
        let mu = linalg::dot(v, &self.z);
        let raw = self.kernel.prior_variance(x) - linalg::dot(v, v);
        debug_assert!(raw > -1e-6 * self.kernel.prior_variance(x).max(1.0), "posterior variance {raw}");
        (mu, raw.max(0.0).sqrt())
    }

    /// Posterior mean and standard deviation of `f(x)`.
    pub fn query(&self, x: &[f64]) -> (f64, f64) {
        let v = self.solve_cross(x);
        self.finish(x, &v)
    }

    /// Starts a cached query at `x`; see [`CachedQuery`].
    pub fn cached(&self, x: &[f64]) -> CachedQuery {
        CachedQuery { x: x.to_vec(), v: Vec::new(), mu: 0.0, sigma: 0.0, seen: usize::MAX }
    }

    /// Mutual information between `f` and the observations so far,
    /// `1/2 log det(I + Gram / noise_var)`. Zero when noiseless.
    pub fn information(&self) -> f64 {
        if self.noise_var == 0.0 {
            return 0.0;
        }
        (0..self.len()).map(|i| (self.row(i)[i] * self.row(i)[i] / self.noise_var).ln()).sum::<f64>() * 0.5
    }
}

/// A query point whose triangular solve is extended incrementally as the
/// posterior grows, costing `O(t)` per new observation instead of `O(t^2)`.
#[derive(Debug, Clone)]
pub struct CachedQuery {
    x: Vec<f64>,
    v: Vec<f64>,
    mu: f64,
    sigma: f64,
    seen: usize,
}

impl CachedQuery {
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Posterior mean and standard deviation under `state`, which must be the
    /// same posterior (possibly grown) that previous calls used.
    pub fn get(&mut self, state: &PosteriorState) -> (f64, f64) {
        if self.seen != state.len() {
            debug_assert!(self.v.len() <= state.len());
            state.extend_cross(&self.x, &mut self.v);
            let (mu, sigma) = state.finish(&self.x, &self.v);
            self.mu = mu;
            self.sigma = sigma;
            self.seen = state.len();
        }
        (self.mu, self.sigma)
    }
}

/// `1/2 log det(I + Gram / noise_var)` for the given design.
pub fn info_gain(k: &dyn Covariance, points: &[Vec<f64>], noise_var: f64) -> Result<f64> {
    if !(noise_var > 0.0) {
        return Err(Error::InvalidConfig("info_gain needs a positive noise variance".into()));
    }
    let n = points.len();
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let c = k.cov(&points[i], &points[j]) / noise_var;
            m[i * n + j] = c;
            m[j * n + i] = c;
        }
        m[i * n + i] += 1.0;
    }
    linalg::cholesky_in_place(&mut m, n)?;
    Ok((0..n).map(|i| m[i * n + i].ln()).sum())
}
