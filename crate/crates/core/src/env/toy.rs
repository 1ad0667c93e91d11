//! Two hand-built GPs whose maximizer is easy to find but whose maximum
//! information gain grows linearly in `n`.
//!
//! Both use the bump `phi(z) = sin(pi z)` on `[0, 1]`, zero elsewhere.

use std::f64::consts::PI;

use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{function_rng, BestValue, Environment, NoiseSource};
use crate::error::{Error, Result};
use crate::kernel::{CappedTerm, Covariance, EnvelopeShape, SmoothnessEnvelope};
use crate::partition::BoxDomain;
use crate::trace::{RegretTrace, TraceRecorder};

fn phi(z: f64) -> f64 {
    if (0.0..=1.0).contains(&z) {
        (PI * z).sin()
    } else {
        0.0
    }
}

fn std_normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(p)
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("delta must lie in (0, 1), got {delta}")))
    }
}

/// `b_i = 3^{-i}`.
fn toy1_b(i: usize) -> f64 {
    3f64.powi(-(i as i32))
}

/// `psi_i(x) = phi(x/b_i - 1) - phi(x/b_i - 2)`.
fn toy1_psi(i: usize, x: f64) -> f64 {
    let s = x / toy1_b(i);
    phi(s - 1.0) - phi(s - 2.0)
}

/// Amplitudes `a_1 = 1/Phi^{-1}((1+delta)/2)`, `a_i = 1/(2 sqrt(2 log(pi^2 i^2/(6 delta))))`.
fn toy1_amplitudes(delta: f64, i_max: usize) -> Vec<f64> {
    (1..=i_max)
        .map(|i| {
            if i == 1 {
                1.0 / std_normal_quantile((1.0 + delta) / 2.0)
            } else {
                let l = (PI * PI * (i * i) as f64 / (6.0 * delta)).ln();
                1.0 / (2.0 * (2.0 * l).sqrt())
            }
        })
        .collect()
}

/// Covariance of the first toy process, `sum_i a_i^2 psi_i(x) psi_i(y)`.
#[derive(Debug, Clone)]
pub struct Toy1Kernel {
    a: Vec<f64>,
}

impl Toy1Kernel {
    pub fn new(delta: f64, i_max: usize) -> Result<Self> {
        check_delta(delta)?;
        Ok(Toy1Kernel { a: toy1_amplitudes(delta, i_max) })
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.a
    }

    /// Peak of the `i`-th bump pair's positive lobe, `3/2 b_i` (1-based).
    pub fn peak(i: usize) -> f64 {
        1.5 * toy1_b(i)
    }
}

impl Covariance for Toy1Kernel {
    fn cov(&self, x: &[f64], y: &[f64]) -> f64 {
        self.a
            .iter()
            .enumerate()
            .map(|(k, a)| a * a * toy1_psi(k + 1, x[0]) * toy1_psi(k + 1, y[0]))
            .sum()
    }

    fn envelope(&self, _dim: usize) -> SmoothnessEnvelope {
        // psi_i is (pi / b_i)-Lipschitz with range [-1, 1].
        let terms: Vec<CappedTerm> = self
            .a
            .iter()
            .enumerate()
            .map(|(k, a)| CappedTerm { weight: a * a, slope: PI / toy1_b(k + 1), cap: 4.0 })
            .collect();
        let c_k = terms.iter().map(|t| t.weight * t.slope * t.slope).sum::<f64>().sqrt();
        SmoothnessEnvelope { alpha: 1.0, c_k, delta_k: f64::INFINITY, shape: EnvelopeShape::Capped(terms) }
    }
}

/// `1/2 sum_{i<=n} log(1 + a_i^2 / sigma^2)`: the information revealed by
/// observing the `n` independent bump amplitudes once each.
pub fn toy1_gamma_lower(delta: f64, n: usize, sigma: f64) -> Result<f64> {
    let a = toy1_amplitudes(delta, n.max(1));
    check_delta(delta)?;
    Ok(0.5 * a.iter().take(n).map(|a| (a * a / (sigma * sigma)).ln_1p()).sum::<f64>())
}

/// `n/2 min(1/2, 1/(16 sigma^2 log(pi^2 n^2 / (3 delta))))`.
pub fn toy1_gamma_closed_form(delta: f64, n: usize, sigma: f64) -> f64 {
    let n = n as f64;
    let l = (PI * PI * n * n / (3.0 * delta)).ln();
    0.5 * n * (0.5f64).min(1.0 / (16.0 * sigma * sigma * l))
}

/// First toy process: disjoint bump pairs of amplitude `a_i X_i` on `(b_i, 3 b_i)`.
#[derive(Debug, Clone)]
pub struct ToyEnv1 {
    domain: BoxDomain,
    a: Vec<f64>,
    xs: Vec<f64>,
    noise: NoiseSource,
}

impl ToyEnv1 {
    pub const I_MAX: usize = 20;

    /// Noise level making `|eta| <= 1/2` hold with probability `1 - delta`.
    pub fn default_sigma(delta: f64) -> f64 {
        0.5 / std_normal_quantile(1.0 - delta / 2.0)
    }

    pub fn new(delta: f64, sigma: Option<f64>, seed: u64) -> Result<Self> {
        check_delta(delta)?;
        let a = toy1_amplitudes(delta, Self::I_MAX);
        let mut rng = function_rng(seed);
        let xs = (0..Self::I_MAX).map(|_| StandardNormal.sample(&mut rng)).collect();
        let sigma = sigma.unwrap_or_else(|| Self::default_sigma(delta));
        Ok(ToyEnv1 { domain: BoxDomain::unit(1), a, xs, noise: NoiseSource::new(sigma, seed) })
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.a
    }

    /// The standard normal draws `X_i`.
    pub fn draws(&self) -> &[f64] {
        &self.xs
    }

    pub fn value(&self, x: f64) -> f64 {
        self.a.iter().zip(&self.xs).enumerate().map(|(k, (a, xi))| a * xi * toy1_psi(k + 1, x)).sum()
    }

    /// `max_i a_i |X_i|`; the lobes of different terms never overlap.
    pub fn exact_max(&self) -> f64 {
        self.a.iter().zip(&self.xs).map(|(a, x)| a * x.abs()).fold(0.0, f64::max)
    }

    pub fn argmax(&self) -> f64 {
        let (k, _) = self
            .a
            .iter()
            .zip(&self.xs)
            .map(|(a, x)| a * x.abs())
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc });
        let b = toy1_b(k + 1);
        if self.xs[k] >= 0.0 {
            1.5 * b
        } else {
            2.5 * b
        }
    }

    /// Observes `f(1/2) + eta` once and recommends `1/2` or `5/6` by its sign.
    /// Returns the recommendation and whether it attains the global maximum.
    pub fn one_shot(&mut self) -> (f64, bool) {
        let y = self.value(0.5) + self.noise.sample();
        let rec = if y >= 0.0 { 0.5 } else { 5.0 / 6.0 };
        let hit = (self.value(rec) - self.exact_max()).abs() <= 1e-12 * self.exact_max().max(1.0);
        (rec, hit)
    }
}

impl Environment for ToyEnv1 {
    fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    fn noise_std(&self) -> f64 {
        self.noise.sigma()
    }

    fn query(&mut self, x: &[f64]) -> Result<f64> {
        Ok(self.true_value(x)? + self.noise.sample())
    }

    fn true_value(&mut self, x: &[f64]) -> Result<f64> {
        if !self.domain.contains(x) {
            return Err(Error::OutOfDomain(x.to_vec()));
        }
        Ok(self.value(x[0]))
    }

    fn best_value(&mut self) -> BestValue {
        BestValue { value: self.exact_max(), exact: true }
    }
}

/// `phi_1`: one bump per third, the last one negated.
fn phi1(u: f64) -> f64 {
    if u < 1.0 / 3.0 {
        phi(3.0 * u)
    } else if u < 2.0 / 3.0 {
        phi(3.0 * u - 1.0)
    } else {
        -phi(3.0 * u - 2.0)
    }
}

/// Outcome of the sign-reading strategy on the second toy process.
#[derive(Debug, Clone)]
pub struct Toy2Run {
    pub trace: RegretTrace,
    /// `|X_i| <= sqrt(2 log(pi^2 i^2 / (3 delta)))` for every simulated level.
    pub e4: bool,
    /// `|eta_t| <= 1/(sqrt(2) t^2)` for every round played.
    pub e5: bool,
    /// Number of rounds whose sign estimate disagreed with `sign(X_t)`.
    pub wrong_signs: usize,
    /// Per-round estimate of `a_t X_t` after subtracting coarser levels.
    pub estimates: Vec<f64>,
}

/// Second toy process: the same three-lobe pattern repeated at every ternary
/// scale, with level `i` sharing one amplitude `a_i X_i` across its copies.
#[derive(Debug, Clone)]
pub struct ToyEnv2 {
    domain: BoxDomain,
    delta: f64,
    a: Vec<f64>,
    xs: Vec<f64>,
    noise: NoiseSource,
    best: Option<f64>,
}

impl ToyEnv2 {
    pub const DEPTH_MAX: usize = 12;

    pub fn amplitude(delta: f64, i: usize) -> f64 {
        let i = i as f64;
        1.0 / (i * i * (2.0 * (PI * PI * i * i / (3.0 * delta)).ln()).sqrt())
    }

    /// `a_n / sqrt(2)` for a horizon of `n` rounds.
    pub fn sigma_for_horizon(delta: f64, n: usize) -> f64 {
        Self::amplitude(delta, n.max(1)) / 2f64.sqrt()
    }

    pub fn new(delta: f64, sigma: f64, seed: u64) -> Result<Self> {
        check_delta(delta)?;
        let a = (1..=Self::DEPTH_MAX).map(|i| Self::amplitude(delta, i)).collect();
        let mut rng = function_rng(seed);
        let xs = (0..Self::DEPTH_MAX).map(|_| StandardNormal.sample(&mut rng)).collect();
        Ok(ToyEnv2 { domain: BoxDomain::unit(1), delta, a, xs, noise: NoiseSource::new(sigma, seed), best: None })
    }

    pub fn draws(&self) -> &[f64] {
        &self.xs
    }

    /// Bound on the contribution of the levels dropped by truncation, assuming
    /// `|X_i| <= 5` there.
    pub fn truncation_bound(&self) -> f64 {
        (Self::DEPTH_MAX + 1..10_000).map(|i| 5.0 * Self::amplitude(self.delta, i)).sum()
    }

    fn level(&self, i: usize, u: f64) -> f64 {
        if i > Self::DEPTH_MAX || !(0.0..=1.0).contains(&u) {
            return 0.0;
        }
        self.a[i - 1] * self.xs[i - 1] * phi1(u) + self.level(i + 1, 3.0 * u) + self.level(i + 1, 3.0 * u - 2.0)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.level(1, x)
    }

    fn e4(&self) -> bool {
        self.xs
            .iter()
            .enumerate()
            .all(|(k, x)| x.abs() <= (2.0 * (PI * PI * ((k + 1) * (k + 1)) as f64 / (3.0 * self.delta)).ln()).sqrt())
    }

    /// Maximum over a uniform scan plus a dense scan around the sign path.
    fn search_max(&self) -> f64 {
        let m = 3usize.pow(10);
        let mut best = (0..=m).map(|j| self.value(j as f64 / m as f64)).fold(f64::NEG_INFINITY, f64::max);
        let (mut lo, mut w) = (0.0, 1.0);
        for x in &self.xs {
            w /= 3.0;
            if *x < 0.0 {
                lo += 2.0 * w;
            }
            let k = 200;
            for j in 0..=k {
                best = best.max(self.value(lo + w * j as f64 / k as f64));
            }
        }
        best
    }

    /// Plays the sign-reading strategy for `n <= DEPTH_MAX` rounds: observe the
    /// centre of the current region, subtract the estimated contributions of
    /// coarser levels, and keep the left or right third by the sign of the rest.
    pub fn oracle_strategy(&mut self, n: usize) -> Result<Toy2Run> {
        if n > Self::DEPTH_MAX {
            return Err(Error::InvalidConfig(format!("toy2 strategy supports at most {} rounds", Self::DEPTH_MAX)));
        }
        let mut rec = TraceRecorder::new(false);
        let (mut lo, mut w) = (0.0f64, 1.0f64);
        // (region start, width, estimated a_i X_i) per completed level.
        let mut levels: Vec<(f64, f64, f64)> = Vec::new();
        let mut e5 = true;
        let mut wrong = 0;
        let mut estimates = Vec::with_capacity(n);
        let mut x_t = 0.5;
        for t in 1..=n {
            x_t = lo + 0.5 * w;
            let f = self.value(x_t);
            let y = f + self.noise.sample();
            e5 &= (y - f).abs() <= 1.0 / (2f64.sqrt() * (t * t) as f64);
            let coarse: f64 = levels.iter().map(|&(l, lw, est)| est * phi1((x_t - l) / lw)).sum();
            let est = y - coarse;
            if (est >= 0.0) != (self.xs[t - 1] >= 0.0) {
                wrong += 1;
            }
            estimates.push(est);
            levels.push((lo, w, est));
            w /= 3.0;
            if est < 0.0 {
                lo += 2.0 * w;
            }
            rec.record(t as u64, &[x_t], y, f, f, 1);
        }
        let best = self.best_value().value;
        Ok(Toy2Run { trace: rec.finish(best, false, vec![x_t]), e4: self.e4(), e5, wrong_signs: wrong, estimates })
    }
}

impl Environment for ToyEnv2 {
    fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    fn noise_std(&self) -> f64 {
        self.noise.sigma()
    }

    fn query(&mut self, x: &[f64]) -> Result<f64> {
        Ok(self.true_value(x)? + self.noise.sample())
    }

    fn true_value(&mut self, x: &[f64]) -> Result<f64> {
        if !self.domain.contains(x) {
            return Err(Error::OutOfDomain(x.to_vec()));
        }
        Ok(self.value(x[0]))
    }

    fn best_value(&mut self) -> BestValue {
        let v = match self.best {
            Some(v) => v,
            None => {
                let v = self.search_max();
                self.best = Some(v);
                v
            }
        };
        BestValue { value: v, exact: false }
    }
}
