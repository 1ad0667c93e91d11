//! Covariance functions and their smoothness envelopes.
//!
//! Every isotropic family here is a function of the Euclidean distance between
//! inputs. The envelope `g` returned by [`Covariance::envelope`] bounds the
//! induced metric `d(x, y)` in terms of the *sup-norm* distance, which is the
//! base metric used by the partition tree and the zooming oracle. The
//! conversion costs a factor `sqrt(dim)` inside `g`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A covariance function usable by the posterior engine and the bandit drivers.
pub trait Covariance: fmt::Debug + Send + Sync {
    /// `K(x, y)`.
    fn cov(&self, x: &[f64], y: &[f64]) -> f64;

    /// `K(x, x)`.
    fn prior_variance(&self, x: &[f64]) -> f64 {
        self.cov(x, x)
    }

    /// Squared induced metric `d(x, y)^2 = K(x,x) + K(y,y) - 2K(x,y)`.
    ///
    /// Implementations may override this with a cancellation-free form.
    fn sq_metric(&self, x: &[f64], y: &[f64]) -> f64 {
        (self.prior_variance(x) + self.prior_variance(y) - 2.0 * self.cov(x, y)).max(0.0)
    }

    /// Smoothness envelope for inputs of dimension `dim` under the sup-norm.
    fn envelope(&self, dim: usize) -> SmoothnessEnvelope;
}

/// `K(x1, x2)`.
pub fn kernel_eval(k: &dyn Covariance, x1: &[f64], x2: &[f64]) -> f64 {
    k.cov(x1, x2)
}

/// The GP-induced metric `sqrt(K(x1,x1) + K(x2,x2) - 2K(x1,x2))`, clamped at 0.
pub fn induced_metric(k: &dyn Covariance, x1: &[f64], x2: &[f64]) -> f64 {
    k.sq_metric(x1, x2).max(0.0).sqrt()
}

/// Matérn smoothness orders with closed-form covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaternNu {
    Half,
    ThreeHalves,
    FiveHalves,
}

/// Largest radius (in lengthscale units) for which the Matérn 5/2 envelope
/// `g(r) = s * sqrt(5/3) * r / l` bounds the induced metric. The sweep in the
/// tests finds no violation anywhere, so the bound holds globally.
pub const MATERN52_DELTA: f64 = f64::INFINITY;

/// Closed set of covariance functions: atomic families plus sums, products
/// and restriction to a subset of input axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Kernel {
    SquaredExponential {
        lengthscale: f64,
        variance: f64,
    },
    Matern {
        nu: MaternNu,
        lengthscale: f64,
        variance: f64,
    },
    /// `s^2 (1 + c1 (r/l)^2)^(-c2)`.
    RationalQuadratic {
        c1: f64,
        c2: f64,
        lengthscale: f64,
        variance: f64,
    },
    /// `s^2 max(0, 1 - r/l)`. Positive definite only for one-dimensional inputs.
    Triangle {
        lengthscale: f64,
        variance: f64,
    },
    Sum {
        left: Box<Kernel>,
        right: Box<Kernel>,
    },
    Product {
        left: Box<Kernel>,
        right: Box<Kernel>,
    },
    /// The inner kernel applied to the listed input coordinates only.
    OnAxes {
        axes: Vec<usize>,
        inner: Box<Kernel>,
    },
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidKernelParameter { name, value })
    }
}

impl Kernel {
    pub fn squared_exponential(lengthscale: f64, variance: f64) -> Result<Self> {
        let k = Kernel::SquaredExponential { lengthscale, variance };
        k.validate()?;
        Ok(k)
    }

    pub fn matern(nu: MaternNu, lengthscale: f64, variance: f64) -> Result<Self> {
        let k = Kernel::Matern { nu, lengthscale, variance };
        k.validate()?;
        Ok(k)
    }

    pub fn rational_quadratic(c1: f64, c2: f64, lengthscale: f64, variance: f64) -> Result<Self> {
        let k = Kernel::RationalQuadratic { c1, c2, lengthscale, variance };
        k.validate()?;
        Ok(k)
    }

    pub fn triangle(lengthscale: f64, variance: f64) -> Result<Self> {
        let k = Kernel::Triangle { lengthscale, variance };
        k.validate()?;
        Ok(k)
    }

    pub fn sum(left: Kernel, right: Kernel) -> Self {
        Kernel::Sum { left: Box::new(left), right: Box::new(right) }
    }

    pub fn product(left: Kernel, right: Kernel) -> Self {
        Kernel::Product { left: Box::new(left), right: Box::new(right) }
    }

    pub fn on_axes(axes: Vec<usize>, inner: Kernel) -> Self {
        Kernel::OnAxes { axes, inner: Box::new(inner) }
    }

    /// Checks every parameter in the tree. Deserialized kernels must pass
    /// through here before use.
    pub fn validate(&self) -> Result<()> {
        match self {
            Kernel::SquaredExponential { lengthscale, variance }
            | Kernel::Matern { lengthscale, variance, .. }
            | Kernel::Triangle { lengthscale, variance } => {
                check_positive("lengthscale", *lengthscale)?;
                check_positive("variance", *variance)
            }
            Kernel::RationalQuadratic { c1, c2, lengthscale, variance } => {
                check_positive("c1", *c1)?;
                check_positive("c2", *c2)?;
                check_positive("lengthscale", *lengthscale)?;
                check_positive("variance", *variance)
            }
            Kernel::Sum { left, right } | Kernel::Product { left, right } => {
                left.validate()?;
                right.validate()
            }
            Kernel::OnAxes { axes, inner } => {
                if axes.is_empty() {
                    return Err(Error::InvalidConfig("OnAxes kernel needs at least one axis".into()));
                }
                inner.validate()
            }
        }
    }

    /// Constant prior variance `K(x, x)`.
    pub fn variance(&self) -> f64 {
        match self {
            Kernel::SquaredExponential { variance, .. }
            | Kernel::Matern { variance, .. }
            | Kernel::RationalQuadratic { variance, .. }
            | Kernel::Triangle { variance, .. } => *variance,
            Kernel::Sum { left, right } => left.variance() + right.variance(),
            Kernel::Product { left, right } => left.variance() * right.variance(),
            Kernel::OnAxes { inner, .. } => inner.variance(),
        }
    }

    /// Covariance as a function of the Euclidean distance, for atomic kernels.
    fn atomic_cov(&self, r: f64) -> f64 {
        match *self {
            Kernel::SquaredExponential { lengthscale, variance } => {
                let q = r / lengthscale;
                variance * (-0.5 * q * q).exp()
            }
            Kernel::Matern { nu, lengthscale, variance } => match nu {
                MaternNu::Half => variance * (-r / lengthscale).exp(),
                MaternNu::ThreeHalves => {
                    let z = 3f64.sqrt() * r / lengthscale;
                    variance * (1.0 + z) * (-z).exp()
                }
                MaternNu::FiveHalves => {
                    let z = 5f64.sqrt() * r / lengthscale;
                    variance * (1.0 + z + z * z / 3.0) * (-z).exp()
                }
            },
            Kernel::RationalQuadratic { c1, c2, lengthscale, variance } => {
                let q = r / lengthscale;
                variance * (1.0 + c1 * q * q).powf(-c2)
            }
            Kernel::Triangle { lengthscale, variance } => variance * (1.0 - r / lengthscale).max(0.0),
            _ => unreachable!("composite kernel has no radial profile"),
        }
    }

    /// `K(0) - K(r)` without cancellation, for atomic kernels.
    fn atomic_deficit(&self, r: f64) -> f64 {
        match *self {
            Kernel::SquaredExponential { lengthscale, variance } => {
                let q = r / lengthscale;
                -variance * (-0.5 * q * q).exp_m1()
            }
            Kernel::Matern { nu, lengthscale, variance } => match nu {
                MaternNu::Half => -variance * (-r / lengthscale).exp_m1(),
                MaternNu::ThreeHalves => {
                    let z = 3f64.sqrt() * r / lengthscale;
                    variance * (-(-z).exp_m1() - z * (-z).exp())
                }
                MaternNu::FiveHalves => {
                    let z = 5f64.sqrt() * r / lengthscale;
                    variance * (-(-z).exp_m1() - (z + z * z / 3.0) * (-z).exp())
                }
            },
            Kernel::RationalQuadratic { c1, c2, lengthscale, variance } => {
                let q = r / lengthscale;
                -variance * (-c2 * (c1 * q * q).ln_1p()).exp_m1()
            }
            Kernel::Triangle { lengthscale, variance } => variance * (r / lengthscale).min(1.0),
            _ => unreachable!("composite kernel has no radial profile"),
        }
    }

    fn cov_on(&self, x: &[f64], y: &[f64], axes: Option<&[usize]>) -> f64 {
        match self {
            Kernel::Sum { left, right } => left.cov_on(x, y, axes) + right.cov_on(x, y, axes),
            Kernel::Product { left, right } => left.cov_on(x, y, axes) * right.cov_on(x, y, axes),
            Kernel::OnAxes { axes: inner_axes, inner } => {
                let mapped = compose_axes(axes, inner_axes);
                inner.cov_on(x, y, Some(&mapped))
            }
            atomic => atomic.atomic_cov(euclidean(x, y, axes)),
        }
    }

    fn sq_metric_on(&self, x: &[f64], y: &[f64], axes: Option<&[usize]>) -> f64 {
        match self {
            Kernel::Sum { left, right } => left.sq_metric_on(x, y, axes) + right.sq_metric_on(x, y, axes),
            Kernel::Product { left, right } => {
                // 2(K1(0)K2(0) - K1K2) = K2(0) d1^2 + K1(x,y) d2^2 for stationary factors.
                right.variance() * left.sq_metric_on(x, y, axes)
                    + left.cov_on(x, y, axes) * right.sq_metric_on(x, y, axes)
            }
            Kernel::OnAxes { axes: inner_axes, inner } => {
                let mapped = compose_axes(axes, inner_axes);
                inner.sq_metric_on(x, y, Some(&mapped))
            }
            atomic => 2.0 * atomic.atomic_deficit(euclidean(x, y, axes)),
        }
    }

    fn envelope_for(&self, dim: usize) -> SmoothnessEnvelope {
        let root_dim = (dim.max(1) as f64).sqrt();
        match *self {
            Kernel::SquaredExponential { lengthscale, variance } => {
                SmoothnessEnvelope::power(variance.sqrt() * root_dim / lengthscale, 1.0, f64::INFINITY)
            }
            Kernel::Matern { nu, lengthscale, variance } => {
                let s = variance.sqrt();
                match nu {
                    MaternNu::Half => {
                        SmoothnessEnvelope::power(s * (2.0 * root_dim / lengthscale).sqrt(), 0.5, f64::INFINITY)
                    }
                    MaternNu::ThreeHalves => {
                        SmoothnessEnvelope::power(s * 3f64.sqrt() * root_dim / lengthscale, 1.0, f64::INFINITY)
                    }
                    MaternNu::FiveHalves => SmoothnessEnvelope::power(
                        s * (5.0f64 / 3.0).sqrt() * root_dim / lengthscale,
                        1.0,
                        MATERN52_DELTA * lengthscale,
                    ),
                }
            }
            Kernel::RationalQuadratic { c1, c2, lengthscale, variance } => SmoothnessEnvelope::power(
                variance.sqrt() * (2.0 * c1 * c2).sqrt() * root_dim / lengthscale,
                1.0,
                f64::INFINITY,
            ),
            Kernel::Triangle { lengthscale, variance } => {
                SmoothnessEnvelope::power(variance.sqrt() * (2.0 * root_dim / lengthscale).sqrt(), 0.5, f64::INFINITY)
            }
            Kernel::Sum { ref left, ref right } => {
                SmoothnessEnvelope::quadrature(1.0, left.envelope_for(dim), 1.0, right.envelope_for(dim))
            }
            Kernel::Product { ref left, ref right } => SmoothnessEnvelope::quadrature(
                right.variance(),
                left.envelope_for(dim),
                left.variance(),
                right.envelope_for(dim),
            ),
            Kernel::OnAxes { ref axes, ref inner } => inner.envelope_for(axes.len()),
        }
    }
}

impl Covariance for Kernel {
    fn cov(&self, x: &[f64], y: &[f64]) -> f64 {
        self.cov_on(x, y, None)
    }

    fn prior_variance(&self, _x: &[f64]) -> f64 {
        self.variance()
    }

    fn sq_metric(&self, x: &[f64], y: &[f64]) -> f64 {
        self.sq_metric_on(x, y, None).max(0.0)
    }

    fn envelope(&self, dim: usize) -> SmoothnessEnvelope {
        self.envelope_for(dim)
    }
}

fn compose_axes(outer: Option<&[usize]>, inner: &[usize]) -> Vec<usize> {
    match outer {
        None => inner.to_vec(),
        Some(outer) => inner.iter().map(|&a| outer[a]).collect(),
    }
}

fn euclidean(x: &[f64], y: &[f64], axes: Option<&[usize]>) -> f64 {
    match axes {
        None => x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
        Some(axes) => axes.iter().map(|&i| (x[i] - y[i]) * (x[i] - y[i])).sum::<f64>().sqrt(),
    }
}

/// Sup-norm distance.
pub fn linf(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
}

/// One term of a capped envelope: `weight * min(cap, (slope * r)^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CappedTerm {
    pub weight: f64,
    pub slope: f64,
    pub cap: f64,
}

/// Functional form of `g`.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvelopeShape {
    /// `coef * r^exponent`.
    Power { coef: f64, exponent: f64 },
    /// `sqrt(sum_i w_i g_i(r)^2)`.
    Quadrature(Vec<(f64, EnvelopeShape)>),
    /// `sqrt(sum_i weight_i min(cap_i, (slope_i r)^2))`.
    Capped(Vec<CappedTerm>),
}

impl EnvelopeShape {
    fn eval(&self, r: f64) -> f64 {
        match self {
            EnvelopeShape::Power { coef, exponent } => {
                if r <= 0.0 {
                    0.0
                } else {
                    coef * r.powf(*exponent)
                }
            }
            EnvelopeShape::Quadrature(terms) => terms
                .iter()
                .map(|(w, g)| {
                    let v = g.eval(r);
                    w * v * v
                })
                .sum::<f64>()
                .sqrt(),
            EnvelopeShape::Capped(terms) => terms
                .iter()
                .map(|t| t.weight * t.cap.min((t.slope * r).powi(2)))
                .sum::<f64>()
                .sqrt(),
        }
    }
}

/// `(g, alpha, C_K, delta_K)`: `d(x, y) <= g(l(x, y))` everywhere and
/// `g(r) <= C_K r^alpha` for `r <= delta_K`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessEnvelope {
    pub alpha: f64,
    pub c_k: f64,
    pub delta_k: f64,
    pub shape: EnvelopeShape,
}

impl SmoothnessEnvelope {
    pub fn power(coef: f64, alpha: f64, delta_k: f64) -> Self {
        SmoothnessEnvelope {
            alpha,
            c_k: coef,
            delta_k,
            shape: EnvelopeShape::Power { coef, exponent: alpha },
        }
    }

    /// Envelope of `sqrt(w1 g1^2 + w2 g2^2)`.
    pub fn quadrature(w1: f64, e1: SmoothnessEnvelope, w2: f64, e2: SmoothnessEnvelope) -> Self {
        let alpha = e1.alpha.min(e2.alpha);
        let mut delta_k = e1.delta_k.min(e2.delta_k);
        if e1.alpha != e2.alpha {
            // r^a1 <= r^a2 for a1 > a2 only on r <= 1.
            delta_k = delta_k.min(1.0);
        }
        SmoothnessEnvelope {
            alpha,
            c_k: (w1 * e1.c_k * e1.c_k + w2 * e2.c_k * e2.c_k).sqrt(),
            delta_k,
            shape: EnvelopeShape::Quadrature(vec![(w1, e1.shape), (w2, e2.shape)]),
        }
    }

    /// `g(r)`.
    pub fn g(&self, r: f64) -> f64 {
        self.shape.eval(r.max(0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn all_kernels() -> Vec<Kernel> {
        vec![
            Kernel::squared_exponential(0.3, 1.5).unwrap(),
            Kernel::matern(MaternNu::Half, 0.5, 1.0).unwrap(),
            Kernel::matern(MaternNu::ThreeHalves, 0.4, 2.0).unwrap(),
            Kernel::matern(MaternNu::FiveHalves, 0.2, 0.7).unwrap(),
            Kernel::rational_quadratic(1.5, 0.8, 0.3, 1.0).unwrap(),
            Kernel::triangle(0.5, 1.0).unwrap(),
            Kernel::sum(
                Kernel::squared_exponential(1.0, 1.0).unwrap(),
                Kernel::triangle(1.0, 1.0).unwrap(),
            ),
            Kernel::product(
                Kernel::matern(MaternNu::ThreeHalves, 0.3, 1.0).unwrap(),
                Kernel::squared_exponential(0.7, 2.0).unwrap(),
            ),
        ]
    }

    #[test]
    fn diagonal_equals_variance() {
        let se = Kernel::squared_exponential(1.0, 1.0).unwrap();
        assert_eq!(kernel_eval(&se, &[0.3], &[0.3]), 1.0);
        let sum = Kernel::sum(se.clone(), Kernel::triangle(1.0, 2.0).unwrap());
        assert_eq!(sum.cov(&[0.1], &[0.1]), 3.0);
        let prod = Kernel::product(Kernel::squared_exponential(1.0, 3.0).unwrap(), Kernel::triangle(1.0, 2.0).unwrap());
        assert_eq!(prod.cov(&[0.1], &[0.1]), 6.0);
    }

    #[test]
    fn matern_half_at_unit_distance() {
        let k = Kernel::matern(MaternNu::Half, 1.0, 1.0).unwrap();
        assert!((k.cov(&[0.0], &[1.0]) - (-1.0f64).exp()).abs() < 1e-15);
        assert!((k.cov(&[0.0], &[1.0]) - 0.367879).abs() < 1e-6);
        let d = induced_metric(&k, &[0.0], &[1.0]);
        assert!((d - (2.0 * (1.0 - (-1.0f64).exp())).sqrt()).abs() < 1e-14);
        assert!((d - 1.124385).abs() < 1e-6);
    }

    #[test]
    fn triangle_has_compact_support() {
        let k = Kernel::triangle(1.0, 1.0).unwrap();
        assert_eq!(k.cov(&[0.0], &[2.0]), 0.0);
    }

    #[test]
    fn induced_metric_limits() {
        for k in all_kernels() {
            assert_eq!(induced_metric(&k, &[0.25], &[0.25]), 0.0);
        }
        let se = Kernel::squared_exponential(1.0, 1.0).unwrap();
        assert!((induced_metric(&se, &[0.0], &[100.0]) - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Kernel::squared_exponential(0.0, 1.0).is_err());
        assert!(Kernel::matern(MaternNu::Half, 1.0, -1.0).is_err());
        assert!(Kernel::rational_quadratic(1.0, f64::NAN, 1.0, 1.0).is_err());
        assert!(Kernel::triangle(f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn envelope_examples() {
        let m12 = Kernel::matern(MaternNu::Half, 1.0, 1.0).unwrap().envelope(1);
        assert_eq!(m12.alpha, 0.5);
        assert!((m12.c_k - 2f64.sqrt()).abs() < 1e-15);

        let se = Kernel::squared_exponential(2.0, 4.0).unwrap().envelope(1);
        assert_eq!(se.alpha, 1.0);
        for r in [0.0, 0.1, 0.7, 3.0] {
            assert!((se.g(r) - r).abs() < 1e-15);
        }

        let sum = Kernel::sum(Kernel::squared_exponential(1.0, 1.0).unwrap(), Kernel::triangle(1.0, 1.0).unwrap());
        assert_eq!(sum.envelope(1).alpha, 0.5);

        let tri = Kernel::triangle(1.0, 1.0).unwrap().envelope(1);
        assert!((tri.g(0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn envelope_is_monotone_and_vanishes_at_zero() {
        for k in all_kernels() {
            for dim in 1..=3 {
                let env = k.envelope(dim);
                assert_eq!(env.g(0.0), 0.0);
                let mut prev = 0.0;
                for i in 1..200 {
                    let r = i as f64 * 0.01;
                    let g = env.g(r);
                    assert!(g >= prev);
                    prev = g;
                    if r <= env.delta_k {
                        assert!(g <= env.c_k * r.powf(env.alpha) * (1.0 + 1e-12));
                    }
                }
            }
        }
    }

    #[test]
    fn envelope_soundness_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for k in all_kernels() {
            for dim in 1..=3 {
                let env = k.envelope(dim);
                for _ in 0..1000 {
                    let x: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
                    let y: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
                    let r = linf(&x, &y);
                    if r <= env.delta_k {
                        assert!(induced_metric(&k, &x, &y) <= env.g(r) + 1e-10, "{k:?} dim {dim}");
                    }
                }
            }
        }
    }

    #[test]
    fn matern52_delta_sweep() {
        // d(r)^2 / s^2 = 2(1 - (1 + z + z^2/3) e^{-z}) against (C_K r)^2 = z^2 / 3.
        let k = Kernel::matern(MaternNu::FiveHalves, 1.0, 1.0).unwrap();
        let env = k.envelope(1);
        let mut largest_ok = 0.0;
        for i in 1..=400_000 {
            let r = i as f64 * 2.5e-4;
            if induced_metric(&k, &[0.0], &[r]) <= env.c_k * r * (1.0 + 1e-12) {
                largest_ok = r;
            } else {
                break;
            }
        }
        // No violation up to r = 100 lengthscales; beyond sqrt(6)/sqrt(5) the
        // bound exceeds sqrt(2) >= d trivially.
        assert_eq!(largest_ok, 100.0);
        assert_eq!(MATERN52_DELTA, f64::INFINITY);
    }

    #[test]
    fn sq_metric_matches_general_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in all_kernels() {
            for _ in 0..100 {
                let x = [rng.random::<f64>(), rng.random::<f64>()];
                let y = [rng.random::<f64>(), rng.random::<f64>()];
                let general = k.variance() * 2.0 - 2.0 * k.cov(&x, &y);
                assert!((k.sq_metric(&x, &y) - general).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn on_axes_ignores_other_coordinates() {
        let k = Kernel::product(
            Kernel::on_axes(vec![0], Kernel::squared_exponential(0.5, 1.0).unwrap()),
            Kernel::on_axes(vec![1], Kernel::matern(MaternNu::FiveHalves, 0.3, 2.0).unwrap()),
        );
        let se = Kernel::squared_exponential(0.5, 1.0).unwrap();
        let m = Kernel::matern(MaternNu::FiveHalves, 0.3, 2.0).unwrap();
        let x = [0.1, 0.9];
        let y = [0.4, 0.2];
        let expect = se.cov(&[0.1], &[0.4]) * m.cov(&[0.9], &[0.2]);
        assert!((k.cov(&x, &y) - expect).abs() < 1e-15);
        assert_eq!(k.variance(), 2.0);
    }

    #[test]
    fn symmetric_and_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in all_kernels() {
            let pts: Vec<Vec<f64>> = (0..25).map(|_| vec![rng.random::<f64>()]).collect();
            let n = pts.len();
            let mut gram = nalgebra::DMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    gram[(i, j)] = k.cov(&pts[i], &pts[j]);
                    assert_eq!(k.cov(&pts[i], &pts[j]), k.cov(&pts[j], &pts[i]));
                }
            }
            let trace = gram.trace();
            let eig = gram.symmetric_eigenvalues();
            assert!(eig.iter().all(|&e| e >= -1e-8 * trace), "{k:?}");
        }
    }
}
