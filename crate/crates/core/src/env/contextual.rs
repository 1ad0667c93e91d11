use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::grid_gp::uniform_grid;
use super::{function_rng, NoiseSource};
use crate::error::{Error, Result};
use crate::kernel::{Covariance, Kernel};
use crate::partition::BoxDomain;
use crate::sampling::GridSampler;

/// A reward function of a context and an action.
pub trait ContextualEnvironment {
    fn context_domain(&self) -> &BoxDomain;

    fn action_domain(&self) -> &BoxDomain;

    fn noise_std(&self) -> f64;

    fn next_context(&mut self) -> Vec<f64>;

    fn query(&mut self, context: &[f64], action: &[f64]) -> Result<f64>;

    fn true_value(&mut self, context: &[f64], action: &[f64]) -> Result<f64>;

    /// `sup_a f(context, a)`, over the environment's action grid.
    fn best_action_value(&mut self, context: &[f64]) -> Result<f64>;

    /// Points per action axis when actions must lie on the grid
    /// `j / (res - 1)` of the unit action cube; `None` for any action.
    fn action_grid_res(&self) -> Option<usize> {
        None
    }
}

/// How the context and action kernels combine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Composition {
    Sum,
    Product,
}

/// A GP reward sampled exactly on a context grid times an action grid.
///
/// Product kernels use the Kronecker structure `F = L_c Z L_a^T`; sums draw
/// the two components independently.
#[derive(Debug, Clone)]
pub struct ContextualGpEnv {
    context_domain: BoxDomain,
    action_domain: BoxDomain,
    kernel: Kernel,
    contexts: Vec<Vec<f64>>,
    actions: Vec<Vec<f64>>,
    context_res: usize,
    action_res: usize,
    // Row-major, contexts by actions.
    values: Vec<f64>,
    best: Vec<f64>,
    noise: NoiseSource,
    stream: ChaCha8Rng,
}

/// Builds a contextual GP environment on unit cubes of dimensions `dims =
/// (context, action)` with `context_res` and `action_res` grid points per axis.
#[allow(clippy::too_many_arguments)]
pub fn make_contextual_env(
    kernel_c: Kernel,
    kernel_a: Kernel,
    composition: Composition,
    dims: (usize, usize),
    sigma: f64,
    seed: u64,
    context_res: usize,
    action_res: usize,
) -> Result<ContextualGpEnv> {
    kernel_c.validate()?;
    kernel_a.validate()?;
    let (dc, da) = dims;
    if action_res < 2 || context_res < 2 {
        return Err(Error::InvalidConfig("context and action grids need at least 2 points per axis".into()));
    }
    let context_domain = BoxDomain::unit(dc);
    let action_domain = BoxDomain::unit(da);
    let contexts = uniform_grid(&context_domain, context_res)?;
    let actions = uniform_grid(&action_domain, action_res)?;
    let (nc, na) = (contexts.len(), actions.len());
    let sc = GridSampler::new(&kernel_c, &contexts)?;
    let sa = GridSampler::new(&kernel_a, &actions)?;
    let mut rng = function_rng(seed);
    let values = match composition {
        Composition::Sum => {
            let fc = sc.draw(&mut rng);
            let fa = sa.draw(&mut rng);
            (0..nc * na).map(|k| fc[k / na] + fa[k % na]).collect()
        }
        Composition::Product => {
            // W = Z L_a^T row by row, then F = L_c W column by column.
            let mut w = Vec::with_capacity(nc * na);
            for _ in 0..nc {
                let z: Vec<f64> = (0..na).map(|_| StandardNormal.sample(&mut rng)).collect();
                w.extend(sa.apply(&z));
            }
            let mut f = vec![0.0; nc * na];
            let mut col = vec![0.0; nc];
            for j in 0..na {
                for i in 0..nc {
                    col[i] = w[i * na + j];
                }
                for (i, v) in sc.apply(&col).into_iter().enumerate() {
                    f[i * na + j] = v;
                }
            }
            f
        }
    };
    let best = (0..nc).map(|i| values[i * na..(i + 1) * na].iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect();
    let ctx_axes: Vec<usize> = (0..dc).collect();
    let act_axes: Vec<usize> = (dc..dc + da).collect();
    let kc = Kernel::on_axes(ctx_axes, kernel_c);
    let ka = Kernel::on_axes(act_axes, kernel_a);
    let kernel = match composition {
        Composition::Sum => Kernel::sum(kc, ka),
        Composition::Product => Kernel::product(kc, ka),
    };
    let mut stream = function_rng(seed);
    stream.set_stream(2);
    Ok(ContextualGpEnv {
        context_domain,
        action_domain,
        kernel,
        contexts,
        actions,
        context_res,
        action_res,
        values,
        best,
        noise: NoiseSource::new(sigma, seed),
        stream,
    })
}

fn grid_index(x: &[f64], res: usize) -> Option<usize> {
    let mut idx = 0;
    let mut stride = 1;
    for &v in x {
        let pos = v * (res - 1) as f64;
        let j = pos.round();
        if !(0.0..=(res - 1) as f64).contains(&j) || (pos - j).abs() > 1e-6 {
            return None;
        }
        idx += j as usize * stride;
        stride *= res;
    }
    Some(idx)
}

impl ContextualGpEnv {
    /// The joint kernel on `(context, action)` points, context axes first.
    pub fn kernel(&self) -> Arc<dyn Covariance> {
        Arc::new(self.kernel.clone())
    }

    pub fn joint_kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn contexts(&self) -> &[Vec<f64>] {
        &self.contexts
    }

    pub fn actions(&self) -> &[Vec<f64>] {
        &self.actions
    }

    /// Points per action axis.
    pub fn action_res(&self) -> usize {
        self.action_res
    }

    fn lookup(&self, context: &[f64], action: &[f64]) -> Result<(usize, usize)> {
        let i = grid_index(context, self.context_res).ok_or_else(|| Error::OffGrid(context.to_vec()))?;
        let j = grid_index(action, self.action_res).ok_or_else(|| Error::OffGrid(action.to_vec()))?;
        Ok((i, j))
    }

    /// Best grid action for `context`.
    pub fn best_action(&self, context: &[f64]) -> Result<Vec<f64>> {
        let i = grid_index(context, self.context_res).ok_or_else(|| Error::OffGrid(context.to_vec()))?;
        let na = self.actions.len();
        let row = &self.values[i * na..(i + 1) * na];
        let j = (0..na).fold(0, |b, j| if row[j] > row[b] { j } else { b });
        Ok(self.actions[j].clone())
    }
}

impl ContextualEnvironment for ContextualGpEnv {
    fn context_domain(&self) -> &BoxDomain {
        &self.context_domain
    }

    fn action_domain(&self) -> &BoxDomain {
        &self.action_domain
    }

    fn noise_std(&self) -> f64 {
        self.noise.sigma()
    }

    fn next_context(&mut self) -> Vec<f64> {
        let i = self.stream.random_range(0..self.contexts.len());
        self.contexts[i].clone()
    }

    fn query(&mut self, context: &[f64], action: &[f64]) -> Result<f64> {
        Ok(self.true_value(context, action)? + self.noise.sample())
    }

    fn true_value(&mut self, context: &[f64], action: &[f64]) -> Result<f64> {
        let (i, j) = self.lookup(context, action)?;
        Ok(self.values[i * self.actions.len() + j])
    }

    fn best_action_value(&mut self, context: &[f64]) -> Result<f64> {
        let i = grid_index(context, self.context_res).ok_or_else(|| Error::OffGrid(context.to_vec()))?;
        Ok(self.best[i])
    }

    fn action_grid_res(&self) -> Option<usize> {
        Some(self.action_res)
    }
}
