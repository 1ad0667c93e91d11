//! Reference strategies: GP-UCB over a fixed grid and uniform random search.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algo::{confidence_config, BanditConfig};
use crate::env::{uniform_grid, Environment};
use crate::error::{Error, Result};
use crate::kernel::Covariance;
use crate::partition::BoxDomain;
use crate::posterior::{CachedQuery, PosteriorState};
use crate::sampling::MAX_GRID;
use crate::trace::{RegretTrace, TraceRecorder};

/// `res^D` evenly spaced points, endpoints included.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformGrid {
    pub res: usize,
    pub points: Vec<Vec<f64>>,
}

impl UniformGrid {
    pub fn new(domain: &BoxDomain, res: usize) -> Result<Self> {
        Ok(UniformGrid { res, points: uniform_grid(domain, res)? })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Size `t^{2D}` of the grid that GP-UCB would need at round `t` for its
/// discretization argument, as a natural logarithm.
pub fn ln_growing_grid_size(t: usize, dim: usize) -> f64 {
    2.0 * dim as f64 * (t.max(1) as f64).ln()
}

/// GP-UCB restricted to `grid`: each round evaluates the grid point with the
/// largest `mu + beta sigma` (first point on ties).
pub fn run_gp_ucb<E: Environment + ?Sized>(
    kernel: Arc<dyn Covariance>,
    env: &mut E,
    cfg: &BanditConfig,
    grid: &UniformGrid,
) -> Result<RegretTrace> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("GP-UCB grid is empty".into()));
    }
    if grid.len() > MAX_GRID {
        return Err(Error::GridTooLarge { size: grid.len(), limit: MAX_GRID });
    }
    let sigma = env.noise_std();
    let conf = confidence_config(kernel.as_ref(), env.domain(), sigma, 2, cfg)?;
    let beta = conf.gp_ucb_beta(grid.len());
    let mut posterior = PosteriorState::new(kernel, sigma * sigma)?;
    let mut caches: Vec<CachedQuery> = grid.points.iter().map(|p| posterior.cached(p)).collect();
    let mut recorder = TraceRecorder::new(cfg.timed);
    let mut rec = env.domain().center();
    for t in 1..=cfg.budget {
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, c) in caches.iter_mut().enumerate() {
            let (mu, sd) = c.get(&posterior);
            if mu + beta * sd > best.0 {
                best = (mu + beta * sd, i);
            }
        }
        let x = grid.points[best.1].clone();
        let y = env.query(&x)?;
        let f_x = env.true_value(&x)?;
        match posterior.update(&x, y) {
            // A repeated noiseless point adds no information.
            Err(Error::SingularGram { .. }) if posterior.noise_var() == 0.0 => {}
            other => other?,
        }
        // Recommend the grid point of highest posterior mean after the update.
        let mut top = (f64::NEG_INFINITY, 0);
        for (i, c) in caches.iter_mut().enumerate() {
            let mu = c.get(&posterior).0;
            if mu > top.0 {
                top = (mu, i);
            }
        }
        rec = grid.points[top.1].clone();
        let f_rec = env.true_value(&rec)?;
        recorder.record(t as u64, &x, y, f_x, f_rec, grid.len());
    }
    let best = env.best_value();
    Ok(recorder.finish(best.value, best.exact, rec))
}

/// `n` i.i.d. uniform queries; the recommendation is the point with the
/// largest observation so far.
pub fn run_random<E: Environment + ?Sized>(env: &mut E, n: usize, seed: u64, timed: bool) -> Result<RegretTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(3);
    let domain = env.domain().clone();
    let mut recorder = TraceRecorder::new(timed);
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    for t in 1..=n {
        let u: Vec<f64> = (0..domain.dim()).map(|_| rng.random::<f64>()).collect();
        let x = domain.denormalize(&u);
        let y = env.query(&x)?;
        let f_x = env.true_value(&x)?;
        if best.as_ref().is_none_or(|b| y > b.0) {
            best = Some((y, x.clone(), f_x));
        }
        let f_rec = best.as_ref().map_or(f_x, |b| b.2);
        recorder.record(t as u64, &x, y, f_x, f_rec, t);
    }
    let bv = env.best_value();
    let rec = best.map_or_else(|| domain.center(), |b| b.1);
    Ok(recorder.finish(bv.value, bv.exact, rec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::make_grid_gp;
    use crate::kernel::{Kernel, MaternNu};

    fn m32() -> Arc<dyn Covariance> {
        Arc::new(Kernel::matern(MaternNu::ThreeHalves, 0.2, 1.0).unwrap())
    }

    #[test]
    fn grid_shape_and_cover() {
        let d = BoxDomain::new(vec![0.0, -1.0], vec![2.0, 1.0]).unwrap();
        let g = UniformGrid::new(&d, 5).unwrap();
        assert_eq!(g.len(), 25);
        // Every point of the box is within half a grid step of the grid.
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..200 {
            let x = [rng.random::<f64>() * 2.0, rng.random::<f64>() * 2.0 - 1.0];
            let near = g.points.iter().map(|p| crate::kernel::linf(p, &x)).fold(f64::INFINITY, f64::min);
            assert!(near <= 0.25 + 1e-12);
        }
    }

    #[test]
    fn first_pick_is_first_max_variance_point() {
        let mut e = make_grid_gp(m32(), BoxDomain::unit(1), 17, 0.1, 1).unwrap();
        let g = UniformGrid::new(&BoxDomain::unit(1), 9).unwrap();
        let tr = run_gp_ucb(m32(), &mut e, &BanditConfig::with_budget(1), &g).unwrap();
        assert_eq!(tr.rows[0].x, vec![0.0]);
    }

    #[test]
    fn gp_ucb_deterministic_and_sane() {
        let run = || {
            let mut e = make_grid_gp(m32(), BoxDomain::unit(1), 33, 0.1, 2).unwrap();
            let g = UniformGrid::new(&BoxDomain::unit(1), 33).unwrap();
            run_gp_ucb(m32(), &mut e, &BanditConfig::with_budget(30), &g).unwrap()
        };
        let a = run();
        assert_eq!(a, run());
        assert_eq!(a.len(), 30);
        assert!(a.rows.iter().all(|r| r.delta >= -1e-12));
    }

    #[test]
    fn rejects_oversized_grid() {
        let d = BoxDomain::unit(2);
        let g = UniformGrid::new(&d, 64).unwrap();
        let mut e = make_grid_gp(m32(), d.clone(), 2, 0.1, 0).unwrap();
        let big = UniformGrid { res: 65, points: vec![vec![0.5, 0.5]; MAX_GRID + 1] };
        assert!(matches!(run_gp_ucb(m32(), &mut e, &BanditConfig::with_budget(1), &big), Err(Error::GridTooLarge { .. })));
        assert_eq!(g.len(), 4096);
    }

    #[test]
    fn random_search_basics() {
        let mut e = make_grid_gp(m32(), BoxDomain::unit(1), 17, 0.1, 3).unwrap();
        assert!(run_random(&mut e, 0, 1, false).unwrap().is_empty());
        let run = |seed| {
            let mut e = make_grid_gp(m32(), BoxDomain::unit(1), 17, 0.1, 3).unwrap();
            run_random(&mut e, 25, seed, false).unwrap()
        };
        assert_eq!(run(4), run(4));
        assert_ne!(run(4), run(5));
    }

    #[test]
    fn noiseless_random_simple_regret_is_running_best() {
        let mut e = make_grid_gp(m32(), BoxDomain::unit(1), 17, 0.0, 6).unwrap();
        let tr = run_random(&mut e, 40, 9, false).unwrap();
        assert!(tr.rows.windows(2).all(|w| w[1].simple_regret <= w[0].simple_regret));
        let min_delta = tr.rows.iter().map(|r| r.delta).fold(f64::INFINITY, f64::min);
        assert_eq!(tr.simple_at(40), min_delta);
    }

    #[test]
    fn growing_grid_size() {
        assert!(ln_growing_grid_size(100, 6) > 1e24f64.ln());
        assert!((ln_growing_grid_size(10, 1) - 100f64.ln()).abs() < 1e-12);
    }
}
