//! Zooming GP bandit: a growing set of active points, each owning a sup-norm
//! ball whose radius halves once the point is known well enough.

use std::sync::Arc;

use crate::confidence::ConfidenceConfig;
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::kernel::Covariance;
use crate::partition::BoxDomain;
use crate::posterior::{CachedQuery, PosteriorState};
use crate::trace::{RegretTrace, TraceRecorder};

use super::{confidence_config, BanditConfig};

/// A point with its ball `B(x, r)`, `r = diam 2^-k` in the sup-norm.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivePoint {
    pub x: Vec<f64>,
    pub k: u32,
    pub radius: f64,
    pub evals: u64,
}

/// Result of a covering query.
#[derive(Debug, Clone, PartialEq)]
pub enum Coverage {
    Covered,
    /// A point of the region outside every ball.
    Uncovered(Vec<f64>),
}

fn point_in(p: &[f64], c: &[f64], r: f64) -> bool {
    p.iter().zip(c).all(|(p, c)| (p - c).abs() <= r)
}

fn box_in(lo: &[f64], hi: &[f64], c: &[f64], r: f64) -> bool {
    (0..lo.len()).all(|i| lo[i] >= c[i] - r && hi[i] <= c[i] + r)
}

fn box_meets(lo: &[f64], hi: &[f64], c: &[f64], r: f64) -> bool {
    (0..lo.len()).all(|i| hi[i] >= c[i] - r && lo[i] <= c[i] + r)
}

fn check_box(balls: &[(&[f64], f64)], lo: &[f64], hi: &[f64], eps: f64) -> Option<Vec<f64>> {
    let center: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect();
    if balls.iter().any(|&(c, r)| box_in(lo, hi, c, r)) {
        return None;
    }
    let near: Vec<(&[f64], f64)> = balls.iter().copied().filter(|&(c, r)| box_meets(lo, hi, c, r)).collect();
    if near.is_empty() {
        return Some(center);
    }
    let dim = lo.len();
    let widest = (0..dim).map(|i| hi[i] - lo[i]).fold(0.0, f64::max);
    if widest < eps {
        // At the resolution floor, probe the center and every corner.
        let covered = |p: &[f64]| near.iter().any(|&(c, r)| point_in(p, c, r));
        if !covered(&center) {
            return Some(center);
        }
        for mask in 0..(1u32 << dim) {
            let corner: Vec<f64> = (0..dim).map(|i| if mask >> i & 1 == 1 { hi[i] } else { lo[i] }).collect();
            if !covered(&corner) {
                return Some(corner);
            }
        }
        return None;
    }
    for mask in 0..(1u32 << dim) {
        let mut clo = lo.to_vec();
        let mut chi = hi.to_vec();
        for i in 0..dim {
            if mask >> i & 1 == 1 {
                clo[i] = center[i];
            } else {
                chi[i] = center[i];
            }
        }
        if let Some(w) = check_box(&near, &clo, &chi, eps) {
            return Some(w);
        }
    }
    None
}

fn check_region(active: &[ActivePoint], lo: &[f64], hi: &[f64], eps: f64) -> Coverage {
    let balls: Vec<(&[f64], f64)> = active.iter().map(|p| (p.x.as_slice(), p.radius)).collect();
    match check_box(&balls, lo, hi, eps) {
        None => Coverage::Covered,
        Some(w) => Coverage::Uncovered(w),
    }
}

/// Whether the sup-norm balls of `active` cover `domain`, by recursive
/// bisection down to boxes narrower than `eps`.
///
/// Boxes at the floor that no single ball contains count as covered when
/// their center and corners are; the first uncovered point in depth-first
/// order is returned otherwise.
pub fn covering_check(active: &[ActivePoint], domain: &BoxDomain, eps: f64) -> Coverage {
    assert!(eps > 0.0, "covering resolution must be positive");
    check_region(active, domain.lower(), domain.upper(), eps)
}

/// What one round of the zooming algorithm did.
#[derive(Debug, Clone, PartialEq)]
pub enum ZoomAction {
    /// An uncovered point joined the active set with the full radius.
    Added(Vec<f64>),
    /// The point's radius was halved.
    Shrunk(Vec<f64>),
    Evaluated { x: Vec<f64>, y: f64 },
}

/// State of one run of the zooming algorithm.
#[derive(Debug, Clone)]
pub struct ZoomBandit {
    domain: BoxDomain,
    conf: ConfidenceConfig,
    beta: f64,
    r_min: f64,
    w: Vec<f64>,
    active: Vec<ActivePoint>,
    caches: Vec<CachedQuery>,
    posterior: PosteriorState,
    budget: usize,
    t: u64,
    n_e: u64,
    /// Region whose coverage must be re-checked before the next selection.
    pending: Option<(Vec<f64>, Vec<f64>)>,
    recorder: TraceRecorder,
    eval_levels: Vec<u32>,
}

impl ZoomBandit {
    pub fn new(kernel: Arc<dyn Covariance>, domain: BoxDomain, sigma: f64, cfg: &BanditConfig) -> Result<Self> {
        let conf = confidence_config(kernel.as_ref(), &domain, sigma, 2, cfg)?;
        let posterior = PosteriorState::new(kernel, sigma * sigma)?;
        let pending = Some((domain.lower().to_vec(), domain.upper().to_vec()));
        Ok(ZoomBandit {
            beta: conf.zoom_beta(),
            r_min: conf.zoom_r_min(),
            w: Vec::new(),
            conf,
            domain,
            active: Vec::new(),
            caches: Vec::new(),
            posterior,
            budget: cfg.budget,
            t: 0,
            n_e: 0,
            pending,
            recorder: TraceRecorder::new(cfg.timed),
            eval_levels: Vec::new(),
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    /// `diam 2^-k`.
    pub fn radius(&self, k: u32) -> f64 {
        self.conf.r_k(k)
    }

    /// `W(r_k)` as used by this run.
    pub fn w(&mut self, k: u32) -> f64 {
        while self.w.len() <= k as usize {
            let next = self.conf.w_cap(self.w.len() as u32);
            self.w.push(next);
        }
        self.w[k as usize]
    }

    pub fn confidence(&self) -> &ConfidenceConfig {
        &self.conf
    }

    pub fn posterior(&self) -> &PosteriorState {
        &self.posterior
    }

    pub fn active(&self) -> &[ActivePoint] {
        &self.active
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn n_e(&self) -> u64 {
        self.n_e
    }

    /// Radius level of the point behind each evaluation, in order.
    pub fn eval_levels(&self) -> &[u32] {
        &self.eval_levels
    }

    /// Whether the next step will re-check coverage.
    pub fn needs_repair(&self) -> bool {
        self.pending.is_some()
    }

    /// Full covering check at resolution `r_min / 4`.
    pub fn check_covering(&self) -> Coverage {
        covering_check(&self.active, &self.domain, self.r_min / 4.0)
    }

    /// `mu + beta sigma + W(r)` for active point `i`.
    pub fn index(&mut self, i: usize) -> f64 {
        self.index_parts(i).0
    }

    fn index_parts(&mut self, i: usize) -> (f64, f64) {
        let k = self.active[i].k;
        let w = self.w(k);
        let (mu, sd) = self.caches[i].get(&self.posterior);
        (mu + self.beta * sd + w, sd)
    }

    /// Smallest-radius active point, highest posterior mean on ties.
    pub fn recommendation(&mut self) -> Vec<f64> {
        let mut best: Option<(u32, f64, usize)> = None;
        for i in 0..self.active.len() {
            let k = self.active[i].k;
            let mu = self.caches[i].get(&self.posterior).0;
            if best.is_none_or(|(bk, bm, _)| k > bk || (k == bk && mu > bm)) {
                best = Some((k, mu, i));
            }
        }
        match best {
            Some((_, _, i)) => self.active[i].x.clone(),
            None => self.domain.center(),
        }
    }

    fn add(&mut self, x: Vec<f64>) {
        self.caches.push(self.posterior.cached(&x));
        self.active.push(ActivePoint { x, k: 0, radius: self.radius(0), evals: 0 });
    }

    /// Plays one round. Returns `None` once the budget is spent.
    pub fn step<E: Environment + ?Sized>(&mut self, env: &mut E) -> Result<Option<ZoomAction>> {
        if self.n_e as usize >= self.budget {
            return Ok(None);
        }
        self.t += 1;
        if let Some((lo, hi)) = self.pending.take() {
            if let Coverage::Uncovered(w) = check_region(&self.active, &lo, &hi, self.r_min / 4.0) {
                self.add(w.clone());
                // A shrink can open several gaps; keep checking until none remain.
                self.pending = Some((lo, hi));
                return Ok(Some(ZoomAction::Added(w)));
            }
        }
        let mut sel = 0;
        let (mut best, mut best_sd) = self.index_parts(0);
        for i in 1..self.active.len() {
            let (j, sd) = self.index_parts(i);
            if j > best || (j == best && self.active[i].k > self.active[sel].k) {
                sel = i;
                best = j;
                best_sd = sd;
            }
        }
        let k = self.active[sel].k;
        let r = self.active[sel].radius;
        if self.beta * best_sd <= self.w(k) && r >= self.r_min {
            let p = &mut self.active[sel];
            p.k += 1;
            p.radius = self.conf.r_k(p.k);
            // Only the dropped annulus can have lost coverage.
            let lo: Vec<f64> = p.x.iter().zip(self.domain.lower()).map(|(x, l)| (x - r).max(*l)).collect();
            let hi: Vec<f64> = p.x.iter().zip(self.domain.upper()).map(|(x, u)| (x + r).min(*u)).collect();
            self.pending = Some((lo, hi));
            return Ok(Some(ZoomAction::Shrunk(p.x.clone())));
        }
        let x = self.active[sel].x.clone();
        let y = env.query(&x)?;
        let f_x = env.true_value(&x)?;
        match self.posterior.update(&x, y) {
            // A repeated noiseless point adds no information.
            Err(Error::SingularGram { .. }) if self.posterior.noise_var() == 0.0 => {}
            other => other?,
        }
        self.active[sel].evals += 1;
        self.n_e += 1;
        self.eval_levels.push(k);
        let rec = self.recommendation();
        let f_rec = env.true_value(&rec)?;
        self.recorder.record(self.t, &x, y, f_x, f_rec, self.active.len());
        Ok(Some(ZoomAction::Evaluated { x, y }))
    }

    /// Steps until the budget is spent and scores the run.
    pub fn run<E: Environment + ?Sized>(&mut self, env: &mut E) -> Result<RegretTrace> {
        while self.step(env)?.is_some() {}
        Ok(self.finish(env))
    }

    pub fn finish<E: Environment + ?Sized>(&mut self, env: &mut E) -> RegretTrace {
        let best = env.best_value();
        let rec = self.recommendation();
        let recorder = std::mem::replace(&mut self.recorder, TraceRecorder::new(false));
        recorder.finish(best.value, best.exact, rec)
    }
}
