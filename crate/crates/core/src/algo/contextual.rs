//! Contextual tree bandit over `contexts x actions` with a binary tree of
//! partitions: each context is served by the leaves whose cells meet it.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::sync::Arc;

use crate::confidence::ConfidenceConfig;
use crate::env::ContextualEnvironment;
use crate::error::{Error, Result};
use crate::kernel::Covariance;
use crate::partition::{Node, Partition};
use crate::posterior::PosteriorState;
use crate::trace::{RegretTrace, TraceRecorder};

use super::{confidence_config, BanditConfig};

/// One served context.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextualRound {
    pub context: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    /// `sup_a f(context, a) - f(context, action)`.
    pub delta_c: f64,
    /// Depth of the evaluated leaf.
    pub depth: u32,
    /// Refinements made while serving this context.
    pub refinements: u32,
}

/// A finished contextual run.
///
/// Trace rows hold `x = (context, action)`; `delta` is the contextual
/// regret, `best_value` is 0 and `simple_regret` repeats `delta`.
#[derive(Debug, Clone)]
pub struct ContextualRun {
    pub trace: RegretTrace,
    pub rounds: Vec<ContextualRound>,
}

/// State of one run of the contextual tree algorithm.
#[derive(Debug, Clone)]
pub struct ContextualBandit {
    partition: Partition,
    conf: ConfidenceConfig,
    dc: usize,
    beta: f64,
    h_max: u32,
    v: Vec<f64>,
    g: Vec<f64>,
    leaves: Vec<Node>,
    xbar: HashMap<Node, Vec<f64>>,
    posterior: PosteriorState,
    budget: usize,
    t: u64,
    tau: u64,
    recorder: TraceRecorder,
    rounds: Vec<ContextualRound>,
}

/// Deepest level at which every action-axis cell center stays on the grid
/// `j / (res - 1)`.
fn grid_depth_cap(partition: &Partition, dc: usize, res: usize) -> u32 {
    if res < 2 {
        return 0;
    }
    // Centers (2c + 1) / 2^(s+1) hit the grid iff 2^(s+1) divides res - 1.
    let max_splits = ((res - 1).trailing_zeros()).saturating_sub(1);
    let dim = partition.params().dim;
    let mut h = 0;
    while h < partition.params().max_depth()
        && (dc..dim).all(|a| partition.params().splits(h + 1, a) <= max_splits)
    {
        h += 1;
    }
    h
}

impl ContextualBandit {
    /// `kernel` acts on joint points `(context, action)`, context axes first.
    pub fn new<E: ContextualEnvironment + ?Sized>(kernel: Arc<dyn Covariance>, env: &E, cfg: &BanditConfig) -> Result<Self> {
        let sigma = env.noise_std();
        let dc = env.context_domain().dim();
        let domain = env.context_domain().product(env.action_domain());
        let conf = confidence_config(kernel.as_ref(), &domain, sigma, 2, cfg)?;
        let partition = Partition::new(domain, 2)?;
        let mut h_max = conf.h_max().min(partition.params().max_depth());
        if let Some(res) = env.action_grid_res() {
            h_max = h_max.min(grid_depth_cap(&partition, dc, res));
        }
        let beta = conf.beta(cfg.beta_mode);
        let v = (0..=h_max).map(|h| conf.v_h(h)).collect();
        let g = (0..=h_max).map(|h| conf.g_cell(h)).collect();
        Ok(ContextualBandit {
            leaves: vec![partition.root()],
            partition,
            conf,
            dc,
            beta,
            h_max,
            v,
            g,
            xbar: HashMap::new(),
            posterior: PosteriorState::new(kernel, sigma * sigma)?,
            budget: cfg.budget,
            t: 0,
            tau: 0,
            recorder: TraceRecorder::new(cfg.timed),
            rounds: Vec::new(),
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn h_max(&self) -> u32 {
        self.h_max
    }

    pub fn v_h(&self, h: u32) -> f64 {
        self.v[h as usize]
    }

    pub fn confidence(&self) -> &ConfidenceConfig {
        &self.conf
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn posterior(&self) -> &PosteriorState {
        &self.posterior
    }

    pub fn leaves(&self) -> &[Node] {
        &self.leaves
    }

    /// Inner rounds (refinements plus evaluations).
    pub fn t(&self) -> u64 {
        self.t
    }

    /// Contexts served.
    pub fn tau(&self) -> u64 {
        self.tau
    }

    pub fn rounds(&self) -> &[ContextualRound] {
        &self.rounds
    }

    /// Expansion-time candidate point of an expanded node.
    pub fn xbar(&self, node: &Node) -> Option<&[f64]> {
        self.xbar.get(node).map(Vec::as_slice)
    }

    fn check_context(&self, context: &[f64]) -> Result<Vec<f64>> {
        if context.len() != self.dc {
            return Err(Error::DimensionMismatch { expected: self.dc, got: context.len() });
        }
        let dom = self.partition.domain();
        let joint: Vec<f64> = context.iter().copied().chain(dom.center()[self.dc..].iter().copied()).collect();
        if !dom.contains(&joint) {
            return Err(Error::OutOfDomain(context.to_vec()));
        }
        Ok(dom.normalize(&joint)[..self.dc].to_vec())
    }

    /// Leaves whose cell meets `context`, with their representative points
    /// `(context, action part of the cell center)`.
    pub fn relevant_leaves(&self, context: &[f64]) -> Result<Vec<(Node, Vec<f64>)>> {
        let u = self.check_context(context)?;
        Ok(self
            .leaves
            .iter()
            .filter(|n| (0..self.dc).all(|a| self.partition.axis_contains(n, a, u[a])))
            .map(|n| {
                let mut x = self.partition.center(n);
                x[..self.dc].copy_from_slice(context);
                (n.clone(), x)
            })
            .collect())
    }

    fn ucb(&self, x: &[f64]) -> (f64, f64) {
        let (mu, sd) = self.posterior.query(x);
        (mu + self.beta * sd, sd)
    }

    /// Contextual index of `node` at representative point `x`.
    pub fn index(&self, node: &Node, x: &[f64]) -> Result<f64> {
        Ok(self.index_parts(node, x)?.0)
    }

    fn index_parts(&self, node: &Node, x: &[f64]) -> Result<(f64, f64)> {
        let h = node.depth() as usize;
        let (mut upper, sd) = self.ucb(x);
        if let Some(parent) = self.partition.parent(node) {
            let xb = self
                .xbar
                .get(&parent)
                .ok_or_else(|| Error::Invariant(format!("no candidate point recorded for {parent:?}")))?;
            upper = upper.min(self.ucb(xb).0 + self.v[h - 1]);
        }
        Ok((upper + self.v[h], sd))
    }

    /// Whether every recorded candidate still satisfies
    /// `beta sigma(xbar) <= V_h + beta g(v1 rho^h)`.
    pub fn check_xbar(&self) -> bool {
        self.xbar.iter().all(|(node, x)| {
            let h = node.depth() as usize;
            self.beta * self.posterior.query(x).1 <= (self.v[h] + self.beta * self.g[h]) * (1.0 + 1e-9)
        })
    }

    /// Serves one context: refines until a leaf is worth playing, then plays it.
    pub fn serve_context<E: ContextualEnvironment + ?Sized>(&mut self, env: &mut E, context: &[f64]) -> Result<ContextualRound> {
        let mut refinements = 0u32;
        for iter in 0usize.. {
            // Each refinement adds a leaf, so this bound is never reached.
            if iter > (self.h_max as usize + 1) * self.leaves.len() {
                return Err(Error::Invariant(format!("inner loop exceeded {iter} iterations")));
            }
            let mut best: Option<(Node, Vec<f64>, f64, f64)> = None;
            for (node, x) in self.relevant_leaves(context)? {
                let (idx, sd) = self.index_parts(&node, &x)?;
                let wins = match &best {
                    None => true,
                    Some((bn, _, bi, _)) => match idx.partial_cmp(bi).unwrap_or(Ordering::Equal) {
                        Ordering::Greater => true,
                        Ordering::Less => false,
                        Ordering::Equal => match node.depth().cmp(&bn.depth()) {
                            Ordering::Greater => true,
                            Ordering::Less => false,
                            Ordering::Equal => self.partition.cmp_index(&node, bn) == Ordering::Less,
                        },
                    },
                };
                if wins {
                    best = Some((node, x, idx, sd));
                }
            }
            let (node, x, _, sd) = best.ok_or_else(|| Error::Invariant("no relevant leaf".into()))?;
            self.t += 1;
            let h = node.depth();
            if self.beta * sd <= self.v[h as usize] + self.beta * self.g[h as usize] && h < self.h_max {
                let pos = self.leaves.iter().position(|l| *l == node).expect("selected leaf is active");
                self.leaves.swap_remove(pos);
                self.leaves.extend(self.partition.children(&node));
                self.xbar.insert(node, x);
                refinements += 1;
                continue;
            }
            let action = x[self.dc..].to_vec();
            let reward = env.query(context, &action)?;
            let f = env.true_value(context, &action)?;
            let best_c = env.best_action_value(context)?;
            match self.posterior.update(&x, reward) {
                // A repeated noiseless point adds no information.
                Err(Error::SingularGram { .. }) if self.posterior.noise_var() == 0.0 => {}
                other => other?,
            }
            self.tau += 1;
            let delta_c = best_c - f;
            self.recorder.record(self.tau, &x, reward, -delta_c, -delta_c, self.leaves.len());
            if cfg!(debug_assertions) && self.xbar.len() <= 64 {
                debug_assert!(self.check_xbar(), "candidate uncertainty grew");
            }
            let round = ContextualRound { context: context.to_vec(), action, reward, delta_c, depth: h, refinements };
            self.rounds.push(round.clone());
            return Ok(round);
        }
        unreachable!()
    }

    /// Serves the configured number of contexts drawn from `env`.
    pub fn run<E: ContextualEnvironment + ?Sized>(&mut self, env: &mut E) -> Result<ContextualRun> {
        while (self.tau as usize) < self.budget {
            let c = env.next_context();
            self.serve_context(env, &c)?;
        }
        let recorder = std::mem::replace(&mut self.recorder, TraceRecorder::new(false));
        let rec = self.rounds.last().map(|r| r.action.clone()).unwrap_or_default();
        Ok(ContextualRun { trace: recorder.finish(0.0, false, rec), rounds: self.rounds.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{make_contextual_env, Composition, ContextualGpEnv};
    use crate::kernel::{Kernel, MaternNu};

    fn env(seed: u64) -> ContextualGpEnv {
        make_contextual_env(
            Kernel::squared_exponential(0.3, 1.0).unwrap(),
            Kernel::matern(MaternNu::FiveHalves, 0.2, 1.0).unwrap(),
            Composition::Product,
            (1, 1),
            0.1,
            seed,
            9,
            65,
        )
        .unwrap()
    }

    fn cfg(n: usize) -> BanditConfig {
        BanditConfig { theory_scale: 0.2, ..BanditConfig::with_budget(n) }
    }

    #[test]
    fn root_relevance_and_index() {
        let e = env(1);
        let b = ContextualBandit::new(e.kernel(), &e, &cfg(10)).unwrap();
        let rel = b.relevant_leaves(&[0.25]).unwrap();
        assert_eq!(rel.len(), 1);
        assert_eq!(rel[0].1, vec![0.25, 0.5]);
        let idx = b.index(&rel[0].0, &rel[0].1).unwrap();
        assert!((idx - (b.beta() + b.v_h(0))).abs() < 1e-12);
        assert!(b.relevant_leaves(&[1.5]).is_err());
    }

    #[test]
    fn split_axes_and_relevance() {
        let e = env(1);
        let mut b = ContextualBandit::new(e.kernel(), &e, &cfg(10)).unwrap();
        let root = b.partition.root();
        b.leaves = b.partition.children(&root);
        // Depth 0 splits the context axis: one child is relevant.
        assert_eq!(b.relevant_leaves(&[0.25]).unwrap().len(), 1);
        let left = b.leaves[0].clone();
        b.leaves.remove(0);
        b.leaves.extend(b.partition.children(&left));
        // Depth 1 splits the action axis: both grandchildren are relevant.
        let rel = b.relevant_leaves(&[0.25]).unwrap();
        assert_eq!(rel.len(), 2);
        let mut acts: Vec<f64> = rel.iter().map(|r| r.1[1]).collect();
        acts.sort_by(f64::total_cmp);
        assert_eq!(acts, vec![0.25, 0.75]);
    }

    #[test]
    fn one_evaluation_per_context() {
        let mut e = env(2);
        let mut b = ContextualBandit::new(e.kernel(), &e, &cfg(40)).unwrap();
        let run = b.run(&mut e).unwrap();
        assert_eq!(run.rounds.len(), 40);
        assert_eq!(run.trace.len(), 40);
        assert_eq!(b.posterior().len(), 40);
        assert!(run.rounds.iter().all(|r| r.delta_c >= 0.0));
        assert!(b.check_xbar());
        for (row, r) in run.trace.rows.iter().zip(&run.rounds) {
            assert!((row.delta - r.delta_c).abs() < 1e-12);
        }
        assert!(run.rounds[0].refinements as u64 + 1 >= 1);
    }

    #[test]
    fn relevant_cells_cover_actions() {
        let mut e = env(3);
        let mut b = ContextualBandit::new(e.kernel(), &e, &cfg(30)).unwrap();
        b.run(&mut e).unwrap();
        for c in [0.0, 0.3, 0.5, 1.0] {
            let rel = b.relevant_leaves(&[c]).unwrap();
            let mut spans: Vec<(f64, f64)> = rel
                .iter()
                .map(|(n, _)| {
                    let (lo, hi) = b.partition().unit_cell(n);
                    (lo[1], hi[1])
                })
                .collect();
            spans.sort_by(|a, b| a.0.total_cmp(&b.0));
            assert_eq!(spans[0].0, 0.0);
            assert!(spans.windows(2).all(|w| w[0].1 == w[1].0));
            assert_eq!(spans.last().unwrap().1, 1.0);
        }
    }

    #[test]
    fn actions_stay_on_grid() {
        let mut e = env(4);
        let mut b = ContextualBandit::new(e.kernel(), &e, &BanditConfig { theory_scale: 1e-3, ..cfg(30) }).unwrap();
        b.run(&mut e).unwrap();
        assert!(b.leaves().iter().all(|l| l.depth() <= b.h_max()));
        assert_eq!(grid_depth_cap(b.partition(), 1, 65), 11);
    }

    #[test]
    fn deterministic_replay() {
        let run = || {
            let mut e = env(5);
            let mut b = ContextualBandit::new(e.kernel(), &e, &cfg(20)).unwrap();
            b.run(&mut e).unwrap().trace
        };
        assert_eq!(run(), run());
    }
}
