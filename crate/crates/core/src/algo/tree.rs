//! Tree-based GP bandit: optimistic leaf selection over a tree of partitions,
//! refining a leaf once its posterior uncertainty drops below the cell's
//! variation bound.

use std::cmp::Ordering;
use std::sync::Arc;

use crate::confidence::ConfidenceConfig;
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::kernel::Covariance;
use crate::partition::{BoxDomain, Node, Partition};
use crate::posterior::{CachedQuery, PosteriorState};
use crate::trace::{RegretTrace, TraceRecorder};

use super::{confidence_config, BanditConfig};

/// What one round of the tree algorithm did.
#[derive(Debug, Clone, PartialEq)]
pub enum TreeAction {
    /// The leaf was replaced by its children.
    Refined(Node),
    /// The leaf's center was queried.
    Evaluated { x: Vec<f64>, y: f64 },
}

/// Evaluation count of a leaf, recorded when it is expanded or still active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LeafStats {
    pub depth: u32,
    pub evals: u64,
    pub expanded: bool,
}

/// The leaf chosen in a round, with its posterior before the round's action.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub node: Node,
    pub x: Vec<f64>,
    pub mu: f64,
    pub sd: f64,
    pub index: f64,
}

#[derive(Debug, Clone)]
struct Leaf {
    node: Node,
    own: CachedQuery,
    parent: Option<CachedQuery>,
    evals: u64,
}

/// State of one run of the tree algorithm.
#[derive(Debug, Clone)]
pub struct TreeBandit {
    partition: Partition,
    conf: ConfidenceConfig,
    beta: f64,
    h_max: u32,
    v: Vec<f64>,
    leaves: Vec<Leaf>,
    posterior: PosteriorState,
    budget: usize,
    t: u64,
    n_e: u64,
    expansions: u64,
    /// Expanded nodes at the greatest expanded depth, in expansion order.
    deepest: Vec<Node>,
    /// Start of the children of the last refined node, which are the only
    /// candidates until the next evaluation.
    focus: Option<usize>,
    recorder: TraceRecorder,
    closed: Vec<LeafStats>,
    eval_depths: Vec<u32>,
    last: Option<Selection>,
}

impl TreeBandit {
    pub fn new(kernel: Arc<dyn Covariance>, domain: BoxDomain, sigma: f64, cfg: &BanditConfig) -> Result<Self> {
        let posterior = PosteriorState::new(kernel, sigma * sigma)?;
        Self::with_posterior(posterior, domain, sigma, cfg)
    }

    /// Starts a fresh tree on top of existing observations.
    pub fn with_posterior(posterior: PosteriorState, domain: BoxDomain, sigma: f64, cfg: &BanditConfig) -> Result<Self> {
        let conf = confidence_config(posterior.kernel().as_ref(), &domain, sigma, cfg.n_split, cfg)?;
        let partition = Partition::new(domain, cfg.n_split)?;
        let h_max = conf.h_max().min(partition.params().max_depth());
        let beta = conf.beta(cfg.beta_mode);
        let v = (0..=h_max).map(|h| conf.v_h(h)).collect();
        let root = partition.root();
        let own = posterior.cached(&partition.center(&root));
        Ok(TreeBandit {
            partition,
            conf,
            beta,
            h_max,
            v,
            leaves: vec![Leaf { node: root, own, parent: None, evals: 0 }],
            posterior,
            budget: cfg.budget,
            t: 0,
            n_e: 0,
            expansions: 0,
            deepest: Vec::new(),
            focus: None,
            recorder: TraceRecorder::new(cfg.timed),
            closed: Vec::new(),
            eval_depths: Vec::new(),
            last: None,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn h_max(&self) -> u32 {
        self.h_max
    }

    /// `V_h` as used by this run (`h <= h_max`).
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

    pub fn into_posterior(self) -> PosteriorState {
        self.posterior
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn n_e(&self) -> u64 {
        self.n_e
    }

    pub fn expansions(&self) -> u64 {
        self.expansions
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    pub fn leaves(&self) -> impl Iterator<Item = &Node> {
        self.leaves.iter().map(|l| &l.node)
    }

    /// Depth of the leaf behind each evaluation, in order.
    pub fn eval_depths(&self) -> &[u32] {
        &self.eval_depths
    }

    /// Evaluation counts of every expanded node and every current leaf.
    pub fn leaf_stats(&self) -> Vec<LeafStats> {
        let active = self.leaves.iter().map(|l| LeafStats { depth: l.node.depth(), evals: l.evals, expanded: false });
        self.closed.iter().copied().chain(active).collect()
    }

    /// Whether the leaves currently tile the domain.
    pub fn check_tiling(&self) -> bool {
        let nodes: Vec<&Node> = self.leaves().collect();
        self.partition.check_tiling(&nodes)
    }

    /// The leaf selected by the most recent step.
    pub fn last_selection(&self) -> Option<&Selection> {
        self.last.as_ref()
    }

    fn index_of(&mut self, i: usize) -> (f64, f64) {
        let beta = self.beta;
        let leaf = &mut self.leaves[i];
        let h = leaf.node.depth() as usize;
        let (mu, sd) = leaf.own.get(&self.posterior);
        let mut upper = mu + beta * sd;
        if let Some(p) = leaf.parent.as_mut() {
            let (pm, ps) = p.get(&self.posterior);
            upper = upper.min(pm + beta * ps + self.v[h - 1]);
        }
        (upper + self.v[h], sd)
    }

    /// Index `I_t` of every leaf under the current posterior.
    pub fn indices(&mut self) -> Vec<(Node, f64)> {
        (0..self.leaves.len()).map(|i| (self.leaves[i].node.clone(), self.index_of(i).0)).collect()
    }

    fn better(&self, a: &Node, ia: f64, b: &Node, ib: f64) -> bool {
        match ia.partial_cmp(&ib).unwrap_or(Ordering::Equal) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => match a.depth().cmp(&b.depth()) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => self.partition.cmp_index(a, b) == Ordering::Less,
            },
        }
    }

    /// Leaves eligible for the next selection: the children of the node just
    /// refined, or every leaf after an evaluation.
    fn candidates(&self) -> std::ops::Range<usize> {
        match self.focus {
            Some(start) => start..self.leaves.len(),
            None => 0..self.leaves.len(),
        }
    }

    fn select(&mut self) -> (usize, f64) {
        let range = self.candidates();
        let mut best = range.start;
        let (mut best_index, mut best_sd) = self.index_of(best);
        for i in range.start + 1..range.end {
            let (idx, sd) = self.index_of(i);
            if self.better(&self.leaves[i].node, idx, &self.leaves[best].node, best_index) {
                best = i;
                best_index = idx;
                best_sd = sd;
            }
        }
        let leaf = &mut self.leaves[best];
        let (mu, _) = leaf.own.get(&self.posterior);
        self.last = Some(Selection { node: leaf.node.clone(), x: leaf.own.x().to_vec(), mu, sd: best_sd, index: best_index });
        (best, best_sd)
    }

    /// Center of a deepest expanded node: the one with the highest posterior
    /// mean, most recent on ties. The domain center before any expansion.
    pub fn recommendation(&self) -> Vec<f64> {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for node in &self.deepest {
            let c = self.partition.center(node);
            let mu = self.posterior.query(&c).0;
            if best.as_ref().is_none_or(|b| mu >= b.0) {
                best = Some((mu, c));
            }
        }
        best.map_or_else(|| self.partition.domain().center(), |b| b.1)
    }

    /// Expanded nodes at the greatest expanded depth, in expansion order.
    pub fn deepest_expanded(&self) -> &[Node] {
        &self.deepest
    }

    /// Plays one round. Returns `None` once the budget is spent.
    pub fn step<E: Environment + ?Sized>(&mut self, env: &mut E) -> Result<Option<TreeAction>> {
        if self.n_e as usize >= self.budget {
            return Ok(None);
        }
        let (i, sd) = self.select();
        self.t += 1;
        let h = self.leaves[i].node.depth();
        if self.beta * sd <= self.v[h as usize] && h < self.h_max {
            let leaf = self.leaves.swap_remove(i);
            self.closed.push(LeafStats { depth: h, evals: leaf.evals, expanded: true });
            self.focus = Some(self.leaves.len());
            for child in self.partition.children(&leaf.node) {
                let center = self.partition.center(&child);
                let own = if center.as_slice() == leaf.own.x() { leaf.own.clone() } else { self.posterior.cached(&center) };
                self.leaves.push(Leaf { node: child, own, parent: Some(leaf.own.clone()), evals: 0 });
            }
            self.expansions += 1;
            match self.deepest.first().map(Node::depth) {
                Some(d) if d > h => {}
                Some(d) if d == h => self.deepest.push(leaf.node.clone()),
                _ => self.deepest = vec![leaf.node.clone()],
            }
            if cfg!(debug_assertions) && self.leaves.len() <= 256 {
                debug_assert!(self.check_tiling(), "leaves stopped tiling the domain");
            }
            return Ok(Some(TreeAction::Refined(leaf.node)));
        }
        let x = self.leaves[i].own.x().to_vec();
        let y = env.query(&x)?;
        let f_x = env.true_value(&x)?;
        match self.posterior.update(&x, y) {
            // A repeated noiseless point adds no information.
            Err(Error::SingularGram { .. }) if self.posterior.noise_var() == 0.0 => {}
            other => other?,
        }
        self.leaves[i].evals += 1;
        self.n_e += 1;
        self.focus = None;
        self.eval_depths.push(h);
        let f_rec = env.true_value(&self.recommendation())?;
        self.recorder.record(self.t, &x, y, f_x, f_rec, self.leaves.len());
        Ok(Some(TreeAction::Evaluated { x, y }))
    }

    /// Steps until the budget is spent and scores the run.
    pub fn run<E: Environment + ?Sized>(&mut self, env: &mut E) -> Result<RegretTrace> {
        while self.step(env)?.is_some() {}
        Ok(self.finish(env))
    }

    /// Scores the evaluations logged so far against the environment's optimum.
    pub fn finish<E: Environment + ?Sized>(&mut self, env: &mut E) -> RegretTrace {
        let best = env.best_value();
        let recorder = std::mem::replace(&mut self.recorder, TraceRecorder::new(false));
        recorder.finish(best.value, best.exact, self.recommendation())
    }
}

/// One phase of the doubling schedule.
#[derive(Debug, Clone)]
pub struct AnytimePhase {
    pub budget: usize,
    pub beta: f64,
    pub trace: RegretTrace,
    pub recommendation: Vec<f64>,
}

/// Runs `phases` tree runs with budgets `n0, 2 n0, 4 n0, ...`.
///
/// Each phase rebuilds the tree and its constants for its own budget; the
/// posterior keeps every earlier observation.
pub fn run_anytime<E: Environment + ?Sized>(
    kernel: Arc<dyn Covariance>,
    env: &mut E,
    cfg: &BanditConfig,
    n0: usize,
    phases: usize,
) -> Result<Vec<AnytimePhase>> {
    if n0 == 0 {
        return Err(Error::InvalidConfig("initial phase budget must be positive".into()));
    }
    let sigma = env.noise_std();
    let mut posterior = PosteriorState::new(kernel, sigma * sigma)?;
    let mut out = Vec::with_capacity(phases);
    for j in 0..phases {
        let budget = n0
            .checked_mul(1usize.checked_shl(j as u32).unwrap_or(0))
            .filter(|&b| b > 0)
            .ok_or_else(|| Error::InvalidConfig(format!("phase {j} budget overflows")))?;
        let phase_cfg = BanditConfig { budget, ..cfg.clone() };
        let mut bandit = TreeBandit::with_posterior(posterior, env.domain().clone(), sigma, &phase_cfg)?;
        let trace = bandit.run(env)?;
        out.push(AnytimePhase { budget, beta: bandit.beta(), recommendation: bandit.recommendation(), trace });
        posterior = bandit.into_posterior();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{make_grid_gp, ToyEnv1};
    use crate::kernel::{Kernel, MaternNu};

    fn m32() -> Arc<dyn Covariance> {
        Arc::new(Kernel::matern(MaternNu::ThreeHalves, 0.2, 1.0).unwrap())
    }

    fn env(sigma: f64, seed: u64) -> crate::env::GridGpEnv {
        make_grid_gp(m32(), BoxDomain::unit(1), 65, sigma, seed).unwrap()
    }

    fn cfg(n: usize) -> BanditConfig {
        BanditConfig { theory_scale: 0.2, ..BanditConfig::with_budget(n) }
    }

    #[test]
    fn root_index_on_empty_posterior() {
        let mut b = TreeBandit::new(m32(), BoxDomain::unit(1), 0.1, &cfg(30)).unwrap();
        let idx = b.indices();
        assert_eq!(idx.len(), 1);
        assert!((idx[0].1 - (b.beta() * 1.0 + b.v_h(0))).abs() < 1e-12);
    }

    #[test]
    fn first_action_follows_root_condition() {
        for scale in [1e-3, 1.0, 1e3] {
            let c = BanditConfig { theory_scale: scale, ..cfg(10) };
            let mut b = TreeBandit::new(m32(), BoxDomain::unit(1), 0.1, &c).unwrap();
            let refine = b.beta() <= b.v_h(0) && b.h_max() > 0;
            let mut e = env(0.1, 1);
            match b.step(&mut e).unwrap().unwrap() {
                TreeAction::Refined(n) => assert!(refine && n.depth() == 0),
                TreeAction::Evaluated { x, .. } => assert!(!refine && x == vec![0.5]),
            }
        }
    }

    #[test]
    fn parent_term_caps_index() {
        // Heavy sampling at the root center leaves the parent bound well below
        // the children's own prior UCB.
        let mut b = TreeBandit::new(m32(), BoxDomain::unit(1), 0.1, &BanditConfig { theory_scale: 1e-6, ..cfg(60) }).unwrap();
        let mut e = env(0.1, 2);
        for _ in 0..30 {
            let y = e.query(&[0.5]).unwrap();
            b.posterior.update(&[0.5], y).unwrap();
        }
        let root = b.leaves[0].own.clone();
        let kids = b.partition.children(&b.partition.root());
        b.leaves = kids
            .into_iter()
            .map(|n| {
                let own = b.posterior.cached(&b.partition.center(&n));
                Leaf { node: n, own, parent: Some(root.clone()), evals: 0 }
            })
            .collect();
        let left = b.index_of(0).0;
        let (pm, ps) = b.posterior.query(&[0.5]);
        let (m0, s0) = b.posterior.query(&[1.0 / 6.0]);
        let own = m0 + b.beta() * s0;
        let parent = pm + b.beta() * ps + b.v_h(0);
        assert!(parent < own);
        assert!((left - (parent + b.v_h(1))).abs() < 1e-9);
    }

    #[test]
    fn runs_exact_budget_and_tiles() {
        let mut b = TreeBandit::new(m32(), BoxDomain::unit(1), 0.1, &cfg(40)).unwrap();
        let mut e = env(0.1, 3);
        let tr = b.run(&mut e).unwrap();
        assert_eq!(tr.len(), 40);
        assert_eq!(b.n_e(), 40);
        assert!(b.check_tiling());
        assert!(b.t() >= 40);
        let n_split = 3u64;
        assert_eq!(b.leaf_count() as u64, (n_split - 1) * b.expansions() + 1);
        assert!(b.leaves().all(|l| l.depth() <= b.h_max()));
        assert!(tr.rows.iter().all(|r| r.delta >= -1e-12));
    }

    #[test]
    fn one_evaluation_budget() {
        let mut b = TreeBandit::new(m32(), BoxDomain::unit(1), 0.1, &cfg(1)).unwrap();
        let tr = b.run(&mut env(0.1, 4)).unwrap();
        assert_eq!(tr.len(), 1);
    }

    #[test]
    fn deterministic_replay() {
        let run = || {
            let mut b = TreeBandit::new(m32(), BoxDomain::unit(2), 0.1, &cfg(30)).unwrap();
            let mut e = make_grid_gp(m32(), BoxDomain::unit(2), 9, 0.1, 7).unwrap();
            b.run(&mut e).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn noiseless_leaves_evaluated_once() {
        let mut b = TreeBandit::new(m32(), BoxDomain::unit(1), 0.0, &cfg(30)).unwrap();
        b.run(&mut env(0.0, 5)).unwrap();
        let cap = b.h_max();
        for s in b.leaf_stats() {
            if s.depth < cap {
                assert!(s.evals <= 1, "{s:?}");
            }
        }
    }

    #[test]
    fn selection_is_argmax() {
        let mut b = TreeBandit::new(m32(), BoxDomain::unit(1), 0.1, &cfg(25)).unwrap();
        let mut e = env(0.1, 6);
        for _ in 0..60 {
            let idx = b.indices();
            let range = b.candidates();
            let max = idx[range].iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
            let (sel, _) = b.select();
            assert_eq!(b.index_of(sel).0, max);
            if b.step(&mut e).unwrap().is_none() {
                break;
            }
        }
    }

    #[test]
    fn refinements_between_evaluations_are_capped() {
        for dim in [1, 3] {
            let mut b = TreeBandit::new(m32(), BoxDomain::unit(dim), 0.1, &cfg(30)).unwrap();
            let mut e = make_grid_gp(m32(), BoxDomain::unit(dim), 5, 0.1, 2).unwrap();
            let mut run = 0;
            let mut parent: Option<Node> = None;
            while let Some(a) = b.step(&mut e).unwrap() {
                match a {
                    TreeAction::Refined(n) => {
                        run += 1;
                        assert!(run <= b.h_max());
                        // Each refinement after the first descends into the previous one.
                        if let Some(p) = &parent {
                            assert_eq!(b.partition().parent(&n).as_ref(), Some(p));
                        }
                        parent = Some(n);
                    }
                    TreeAction::Evaluated { .. } => {
                        run = 0;
                        parent = None;
                    }
                }
            }
            let cap = 2 * b.h_max() as usize * 30 + 1;
            assert!(b.leaf_count() <= cap, "{} > {cap}", b.leaf_count());
        }
    }

    #[test]
    fn recommendation_is_deepest_expanded() {
        let mut b = TreeBandit::new(m32(), BoxDomain::unit(1), 0.1, &cfg(30)).unwrap();
        assert_eq!(b.recommendation(), vec![0.5]);
        let mut e = env(0.1, 8);
        let mut deepest: Vec<Node> = Vec::new();
        while let Some(a) = b.step(&mut e).unwrap() {
            if let TreeAction::Refined(n) = a {
                if deepest.first().is_none_or(|d| n.depth() > d.depth()) {
                    deepest.clear();
                }
                if deepest.first().is_none_or(|d| n.depth() == d.depth()) {
                    deepest.push(n);
                }
            }
        }
        assert_eq!(b.deepest_expanded(), deepest.as_slice());
        let mu = |n: &Node| b.posterior().query(&b.partition().center(n)).0;
        let top = deepest.iter().map(mu).fold(f64::NEG_INFINITY, f64::max);
        let expect = deepest.iter().rev().find(|n| mu(n) == top).map_or(vec![0.5], |d| b.partition().center(d));
        assert_eq!(b.recommendation(), expect);
    }

    #[test]
    fn toy1_tree_finds_a_peak() {
        let mut e = ToyEnv1::new(0.05, None, 3).unwrap();
        let k: Arc<dyn Covariance> = Arc::new(crate::env::Toy1Kernel::new(0.05, ToyEnv1::I_MAX).unwrap());
        let mut b = TreeBandit::new(k, BoxDomain::unit(1), e.noise_std(), &BanditConfig::with_budget(5)).unwrap();
        let tr = b.run(&mut e).unwrap();
        assert_eq!(tr.len(), 5);
    }

    #[test]
    fn anytime_phases_double() {
        let mut e = env(0.1, 9);
        let phases = run_anytime(m32(), &mut e, &cfg(1), 4, 3).unwrap();
        let budgets: Vec<usize> = phases.iter().map(|p| p.budget).collect();
        assert_eq!(budgets, vec![4, 8, 16]);
        assert_eq!(phases.iter().map(|p| p.trace.len()).sum::<usize>(), 28);
        assert!(phases.windows(2).all(|w| w[1].beta > w[0].beta));
    }
}
