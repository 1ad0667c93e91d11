//! Per-round regret logs.

use serde::{Deserialize, Serialize};

/// One logged evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    /// Algorithm round at which the evaluation happened (refinements count as rounds).
    pub t: u64,
    /// Number of evaluations so far, including this one.
    pub n_e: u64,
    pub x: Vec<f64>,
    pub y: f64,
    /// `f(x*) - f(x)`.
    pub delta: f64,
    pub cumulative_regret: f64,
    /// `f(x*) - f(recommendation)` after this evaluation.
    pub simple_regret: f64,
    /// Leaves or active points at the time of the evaluation.
    pub active_count: u64,
    /// Wall time since the start of the run; zero unless timing was requested.
    pub wall_ns: u64,
}

/// A full run log plus the reference optimum it was scored against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    pub rows: Vec<TraceRow>,
    pub best_value: f64,
    /// Whether `best_value` is the exact optimum or a grid/search approximation.
    pub best_exact: bool,
    pub recommendation: Vec<f64>,
}

impl RegretTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Cumulative regret after `n` evaluations (clamped to the trace length).
    pub fn cumulative_at(&self, n: usize) -> f64 {
        match n.min(self.rows.len()) {
            0 => 0.0,
            m => self.rows[m - 1].cumulative_regret,
        }
    }

    /// Simple regret after `n` evaluations (clamped to the trace length).
    pub fn simple_at(&self, n: usize) -> f64 {
        match n.min(self.rows.len()) {
            0 => f64::NAN,
            m => self.rows[m - 1].simple_regret,
        }
    }
}

#[derive(Debug, Clone)]
struct Pending {
    t: u64,
    x: Vec<f64>,
    y: f64,
    f_x: f64,
    f_rec: f64,
    active_count: u64,
    wall_ns: u64,
}

/// Collects raw evaluations and scores them once the optimum is final.
///
/// Grid-approximate optima can only grow as the environment reveals more of
/// the function, so regrets are computed at the end against the final value.
#[derive(Debug, Clone)]
pub struct TraceRecorder {
    pending: Vec<Pending>,
    start: Option<std::time::Instant>,
}

impl TraceRecorder {
    /// With `timed`, rows carry elapsed wall time; otherwise `wall_ns` is 0
    /// so traces are byte-reproducible.
    pub fn new(timed: bool) -> Self {
        TraceRecorder { pending: Vec::new(), start: timed.then(std::time::Instant::now) }
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    /// Logs an evaluation at `x` with observation `y`, true value `f_x` and
    /// true value `f_rec` of the current recommendation.
    pub fn record(&mut self, t: u64, x: &[f64], y: f64, f_x: f64, f_rec: f64, active_count: usize) {
        let wall_ns = self.start.map_or(0, |s| s.elapsed().as_nanos() as u64);
        self.pending.push(Pending { t, x: x.to_vec(), y, f_x, f_rec, active_count: active_count as u64, wall_ns });
    }

    pub fn finish(self, best_value: f64, best_exact: bool, recommendation: Vec<f64>) -> RegretTrace {
        let mut cumulative = 0.0;
        let rows = self
            .pending
            .into_iter()
            .enumerate()
            .map(|(i, p)| {
                let delta = best_value - p.f_x;
                cumulative += delta;
                TraceRow {
                    t: p.t,
                    n_e: i as u64 + 1,
                    x: p.x,
                    y: p.y,
                    delta,
                    cumulative_regret: cumulative,
                    simple_regret: best_value - p.f_rec,
                    active_count: p.active_count,
                    wall_ns: p.wall_ns,
                }
            })
            .collect();
        RegretTrace { rows, best_value, best_exact, recommendation }
    }
}
