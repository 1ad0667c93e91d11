//! Side-by-side tables of several experiments.

use std::fmt::Write as _;

use anyhow::{bail, Result};
use gpbandit::RegretTrace;

use crate::config::ExperimentConfig;
use crate::plot;
use crate::runner::load_traces;
use crate::summary::{median_curve, spread};

/// Checkpoint table and optional SVG over the common budget prefix.
#[derive(Debug)]
pub struct Comparison {
    pub table: String,
    pub svg: Option<String>,
    /// Common prefix length every trace was truncated to.
    pub budget: usize,
}

fn truncate(traces: &mut [RegretTrace], n: usize) {
    for t in traces {
        t.rows.truncate(n);
    }
}

pub fn compare(configs: &[ExperimentConfig], plot_svg: bool) -> Result<Comparison> {
    if configs.is_empty() {
        bail!("compare needs at least one config");
    }
    let mut runs: Vec<(String, Vec<RegretTrace>)> = Vec::new();
    for cfg in configs {
        let mut label = cfg.algorithm.name().to_string();
        if runs.iter().any(|(l, _)| *l == label) {
            label = format!("{label}#{}", runs.len() + 1);
        }
        runs.push((label, load_traces(cfg)?));
    }
    let lens: Vec<usize> = runs.iter().flat_map(|(_, ts)| ts.iter().map(RegretTrace::len)).collect();
    let n = lens.iter().copied().min().unwrap_or(0);
    if lens.iter().any(|&l| l != n) {
        log::warn!("trace lengths differ; aligning to the common prefix of {n} evaluations");
        for (_, ts) in &mut runs {
            truncate(ts, n);
        }
    }
    let mut checkpoints: Vec<usize> = configs.iter().flat_map(|c| c.checkpoint_list()).filter(|&c| c <= n).collect();
    checkpoints.sort_unstable();
    checkpoints.dedup();
    let mut table = String::new();
    write!(table, "{:>8}", "n").unwrap();
    for (label, _) in &runs {
        write!(table, "  {:>14}  {:>14}", format!("{label} R_n"), format!("{label} S_n")).unwrap();
    }
    table.push('\n');
    for &c in &checkpoints {
        write!(table, "{c:>8}").unwrap();
        for (_, ts) in &runs {
            let r = spread(&ts.iter().map(|t| t.cumulative_at(c)).collect::<Vec<_>>()).median;
            let s = spread(&ts.iter().map(|t| t.simple_at(c)).collect::<Vec<_>>()).median;
            write!(table, "  {r:>14.5}  {s:>14.5}").unwrap();
        }
        table.push('\n');
    }
    let svg = plot_svg.then(|| {
        let series: Vec<(String, Vec<f64>)> =
            runs.iter().map(|(l, ts)| (l.clone(), median_curve(ts, n, |t, k| t.cumulative_at(k)))).collect();
        plot::line_plot("Median cumulative regret", "R_n", &series)
    });
    Ok(Comparison { table, svg, budget: n })
}
