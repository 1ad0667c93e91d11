//! Aggregate statistics over seeds.

use std::fmt::Write as _;

use gpbandit::RegretTrace;

/// Median and interquartile range, by linear interpolation between order
/// statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spread {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn spread(values: &[f64]) -> Spread {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Spread { median: quantile(&v, 0.5), q1: quantile(&v, 0.25), q3: quantile(&v, 0.75) }
}

/// Least-squares slope of `ln y` against `ln x` over points with `y > 0`;
/// `NaN` with fewer than two such points.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        f64::NAN
    } else {
        sxy / sxx
    }
}

/// Median over seeds of a per-trace statistic at each budget `1..=n`.
pub fn median_curve(traces: &[RegretTrace], n: usize, f: impl Fn(&RegretTrace, usize) -> f64) -> Vec<f64> {
    (1..=n).map(|k| spread(&traces.iter().map(|t| f(t, k)).collect::<Vec<_>>()).median).collect()
}

/// Per-checkpoint spreads of `R_n` and `S_n`, plus the slope of the median
/// `S_n` curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub label: String,
    pub seeds: usize,
    pub checkpoints: Vec<(usize, Spread, Spread)>,
    pub simple_slope: f64,
    pub max_active: u64,
}

impl Summary {
    pub fn new(label: &str, traces: &[RegretTrace], checkpoints: &[usize]) -> Summary {
        let n = traces.iter().map(RegretTrace::len).min().unwrap_or(0);
        let rows = checkpoints
            .iter()
            .filter(|&&c| c <= n)
            .map(|&c| {
                let r: Vec<f64> = traces.iter().map(|t| t.cumulative_at(c)).collect();
                let s: Vec<f64> = traces.iter().map(|t| t.simple_at(c)).collect();
                (c, spread(&r), spread(&s))
            })
            .collect();
        let curve = median_curve(traces, n, |t, k| t.simple_at(k));
        let pts: Vec<(f64, f64)> = curve.iter().enumerate().map(|(i, s)| ((i + 1) as f64, *s)).collect();
        Summary {
            label: label.to_string(),
            seeds: traces.len(),
            checkpoints: rows,
            simple_slope: log_log_slope(&pts),
            max_active: traces.iter().flat_map(|t| t.rows.iter().map(|r| r.active_count)).max().unwrap_or(0),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,n,seeds,r_median,r_q1,r_q3,s_median,s_q1,s_q3,s_slope,max_active\n");
        for (n, r, s) in &self.checkpoints {
            writeln!(
                out,
                "{},{n},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                self.label, self.seeds, r.median, r.q1, r.q3, s.median, s.q1, s.q3, self.simple_slope, self.max_active
            )
            .unwrap();
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = format!("{} ({} seeds)\n", self.label, self.seeds);
        writeln!(out, "{:>8}  {:>12}  {:>23}  {:>12}  {:>23}", "n", "median R_n", "IQR R_n", "median S_n", "IQR S_n").unwrap();
        for (n, r, s) in &self.checkpoints {
            writeln!(
                out,
                "{n:>8}  {:>12.5}  [{:>10.5}, {:>10.5}]  {:>12.5}  [{:>10.5}, {:>10.5}]",
                r.median, r.q1, r.q3, s.median, s.q1, s.q3
            )
            .unwrap();
        }
        writeln!(out, "log-log slope of median S_n: {:.4}", self.simple_slope).unwrap();
        writeln!(out, "max leaves/active points: {}", self.max_active).unwrap();
        out
    }
}
