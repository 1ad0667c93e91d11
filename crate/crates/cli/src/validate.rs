//! The `validate` subcommand: invariant suites with pass/fail lines.

use anyhow::Result;
use gpbandit::env::ToyEnv1;
use gpbandit::validation;

/// One checked property.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:<20} {} {}", self.name, if self.pass { "PASS" } else { "FAIL" }, self.detail)
    }
}

/// Runs every suite. `scale` multiplies the Monte-Carlo repetition counts;
/// 1.0 matches the acceptance sizes.
pub fn run_suites(scale: f64, seed: u64) -> Result<Vec<Check>> {
    let count = |n: usize| ((n as f64 * scale).round() as usize).max(1);
    let limit = (-2f64).exp() + 0.03;
    let mut out = Vec::new();

    let err = validation::posterior_vs_dense(count(200), seed)?;
    out.push(Check { name: "posterior-oracle", pass: err <= 1e-8, detail: format!("max_abs_err={err:.2e}") });

    let v = validation::variance_bounds(count(100), seed)?;
    out.push(Check {
        name: "variance-bounds",
        pass: v.repeat_excess <= 1e-10 && v.ball.failures == 0,
        detail: format!("repeat_excess={:.2e} ball={}/{}", v.repeat_excess, v.ball.failures, v.ball.trials),
    });

    let t = validation::tree_validation(count(300), 60, 2.0, seed)?;
    out.push(Check { name: "beta-coverage", pass: t.beta.rate() <= limit, detail: format!("failure={:.4}", t.beta.rate()) });
    out.push(Check {
        name: "tree-lemma",
        pass: t.repeat_violations == 0 && t.gap.rate() <= 2.0 * (-2f64).exp() + 0.03,
        detail: format!("repeat_violations={} gap_failure={:.4}", t.repeat_violations, t.gap.rate()),
    });
    out.push(Check { name: "leaf-bound", pass: t.leaf_ratio <= 1.0, detail: format!("max_ratio={:.3}", t.leaf_ratio) });

    let w = validation::variation_coverage(count(500), 2.0, seed)?;
    out.push(Check {
        name: "variation-coverage",
        pass: w.v_h.rate() <= limit && w.w_cap.rate() <= limit && w.w_ball.rate() <= limit,
        detail: format!("v_h={:.4} w_cap={:.4} w_ball={:.4}", w.v_h.rate(), w.w_cap.rate(), w.w_ball.rate()),
    });

    let z = validation::zoom_validation(count(20), 60, 2.0, seed)?;
    out.push(Check {
        name: "zoom-covering",
        pass: z.uncovered.failures == 0,
        detail: format!("uncovered={}/{}", z.uncovered.failures, z.uncovered.trials),
    });

    let delta = 0.05;
    let id = validation::toy1_identification(count(2000), delta)?;
    out.push(Check {
        name: "toy1-one-shot",
        pass: 1.0 - id.rate() >= 1.0 - 3.0 * delta - 0.03,
        detail: format!("identified={:.4}", 1.0 - id.rate()),
    });
    let rows = validation::toy1_gamma_table(delta, ToyEnv1::default_sigma(delta), &[10, 50, 100, 200])?;
    out.push(Check {
        name: "toy1-gamma-order",
        pass: rows.iter().all(|r| r.closed_form <= r.series + 1e-9 && r.series <= r.computed + 1e-9),
        detail: format!("gamma_200={:.3}", rows[3].computed),
    });

    let toy2 = validation::toy2_validation(count(2000), delta, 12, 0.1)?;
    out.push(Check {
        name: "toy2-oracle",
        pass: toy2.regret.failures == 0 && 1.0 - toy2.events.rate() >= 1.0 - 2.0 * delta - 0.03,
        detail: format!(
            "regret_violations={}/{} max_excess={:.3} events={:.4}",
            toy2.regret.failures,
            toy2.regret.trials,
            toy2.max_excess,
            1.0 - toy2.events.rate()
        ),
    });
    Ok(out)
}

/// Rows of the information-gain report for the first toy process.
pub fn gamma_report(delta: f64, sigma: f64, ns: &[usize]) -> Result<String> {
    let rows = validation::toy1_gamma_table(delta, sigma, ns)?;
    let mut out = format!("{:>6}  {:>14}  {:>14}  {:>14}  {:>10}\n", "n", "closed_form", "series", "computed", "computed/n");
    for r in rows {
        out += &format!(
            "{:>6}  {:>14.6}  {:>14.6}  {:>14.6}  {:>10.5}\n",
            r.n,
            r.closed_form,
            r.series,
            r.computed,
            r.computed / r.n as f64
        );
    }
    Ok(out)
}
