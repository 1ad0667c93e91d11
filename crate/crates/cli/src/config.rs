//! Experiment configuration files.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gpbandit::env::Composition;
use gpbandit::{BanditConfig, BetaMode, Kernel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Tree,
    Zoom,
    Contextual,
    GpUcb,
    Random,
    Toy2Oracle,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Tree => "tree",
            Algorithm::Zoom => "zoom",
            Algorithm::Contextual => "contextual",
            Algorithm::GpUcb => "gp_ucb",
            Algorithm::Random => "random",
            Algorithm::Toy2Oracle => "toy2_oracle",
        }
    }
}

fn default_grid_res() -> usize {
    129
}

fn default_delta() -> f64 {
    0.05
}

fn default_context_res() -> usize {
    33
}

fn default_action_res() -> usize {
    65
}

/// The objective an experiment runs against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvSpec {
    /// A GP sample path on a box, revealed on a reference grid up front.
    GridGp {
        kernel: Kernel,
        lower: Vec<f64>,
        upper: Vec<f64>,
        sigma: f64,
        #[serde(default = "default_grid_res")]
        grid_res: usize,
    },
    /// First toy process; `sigma` defaults to the identification noise level.
    Toy1 {
        #[serde(default = "default_delta")]
        delta: f64,
        sigma: Option<f64>,
    },
    /// Second toy process, with noise tuned to the budget.
    Toy2 {
        #[serde(default = "default_delta")]
        delta: f64,
    },
    /// Reward over unit context and action cubes.
    Contextual {
        context_kernel: Kernel,
        action_kernel: Kernel,
        composition: Composition,
        context_dim: usize,
        action_dim: usize,
        sigma: f64,
        #[serde(default = "default_context_res")]
        context_res: usize,
        #[serde(default = "default_action_res")]
        action_res: usize,
    },
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_u() -> f64 {
    2.0
}

fn default_scale() -> f64 {
    1.0
}

fn default_n_split() -> u32 {
    3
}

fn default_ucb_res() -> usize {
    65
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub budget: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_u")]
    pub u: f64,
    #[serde(default = "default_scale")]
    pub theory_scale: f64,
    #[serde(default)]
    pub beta_mode: BetaMode,
    #[serde(default = "default_n_split")]
    pub n_split: u32,
    /// Points per axis of the GP-UCB grid.
    #[serde(default = "default_ucb_res")]
    pub gp_ucb_grid_res: usize,
    /// Budgets at which the summary reports medians; defaults to n/4, n/2, n.
    #[serde(default)]
    pub checkpoints: Vec<usize>,
    /// Record per-row wall time. Makes traces non-reproducible.
    #[serde(default)]
    pub timed: bool,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    pub environment: EnvSpec,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg = Self::parse(&text).with_context(|| format!("in config {}", path.display()))?;
        if cfg.output.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.output = dir.join(&cfg.output);
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn bandit(&self) -> BanditConfig {
        BanditConfig {
            budget: self.budget,
            u: self.u,
            theory_scale: self.theory_scale,
            beta_mode: self.beta_mode,
            n_split: self.n_split,
            timed: self.timed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.bandit().validate()?;
        if self.seeds.is_empty() {
            bail!("seeds: at least one seed is required");
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            bail!("seeds: duplicate seed");
        }
        if self.checkpoints.iter().any(|&c| c == 0 || c > self.budget) {
            bail!("checkpoints: every checkpoint must lie in 1..=budget");
        }
        let compatible = matches!(
            (self.algorithm, &self.environment),
            (Algorithm::Contextual, EnvSpec::Contextual { .. })
                | (Algorithm::Toy2Oracle, EnvSpec::Toy2 { .. })
                | (
                    Algorithm::Tree | Algorithm::Zoom | Algorithm::GpUcb | Algorithm::Random,
                    EnvSpec::GridGp { .. } | EnvSpec::Toy1 { .. }
                )
        );
        if !compatible {
            bail!("algorithm: `{}` cannot run on this environment type", self.algorithm.name());
        }
        match &self.environment {
            EnvSpec::GridGp { kernel, lower, upper, sigma, .. } => {
                kernel.validate().context("environment.kernel")?;
                gpbandit::BoxDomain::new(lower.clone(), upper.clone()).context("environment.lower/upper")?;
                check_sigma(*sigma)?;
            }
            EnvSpec::Toy1 { sigma, .. } => {
                if let Some(s) = sigma {
                    check_sigma(*s)?;
                }
            }
            EnvSpec::Toy2 { .. } => {}
            EnvSpec::Contextual { context_kernel, action_kernel, sigma, .. } => {
                context_kernel.validate().context("environment.context_kernel")?;
                action_kernel.validate().context("environment.action_kernel")?;
                check_sigma(*sigma)?;
            }
        }
        Ok(())
    }

    /// Budgets reported in summaries.
    pub fn checkpoint_list(&self) -> Vec<usize> {
        if !self.checkpoints.is_empty() {
            return self.checkpoints.clone();
        }
        let mut c = vec![(self.budget / 4).max(1), (self.budget / 2).max(1), self.budget];
        c.dedup();
        c
    }

    /// SHA-256 of the canonical serialization, ignoring the output path.
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.output = PathBuf::new();
        let text = toml::to_string(&canon).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))[..16].to_string()
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        bail!("environment.sigma: must be finite and >= 0, got {sigma}");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub const SAMPLE: &str = r#"
algorithm = "tree"
budget = 40
seeds = [1, 2]

[environment]
type = "grid_gp"
lower = [0.0]
upper = [1.0]
sigma = 0.1
grid_res = 33

[environment.kernel]
family = "matern"
nu = "three_halves"
lengthscale = 0.2
variance = 1.0
"#;

    #[test]
    fn round_trip() {
        let cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        let again = ExperimentConfig::parse(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.hash(), again.hash());
        assert_eq!(cfg.checkpoint_list(), vec![10, 20, 40]);
    }

    #[test]
    fn hash_ignores_output_only() {
        let a = ExperimentConfig::parse(SAMPLE).unwrap();
        let mut b = a.clone();
        b.output = PathBuf::from("elsewhere");
        assert_eq!(a.hash(), b.hash());
        b.u = 3.0;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn errors_name_the_key() {
        let bad = SAMPLE.replace("budget = 40", "budget = 40\nbogus = 1");
        assert!(format!("{:#}", ExperimentConfig::parse(&bad).unwrap_err()).contains("bogus"));
        let bad = SAMPLE.replace("sigma = 0.1", "sigma = -1.0");
        assert!(format!("{:#}", ExperimentConfig::parse(&bad).unwrap_err()).contains("sigma"));
        let bad = SAMPLE.replace("\"tree\"", "\"contextual\"");
        assert!(format!("{:#}", ExperimentConfig::parse(&bad).unwrap_err()).contains("algorithm"));
        let bad = SAMPLE.replace("seeds = [1, 2]", "seeds = [1, 1]");
        assert!(format!("{:#}", ExperimentConfig::parse(&bad).unwrap_err()).contains("seeds"));
    }
}
