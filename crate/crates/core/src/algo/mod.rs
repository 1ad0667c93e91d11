//! Adaptive bandit drivers over a GP prior.

mod contextual;
mod tree;
mod zoom;

pub use contextual::{ContextualBandit, ContextualRound, ContextualRun};
pub use tree::{run_anytime, AnytimePhase, LeafStats, Selection, TreeAction, TreeBandit};
pub use zoom::{covering_check, ActivePoint, Coverage, ZoomAction, ZoomBandit};

use serde::{Deserialize, Serialize};

use crate::confidence::{BetaMode, ConfidenceConfig};
use crate::error::{Error, Result};
use crate::kernel::Covariance;
use crate::partition::{BoxDomain, PartitionParams};

/// Settings shared by the bandit drivers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BanditConfig {
    /// Evaluation budget `n` (contexts served, for the contextual driver).
    pub budget: usize,
    /// Failure exponent of the confidence bounds.
    pub u: f64,
    /// Multiplier on `V_h` and `W(r)`; 1 for the theoretical values.
    pub theory_scale: f64,
    pub beta_mode: BetaMode,
    /// Children per node for the tree driver.
    pub n_split: u32,
    /// Record wall time in trace rows.
    pub timed: bool,
}

impl Default for BanditConfig {
    fn default() -> Self {
        BanditConfig { budget: 100, u: 2.0, theory_scale: 1.0, beta_mode: BetaMode::Tight, n_split: 3, timed: false }
    }
}

impl BanditConfig {
    pub fn with_budget(budget: usize) -> Self {
        BanditConfig { budget, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::InvalidConfig("budget must be positive".into()));
        }
        if !(self.u >= 0.0 && self.u.is_finite()) {
            return Err(Error::InvalidConfig(format!("u must be finite and >= 0, got {}", self.u)));
        }
        if !(self.theory_scale > 0.0 && self.theory_scale.is_finite()) {
            return Err(Error::InvalidConfig(format!("theory_scale must be positive, got {}", self.theory_scale)));
        }
        if self.n_split < 2 {
            return Err(Error::InvalidConfig(format!("n_split must be >= 2, got {}", self.n_split)));
        }
        Ok(())
    }
}

pub(crate) fn confidence_config(
    kernel: &dyn Covariance,
    domain: &BoxDomain,
    sigma: f64,
    n_split: u32,
    cfg: &BanditConfig,
) -> Result<ConfidenceConfig> {
    cfg.validate()?;
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!("noise std must be finite and >= 0, got {sigma}")));
    }
    let dim = domain.dim();
    Ok(ConfidenceConfig {
        u: cfg.u,
        n: cfg.budget,
        sigma,
        d1: dim as f64,
        envelope: kernel.envelope(dim),
        params: PartitionParams::new(n_split, dim)?,
        side: domain.max_side(),
        theory_scale: cfg.theory_scale,
    })
}
