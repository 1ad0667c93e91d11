//! Adaptive Gaussian-process bandits.
//!
//! The crate provides an exact GP posterior engine, a tree of partitions over
//! boxes, chaining-based confidence bounds, three adaptive bandit algorithms
//! (tree-based, zooming and contextual), baselines, and synthetic
//! environments with known optima for measuring regret.

pub mod algo;
pub mod baselines;
pub mod confidence;
pub mod env;
pub mod error;
pub mod kernel;
pub mod linalg;
pub mod partition;
pub mod posterior;
pub mod sampling;
pub mod trace;
pub mod validation;

pub use algo::{BanditConfig, TreeBandit, ZoomBandit, ContextualBandit};
pub use confidence::{BetaMode, ChainingConstants, ConfidenceConfig};
pub use error::{Error, Result};
pub use kernel::{induced_metric, kernel_eval, Covariance, Kernel, MaternNu, SmoothnessEnvelope};
pub use partition::{BoxDomain, Node, Partition, PartitionParams};
pub use posterior::{info_gain, CachedQuery, PosteriorState};
pub use sampling::{sample_grid, GridSampler, LazySampler};
pub use env::{BestValue, Environment};
pub use trace::{RegretTrace, TraceRecorder, TraceRow};
