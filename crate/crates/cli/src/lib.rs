//! Experiment plumbing behind the `gpbandit` binary: configs, seeded runs,
//! CSV traces, summaries and plots.

pub mod compare;
pub mod config;
pub mod csv;
pub mod plot;
pub mod runner;
pub mod summary;
pub mod validate;

pub use config::{Algorithm, EnvSpec, ExperimentConfig};
