//! Seeded multi-run execution.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use anyhow::{Context, Result};
use gpbandit::algo::ContextualBandit;
use gpbandit::baselines::{run_gp_ucb, run_random, UniformGrid};
use gpbandit::env::{make_contextual_env, make_grid_gp, Environment, Toy1Kernel, ToyEnv1, ToyEnv2};
use gpbandit::{BoxDomain, Covariance, RegretTrace, TreeBandit, ZoomBandit};

use crate::config::{Algorithm, EnvSpec, ExperimentConfig};
use crate::csv::{self, TraceMeta};
use crate::summary::Summary;

/// Environment variable holding the number of worker threads.
pub const WORKERS_VAR: &str = "GPBANDIT_WORKERS";

/// Worker count from [`WORKERS_VAR`], else the available parallelism.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_VAR)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from))
}

fn run_on<E: Environment>(cfg: &ExperimentConfig, kernel: Arc<dyn Covariance>, env: &mut E, seed: u64) -> Result<RegretTrace> {
    let bandit = cfg.bandit();
    let domain = env.domain().clone();
    let sigma = env.noise_std();
    Ok(match cfg.algorithm {
        Algorithm::Tree => TreeBandit::new(kernel, domain, sigma, &bandit)?.run(env)?,
        Algorithm::Zoom => ZoomBandit::new(kernel, domain, sigma, &bandit)?.run(env)?,
        Algorithm::GpUcb => {
            let grid = UniformGrid::new(&domain, cfg.gp_ucb_grid_res)?;
            run_gp_ucb(kernel, env, &bandit, &grid)?
        }
        Algorithm::Random => run_random(env, cfg.budget, seed, cfg.timed)?,
        Algorithm::Contextual | Algorithm::Toy2Oracle => unreachable!("rejected by config validation"),
    })
}

/// One run of the configured algorithm for `seed`.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<RegretTrace> {
    match &cfg.environment {
        EnvSpec::GridGp { kernel, lower, upper, sigma, grid_res } => {
            let k: Arc<dyn Covariance> = Arc::new(kernel.clone());
            let domain = BoxDomain::new(lower.clone(), upper.clone())?;
            let mut env = make_grid_gp(k.clone(), domain, *grid_res, *sigma, seed)?;
            run_on(cfg, k, &mut env, seed)
        }
        EnvSpec::Toy1 { delta, sigma } => {
            let mut env = ToyEnv1::new(*delta, *sigma, seed)?;
            let k: Arc<dyn Covariance> = Arc::new(Toy1Kernel::new(*delta, ToyEnv1::I_MAX)?);
            run_on(cfg, k, &mut env, seed)
        }
        EnvSpec::Toy2 { delta } => {
            let sigma = ToyEnv2::sigma_for_horizon(*delta, cfg.budget);
            let mut env = ToyEnv2::new(*delta, sigma, seed)?;
            Ok(env.oracle_strategy(cfg.budget)?.trace)
        }
        EnvSpec::Contextual {
            context_kernel,
            action_kernel,
            composition,
            context_dim,
            action_dim,
            sigma,
            context_res,
            action_res,
        } => {
            let mut env = make_contextual_env(
                context_kernel.clone(),
                action_kernel.clone(),
                *composition,
                (*context_dim, *action_dim),
                *sigma,
                seed,
                *context_res,
                *action_res,
            )?;
            let mut bandit = ContextualBandit::new(env.kernel(), &env, &cfg.bandit())?;
            Ok(bandit.run(&mut env)?.trace)
        }
    }
}

/// Runs every seed on up to `workers` threads; results come back in seed order.
pub fn run_all(cfg: &ExperimentConfig, workers: usize) -> Result<Vec<RegretTrace>> {
    let seeds = &cfg.seeds;
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<RegretTrace>>>> = Mutex::new((0..seeds.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, seeds.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= seeds.len() {
                    break;
                }
                let out = run_seed(cfg, seeds[i]).with_context(|| format!("seed {}", seeds[i]));
                slots.lock().unwrap()[i] = Some(out);
            });
        }
    });
    slots.into_inner().unwrap().into_iter().map(|r| r.expect("every seed ran")).collect()
}

pub fn trace_path(cfg: &ExperimentConfig, seed: u64) -> PathBuf {
    cfg.output.join(format!("{}_seed{seed}.csv", cfg.algorithm.name()))
}

/// What [`run_experiment`] wrote.
#[derive(Debug)]
pub struct RunOutput {
    pub traces: Vec<PathBuf>,
    pub summary: Summary,
    pub summary_path: PathBuf,
    pub wall_secs: f64,
}

/// Runs all seeds, writes one CSV per seed and a summary CSV.
pub fn run_experiment(cfg: &ExperimentConfig, workers: usize) -> Result<RunOutput> {
    std::fs::create_dir_all(&cfg.output).with_context(|| format!("creating output directory {}", cfg.output.display()))?;
    let start = Instant::now();
    let traces = run_all(cfg, workers)?;
    let wall_secs = start.elapsed().as_secs_f64();
    let hash = cfg.hash();
    let mut paths = Vec::new();
    for (seed, trace) in cfg.seeds.iter().zip(&traces) {
        let path = trace_path(cfg, *seed);
        csv::write(&path, trace, &TraceMeta { config_hash: hash.clone(), seed: *seed })?;
        paths.push(path);
    }
    let summary = Summary::new(cfg.algorithm.name(), &traces, &cfg.checkpoint_list());
    let summary_path = cfg.output.join(format!("{}_summary.csv", cfg.algorithm.name()));
    let text = format!("# config_hash={hash}\n{}", summary.to_csv());
    std::fs::write(&summary_path, text).with_context(|| format!("writing summary {}", summary_path.display()))?;
    Ok(RunOutput { traces: paths, summary, summary_path, wall_secs })
}

/// Loads the per-seed traces a previous run of `cfg` wrote.
pub fn load_traces(cfg: &ExperimentConfig) -> Result<Vec<RegretTrace>> {
    let hash = cfg.hash();
    cfg.seeds
        .iter()
        .map(|&seed| {
            let path = trace_path(cfg, seed);
            let (trace, meta) = csv::read(&path)?;
            if meta.config_hash != hash {
                log::warn!("{} was written by a different config ({} != {hash})", path.display(), meta.config_hash);
            }
            Ok(trace)
        })
        .collect()
}
