use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use gpbandit_cli::compare::compare;
use gpbandit_cli::runner::{run_experiment, worker_count, WORKERS_VAR};
use gpbandit_cli::validate::{gamma_report, run_suites};
use gpbandit_cli::ExperimentConfig;

#[derive(Parser)]
#[command(name = "gpbandit", version, about = "Gaussian-process bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config: one CSV trace per seed plus a summary.
    Run {
        config: PathBuf,
        /// Override the output directory.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Worker threads (defaults to the available parallelism).
        #[arg(long, env = WORKERS_VAR)]
        workers: Option<usize>,
    },
    /// Tabulate the traces of earlier runs side by side.
    Compare {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Also write a regret-curve SVG here.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Information-gain report for the first toy process.
    ToyGamma {
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, value_delimiter = ',', default_value = "10,20,50,100,200")]
        n: Vec<usize>,
    },
    /// Run the invariant suites and print one PASS/FAIL line each.
    Validate {
        /// Multiplier on Monte-Carlo repetition counts.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config, output, workers } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(o) = output {
                cfg.output = o;
            }
            let out = run_experiment(&cfg, workers.unwrap_or_else(worker_count))?;
            print!("{}", out.summary.to_table());
            println!("config hash: {}", cfg.hash());
            println!("wrote {} traces and {}", out.traces.len(), out.summary_path.display());
            println!("total wall time: {:.2}s", out.wall_secs);
            Ok(true)
        }
        Command::Compare { configs, svg } => {
            let cfgs = configs.iter().map(|p| ExperimentConfig::load(p)).collect::<Result<Vec<_>>>()?;
            let c = compare(&cfgs, svg.is_some())?;
            print!("{}", c.table);
            if let (Some(path), Some(text)) = (svg, c.svg) {
                std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
                println!("wrote {}", path.display());
            }
            Ok(true)
        }
        Command::ToyGamma { delta, sigma, n } => {
            print!("{}", gamma_report(delta, sigma, &n)?);
            Ok(true)
        }
        Command::Validate { scale, seed } => {
            let checks = run_suites(scale, seed)?;
            for c in &checks {
                println!("{c}");
            }
            Ok(checks.iter().all(|c| c.pass))
        }
    }
}
