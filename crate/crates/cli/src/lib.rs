//! Config-driven experiment runner for `netform-core`.
//!
//! Each subcommand reads a TOML experiment file, applies command-line
//! overrides, runs one analysis and writes CSV files whose header records
//! the tool version, the resolved configuration, its SHA-256 and the seed.
//! Exit codes: 0 on success, 2 when the configuration or model fails
//! validation (the witness is printed), 1 on internal errors.

pub mod commands;
pub mod config;
pub mod error;
pub mod model;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::{CommandKind, Context};
use crate::config::{ExperimentConfig, MpeConfig};
use crate::error::CliError;
use crate::output::{Provenance, ThreadSource};

/// Environment variable consulted for the thread count when neither the
/// flag nor the config sets one.
pub const THREADS_ENV: &str = "NETFORM_THREADS";
/// Output directory when neither `--out` nor `run.out` is given.
pub const DEFAULT_OUT: &str = "netform-out";

#[derive(Debug, Parser)]
#[command(name = "netform", version, about = "Stochastic best-response network formation experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Experiment configuration (TOML).
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Master seed, overriding `run.seed`.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output directory, overriding `run.out`.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads, overriding `run.threads` and NETFORM_THREADS.
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
    /// log2 of the largest state space enumerated exhaustively.
    #[arg(long, value_name = "LOG2STATES")]
    pub cap: Option<u32>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide whether the switching rule admits an aggregating function.
    Check(CommonArgs),
    /// Build the aggregating function and the Gibbs stationary law.
    Gibbs(CommonArgs),
    /// Solve the stationary distribution of the exact transition operator.
    Stationary(CommonArgs),
    /// Simulate the formation process and compare with the exact law.
    Simulate(CommonArgs),
    /// Evaluate the large-population limit ζ and its functionals μ and η.
    Zeta(CommonArgs),
    /// Link density and neighbour distance over a (v0, γ) grid.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of v0 grid points.
        #[arg(long, value_name = "N")]
        v0_steps: Option<usize>,
        /// Number of γ grid points.
        #[arg(long, value_name = "N")]
        gamma_steps: Option<usize>,
    },
    /// Asymptotic trade shares under congestion costs.
    Trade(CommonArgs),
    /// Markov perfect equilibrium of forward-looking agents.
    Mpe {
        #[command(flatten)]
        common: CommonArgs,
        /// Discount rate.
        #[arg(long)]
        rho: Option<f64>,
        /// Step towards the new iterate (1 = undamped).
        #[arg(long)]
        damping: Option<f64>,
        /// Iteration limit.
        #[arg(long)]
        max_iters: Option<usize>,
    },
}

impl Command {
    fn kind(&self) -> CommandKind {
        match self {
            Self::Check(_) => CommandKind::Check,
            Self::Gibbs(_) => CommandKind::Gibbs,
            Self::Stationary(_) => CommandKind::Stationary,
            Self::Simulate(_) => CommandKind::Simulate,
            Self::Zeta(_) => CommandKind::Zeta,
            Self::Sweep { .. } => CommandKind::Sweep,
            Self::Trade(_) => CommandKind::Trade,
            Self::Mpe { .. } => CommandKind::Mpe,
        }
    }

    fn common(&self) -> &CommonArgs {
        match self {
            Self::Check(c) | Self::Gibbs(c) | Self::Stationary(c) | Self::Simulate(c) | Self::Zeta(c) | Self::Trade(c) => c,
            Self::Sweep { common, .. } | Self::Mpe { common, .. } => common,
        }
    }
}

/// The configuration after command-line overrides.
pub fn resolve(command: &Command) -> Result<ExperimentConfig, CliError> {
    let common = command.common();
    let mut config = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        config.run.seed = seed;
    }
    if let Some(out) = &common.out {
        config.run.out = Some(out.clone());
    }
    if let Some(threads) = common.threads {
        config.run.threads = Some(threads);
    }
    if let Some(cap) = common.cap {
        config.run.cap = Some(cap);
    }
    match command {
        Command::Sweep { v0_steps, gamma_steps, .. } => {
            if let Some(sweep) = config.analysis.sweep.as_mut() {
                if let Some(n) = v0_steps {
                    sweep.v0.steps = *n;
                }
                if let Some(n) = gamma_steps {
                    sweep.gamma.steps = *n;
                }
            } else if v0_steps.is_some() || gamma_steps.is_some() {
                return Err(CliError::Config("grid overrides need an [analysis.sweep] section".into()));
            }
        }
        Command::Mpe { rho, damping, max_iters, .. } => {
            if config.analysis.mpe.is_none() {
                config.analysis.mpe = rho.map(MpeConfig::with_rho);
            }
            if let Some(mpe) = config.analysis.mpe.as_mut() {
                apply_mpe_overrides(mpe, *rho, *damping, *max_iters);
            }
        }
        _ => {}
    }
    Ok(config)
}

fn apply_mpe_overrides(mpe: &mut MpeConfig, rho: Option<f64>, damping: Option<f64>, max_iters: Option<usize>) {
    if let Some(r) = rho {
        mpe.rho = r;
    }
    if let Some(d) = damping {
        mpe.damping = d;
    }
    if let Some(k) = max_iters {
        mpe.max_iters = k;
    }
}

/// Flag, then config, then `NETFORM_THREADS`, then all cores.
pub fn resolve_threads(config: &ExperimentConfig) -> Result<(usize, ThreadSource), CliError> {
    if let Some(n) = config.run.threads.filter(|n| *n > 0) {
        return Ok((n, ThreadSource::Config));
    }
    if let Ok(value) = std::env::var(THREADS_ENV) {
        let n: usize = value
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("{THREADS_ENV}={value:?} is not a thread count")))?;
        if n > 0 {
            return Ok((n, ThreadSource::Environment));
        }
    }
    Ok((std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1), ThreadSource::Default))
}

/// Runs one command and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("netform: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let config = resolve(&cli.command)?;
    let (threads, mut source) = resolve_threads(&config)?;
    if cli.command.common().threads.is_some() {
        source = ThreadSource::Flag;
    }
    let kind = cli.command.kind();
    let provenance = Provenance {
        command: kind.name().to_string(),
        config_toml: config.to_toml()?,
        seed: config.run.seed,
        threads,
        thread_source: source,
    };
    let ctx = Context {
        seed: config.run.seed,
        cap: config.run.cap.unwrap_or(netform_core::graph::DEFAULT_CAP_LOG2),
        config,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?;
    let outcome = pool.install(|| commands::dispatch(kind, &ctx))?;
    let out = ctx.config.run.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let written = output::write_tables(&out, &outcome.tables, &provenance)?;
    println!("{}", outcome.message);
    for path in written {
        println!("wrote {}", path.display());
    }
    match outcome.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
