mod commands;
mod config;

use clap::{Parser, Subcommand};
use commands::{exit_code_for, EXIT_CONFIG, EXIT_OK};
use config::ExperimentConfig;
use std::path::PathBuf;

/// Simulator and estimate-verification harness for the forced subcritical
/// surface quasi-geostrophic equation on the 2-torus.
#[derive(Parser)]
#[command(name = "sqg", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory and write its norm ledger and checkpoints.
    Simulate(RunArgs),
    /// Check decay, energy and spectral bounds along a trajectory
    /// (existing trajectory.csv is reused when present).
    Verify(RunArgs),
    /// Hölder-modulus machinery: β exponent, ξ weight, ψ evolution.
    Holder(RunArgs),
    /// Paired subcritical/critical runs measuring the γ→1 convergence rate.
    Converge(RunArgs),
    /// Quadrature lower-bound lemmas on random field ensembles.
    Lowerbounds(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides output.dir from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the RNG seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn load(args: &RunArgs) -> anyhow::Result<ExperimentConfig> {
    if let Some(t) = args.threads {
        // ignore failure if a pool already exists (e.g. under tests)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(out) = &args.out {
        cfg.output.dir = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn main() {
    let cli = Cli::parse();
    let (args, run): (&RunArgs, fn(&ExperimentConfig) -> anyhow::Result<()>) = match &cli.command {
        Command::Simulate(a) => (a, commands::cmd_simulate),
        Command::Verify(a) => (a, commands::cmd_verify),
        Command::Holder(a) => (a, commands::cmd_holder),
        Command::Converge(a) => (a, commands::cmd_converge),
        Command::Lowerbounds(a) => (a, commands::cmd_lowerbounds),
    };
    let cfg = match load(args) {
        Ok(cfg) => cfg,
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(EXIT_CONFIG);
        }
    };
    match run(&cfg) {
        Ok(()) => std::process::exit(EXIT_OK),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(exit_code_for(&err));
        }
    }
}
