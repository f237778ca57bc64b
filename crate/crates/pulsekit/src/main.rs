use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use pulsekit::config::RunConfig;
use pulsekit::runner::{
    cmd_calibrate, cmd_drift, cmd_optimize, cmd_rb, cmd_scan, RunContext, UsageError,
};

/// Robust single-qubit gate toolkit: pulse optimization, benchmarking,
/// calibration and drift analysis for a three-level transmon model.
#[derive(Parser)]
#[command(name = "pulsekit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration (TOML, or JSON by extension).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for artifacts (created if needed).
    #[arg(long)]
    out: PathBuf,
    /// Override the command's seed from the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Cap worker parallelism (default: available cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Treat fit failures as errors.
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize a robust pulse over an error ensemble.
    Optimize(CommonArgs),
    /// Scan the robustness landscape over a (detuning, amplitude) grid.
    Scan(CommonArgs),
    /// Simulate randomized benchmarking of the configured pulse.
    Rb(CommonArgs),
    /// Run the calibration sequences (amplitude, amplification, coherence).
    Calibrate(CommonArgs),
    /// Generate a drift campaign and fit parameter sensitivities.
    Drift(CommonArgs),
}

fn build_context(args: &CommonArgs) -> Result<RunContext> {
    let config = RunConfig::load(&args.config)?;
    let config_dir = args
        .config
        .parent()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating output directory {}", args.out.display()))?;
    Ok(RunContext {
        config,
        config_dir,
        out_dir: args.out.clone(),
        seed_override: args.seed,
        threads: args.threads,
        strict: args.strict,
    })
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Optimize(a) => cmd_optimize(&build_context(a).map_err(usage_wrap)?),
        Command::Scan(a) => cmd_scan(&build_context(a).map_err(usage_wrap)?),
        Command::Rb(a) => cmd_rb(&build_context(a).map_err(usage_wrap)?),
        Command::Calibrate(a) => cmd_calibrate(&build_context(a).map_err(usage_wrap)?),
        Command::Drift(a) => cmd_drift(&build_context(a).map_err(usage_wrap)?),
    }
}

/// Config loading problems are usage errors (exit 2).
fn usage_wrap(e: anyhow::Error) -> anyhow::Error {
    if e.downcast_ref::<UsageError>().is_some() {
        e
    } else {
        anyhow::Error::new(UsageError(format!("{e:#}")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
