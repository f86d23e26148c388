use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use tracing_subscriber::EnvFilter;

use joint_discord::pipeline::{run_stages, RunConfig, Stage};

#[derive(Parser)]
#[command(name = "joint-discord", version, about = "Synthetic measurement-induced discord pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize mode-matched drive pulses.
    SynthPulses(RunArgs),
    /// Sample weak-measurement outcomes and histogram them.
    Sample(RunArgs),
    /// Simulate per-bin tomography counts.
    Tomo(RunArgs),
    /// Maximum-likelihood reconstruction of every bin, tomograms and slices.
    Reconstruct(RunArgs),
    /// Marginalise, fit Xi, and compute discord with bootstrap bands.
    Discord(RunArgs),
    /// Run every stage.
    RunAll(RunArgs),
    /// Check a config and list every violated invariant.
    Validate(ConfigArg),
}

#[derive(Args)]
struct ConfigArg {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Comma-separated subset of configured strengths.
    #[arg(long, value_delimiter = ',')]
    lambda_filter: Option<Vec<f64>>,
}

fn load(args: &ConfigArg) -> Result<RunConfig> {
    RunConfig::load(&args.config).with_context(|| format!("reading config {}", args.config.display()))
}

fn run(args: RunArgs, stage: Stage) -> Result<ExitCode> {
    let mut cfg = load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = args.out {
        cfg.output_dir = out;
    }
    if let Some(n) = args.workers {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring worker pool")?;
    }
    let summary = run_stages(&cfg, stage, args.lambda_filter.as_deref())?;
    tracing::info!(files = summary.files.len(), out = %summary.output_dir.display(), "artifacts written");
    Ok(ExitCode::SUCCESS)
}

fn main() -> Result<ExitCode> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();

    let cli = Cli::parse();
    match cli.command {
        Command::SynthPulses(a) => run(a, Stage::SynthPulses),
        Command::Sample(a) => run(a, Stage::Sample),
        Command::Tomo(a) => run(a, Stage::Tomo),
        Command::Reconstruct(a) => run(a, Stage::Reconstruct),
        Command::Discord(a) | Command::RunAll(a) => run(a, Stage::Discord),
        Command::Validate(a) => {
            let cfg = load(&a)?;
            let violations = cfg.validate();
            if violations.is_empty() {
                println!("{}: ok", a.config.display());
                return Ok(ExitCode::SUCCESS);
            }
            for v in &violations {
                println!("{v}");
            }
            Ok(ExitCode::FAILURE)
        }
    }
}
