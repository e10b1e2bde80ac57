//! `fluxgate`: spectra, gate simulation, pulse optimization and scans for the
//! two-fluxonium flux-pulse gate.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use fluxgate::export::{write_json, Manifest};
use log::{error, info};

use commands::{Failure, Outcome, Run};
use config::{RunConfig, UsageError};
use output::OutputDir;

#[derive(Debug, Parser)]
#[command(name = "fluxgate", version, about = "Flux-pulse entangling gate on two coupled fluxonium qubits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration; built-in defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true, env = "FLUXGATE_THREADS")]
    threads: Option<usize>,
    /// Seed for all randomness (overrides `seed` in the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Treat warnings (non-entangling gate, adiabaticity violations) as failures.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Single- and two-qubit levels along a flux sweep of qubit B.
    Spectrum,
    /// One pulse through the full pipeline; relaxation if `t1_us` is set.
    Gate,
    /// Pulse optimization at one or several detunings.
    Optimize,
    /// Coherent error on a (detuning, plateau time) grid.
    Scan2d,
    /// Error along a detuning or plateau-time line through the configured pulse.
    Noise,
    /// Two-state trajectories in the instantaneous eigenbasis.
    Trajectory,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Gate => "gate",
            Command::Optimize => "optimize",
            Command::Scan2d => "scan2d",
            Command::Noise => "noise",
            Command::Trajectory => "trajectory",
        }
    }
}

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_UNCONVERGED: u8 = 3;

fn run(cli: &Cli) -> Result<u8> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }

    let out = OutputDir::acquire(&config.output_dir)?;
    let start = Instant::now();
    let sys = config.system()?;
    let ctx = Run { config: &config, out: &out, strict: cli.strict };
    let outcome: Outcome = match cli.command {
        Command::Spectrum => commands::spectrum(&ctx, &sys),
        Command::Gate => commands::gate(&ctx, &sys),
        Command::Optimize => commands::optimize(&ctx, &sys),
        Command::Scan2d => commands::scan2d(&ctx, &sys),
        Command::Noise => commands::noise(&ctx, &sys),
        Command::Trajectory => commands::trajectory(&ctx, &sys),
    }?;
    let wall = start.elapsed().as_secs_f64();
    let ok = outcome.failures.is_empty();
    let manifest = Manifest::new(cli.command.name(), &config, config.seed, wall, outcome.points, ok);
    write_json(&out.path("manifest.json"), &manifest)?;
    info!("{}: {} points in {wall:.1} s", cli.command.name(), outcome.points);
    if ok {
        let _ = std::fs::remove_file(out.path("failures.json"));
        return Ok(0);
    }
    let summary = FailureSummary { command: cli.command.name().into(), points: outcome.points, failed: outcome.failures };
    write_json(&out.path("failures.json"), &summary)?;
    eprintln!("{}", serde_json::to_string(&summary)?);
    Ok(EXIT_UNCONVERGED)
}

#[derive(serde::Serialize)]
struct FailureSummary {
    command: String,
    points: usize,
    failed: Vec<Failure>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            error!("{e:#}");
            let usage = e.chain().any(|c| c.is::<UsageError>());
            ExitCode::from(if usage { EXIT_USAGE } else { EXIT_FAILURE })
        }
    }
}
