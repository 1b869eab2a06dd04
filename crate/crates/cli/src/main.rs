//! `kgev`: config-driven experiment runner.
//!
//! Exit codes: 0 = all checks passed, 1 = invariant or certificate
//! failure, 2 = configuration error, 3 = numerical refusal (a violated
//! precondition such as an unstable step or an inadmissible weight).

// Negated comparisons like `!(x > 0.0)` reject NaN along with the
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt as stdfmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod fmt;

#[derive(Debug)]
pub enum CmdError {
    /// Invariant or certificate check failed (exit 1).
    CheckFailed(String),
    /// Bad configuration or input data (exit 2).
    Config(String),
    /// Numerical precondition refused (exit 3).
    Refusal(String),
}

impl CmdError {
    fn exit_code(&self) -> u8 {
        match self {
            CmdError::CheckFailed(_) => 1,
            CmdError::Config(_) => 2,
            CmdError::Refusal(_) => 3,
        }
    }
}

impl stdfmt::Display for CmdError {
    fn fmt(&self, f: &mut stdfmt::Formatter<'_>) -> stdfmt::Result {
        match self {
            CmdError::CheckFailed(msg) | CmdError::Config(msg) | CmdError::Refusal(msg) => {
                f.write_str(msg)
            }
        }
    }
}

#[derive(Parser)]
#[command(
    name = "kgev",
    about = "Frequency-space simulation and certification for Kirchhoff-type wave equations",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration file (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config's outputs.directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed echoed into reports (reserved for randomized sweeps).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate and compare the life-span lower bounds (sweeps eta when
    /// the config asks for it).
    Bounds,
    /// Run the coupled nonlinear solver and check its invariants.
    Simulate,
    /// Iterate the coefficient fixed-point construction.
    Theta,
    /// Run the per-mode weighted-energy certificate over a radius list.
    Certify,
    /// Probe the life span up to a time target.
    Probe,
}

fn run(cli: &Cli) -> Result<(), CmdError> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| CmdError::Config("--config <path> is required".to_string()))?;
    let config = config::load(config_path)?;
    let out_dir = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&config.outputs.directory));
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CmdError::Config(format!("cannot create {}: {e}", out_dir.display())))?;

    let ctx = commands::Ctx {
        config,
        out_dir,
        seed: cli.seed,
        quiet: cli.quiet,
    };
    match cli.command {
        Command::Bounds => commands::bounds(&ctx),
        Command::Simulate => commands::simulate(&ctx),
        Command::Theta => commands::theta(&ctx),
        Command::Certify => commands::certify(&ctx),
        Command::Probe => commands::probe(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
