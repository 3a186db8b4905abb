//! `rhls` command-line experiments.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use crate::commands::Context;
use crate::config::{ConstantCmd, ContinuationCmd, NonexistenceCmd, SolveCmd, SweepCmd, VerifyCmd};
use crate::error::{config_err, CliResult};

#[derive(Parser)]
#[command(name = "rhls", version, about = "Reversed HLS integral equation experiments")]
pub struct Cli {
    /// Directory for reports (default: rhls-out)
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Seed for randomized restarts
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Exit with code 4 when a solve does not converge
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    strict: Option<bool>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Flat TOML file of parameters; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the sharp constant N_alpha
    Constant(ConstantCmd),
    /// Energy quotients of truncated extremals over shrinking scales
    SweepEps(SweepCmd),
    /// Solve the integral equation or minimize the energy quotient
    Solve(SolveCmd),
    /// Check a saved solution (Pohozaev, symmetry, moving planes)
    Verify(VerifyCmd),
    /// Continue subcritical solutions toward the critical exponent
    Continuation(ContinuationCmd),
    /// Probe for positive solutions at or above the critical exponent
    Nonexistence(NonexistenceCmd),
}

#[derive(Deserialize, Default)]
struct FileGlobals {
    out_dir: Option<PathBuf>,
    seed: Option<u64>,
    strict: Option<bool>,
    threads: Option<usize>,
}

fn run(cli: Cli) -> CliResult<()> {
    let file = match &cli.config {
        Some(path) => config::load_file(path)?,
        None => Default::default(),
    };
    let globals: FileGlobals =
        serde_json::from_value(serde_json::Value::Object(file.clone())).map_err(|e| config_err(e.to_string()))?;
    if let Some(threads) = cli.threads.or(globals.threads) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| config_err(format!("thread pool: {e}")))?;
    }
    let ctx = Context {
        out_dir: cli.out_dir.or(globals.out_dir),
        seed: cli.seed.or(globals.seed).unwrap_or(0),
        strict: cli.strict.or(globals.strict).unwrap_or(false),
        file,
    };
    match &cli.command {
        Command::Constant(c) => commands::constant(&ctx, c),
        Command::SweepEps(c) => commands::sweep(&ctx, c),
        Command::Solve(c) => commands::solve(&ctx, c),
        Command::Verify(c) => commands::verify(&ctx, c),
        Command::Continuation(c) => commands::continuation(&ctx, c),
        Command::Nonexistence(c) => commands::nonexistence(&ctx, c),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
