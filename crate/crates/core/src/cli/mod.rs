//! Command-line front end: argument parsing, config loading, exit codes.
//!
//! Exit codes: 0 success, 1 invariant failure, 2 configuration or parse
//! error, 3 resource cap exceeded.

pub mod commands;
pub mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;

#[derive(Parser)]
#[command(name = "heavyset", version, about = "heavy-set experiments on compact abelian groups")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args)]
pub struct CommonArgs {
    /// TOML experiment configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory for CSV artifacts (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    /// RNG seed; mandatory for any command that samples.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for grid scans (defaults to all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Subcommand)]
pub enum Command {
    /// Continued-fraction expansion and below-approximation table for μ(A).
    Cf(CommonArgs),
    /// First-failure scan of the heavy set over a grid of starting points.
    #[command(name = "heavy-scan")]
    HeavyScan(CommonArgs),
    /// Multi-stage packing run against the dimension bound.
    #[command(name = "bound-check")]
    BoundCheck(CommonArgs),
    /// Exact invariants and statistical sanity checks in one report.
    Verify(CommonArgs),
    /// Two-sided ball-measure regularity of the configured space.
    Regularity(CommonArgs),
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::Cf(a)
            | Command::HeavyScan(a)
            | Command::BoundCheck(a)
            | Command::Verify(a)
            | Command::Regularity(a) => a,
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Parse(_) | Error::FieldMismatch(_, _) => 2,
        Error::ResourceCap(_) => 3,
        _ => 1,
    }
}

pub fn run(cli: Cli) -> ExitCode {
    let common = cli.command.common();
    if let Some(threads) = common.threads {
        // A pool may already exist (tests, repeated calls); that's fine.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let config = match config::load(&common.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code_for(&e));
        }
    };
    let ctx = commands::CommandCtx {
        config: &config,
        out: &common.out,
        seed: common.seed,
    };
    let result = match &cli.command {
        Command::Cf(_) => commands::cmd_cf(&ctx),
        Command::HeavyScan(_) => commands::cmd_heavy_scan(&ctx),
        Command::BoundCheck(_) => commands::cmd_bound_check(&ctx).map(|_| ()),
        Command::Verify(_) => commands::cmd_verify(&ctx),
        Command::Regularity(_) => commands::cmd_regularity(&ctx),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
