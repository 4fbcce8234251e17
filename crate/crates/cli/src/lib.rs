//! Command-line driver: loads a TOML run configuration, executes one of the
//! four analysis commands, and writes machine-readable tables plus a
//! metadata record into the output directory.
//!
//! Exit status is nonzero exactly when a declared tolerance is breached or
//! an error occurs. All table bodies are deterministic for a given config;
//! wall-clock information is confined to `metadata.json`.

// `!(x > y)` guards deliberately reject NaN configuration values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod report;
pub mod svg;

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use commands::CommandOutcome;
use report::{write_metadata, RunMetadata};

#[derive(Parser, Debug)]
#[command(
    name = "udw",
    version,
    about = "Sequential non-commuting detector couplings to a KMS-thermal field: ordering asymmetry, exact-oracle scaling, information geometry"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Three-way evaluation of the ordering asymmetry over a sweep.
    Asymmetry(RunArgs),
    /// Exact truncated-Fock evolution and the remainder scaling fit.
    Oracle(RunArgs),
    /// Relative entropy, BKM/Bures metrics and their ratio over s.
    Geometry(RunArgs),
    /// Detailed-balance and time-domain KMS checks.
    KmsCheck(RunArgs),
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Path to the TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides the config's `output.directory`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker-thread count (overrides config and the UDW_WORKERS variable).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Multiplies the pass/fail tolerances.
    #[arg(long, default_value_t = 1.0)]
    pub tolerance_scale: f64,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Self::Asymmetry(_) => "asymmetry",
            Self::Oracle(_) => "oracle",
            Self::Geometry(_) => "geometry",
            Self::KmsCheck(_) => "kms-check",
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Self::Asymmetry(a) | Self::Oracle(a) | Self::Geometry(a) | Self::KmsCheck(a) => a,
        }
    }
}

fn resolve_workers(args: &RunArgs, configured: usize) -> usize {
    args.workers
        .or_else(|| {
            std::env::var("UDW_WORKERS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(configured)
}

fn init_worker_pool(workers: usize) {
    if workers > 0 {
        // Repeated initialization (tests, multiple runs in-process) is fine;
        // the first pool wins.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
    }
}

/// Run one command end to end. Returns whether all tolerances held.
pub fn run(cli: &Cli) -> Result<bool> {
    let args = cli.command.args();
    let loaded = config::load(&args.config)?;
    let cfg = &loaded.config;

    let workers = resolve_workers(args, cfg.output.workers);
    init_worker_pool(workers);

    let out: PathBuf = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
    std::fs::create_dir_all(&out)
        .with_context(|| format!("creating output directory {}", out.display()))?;

    let start = Instant::now();
    let outcome = dispatch(&cli.command, cfg, &out, args.tolerance_scale)?;

    for warning in &outcome.warnings {
        eprintln!("warning: {warning}");
    }
    write_metadata(
        &out,
        &RunMetadata {
            command: cli.command.name(),
            config_raw: &loaded.raw,
            seed: cfg.output.seed,
            workers,
            tolerance_scale: args.tolerance_scale,
            wall_time: start.elapsed(),
            warnings: outcome.warnings.clone(),
            passed: outcome.passed,
        },
    )?;
    Ok(outcome.passed)
}

fn dispatch(
    command: &Command,
    cfg: &config::RunConfig,
    out: &Path,
    tolerance_scale: f64,
) -> Result<CommandOutcome> {
    match command {
        Command::Asymmetry(_) => commands::asymmetry::run(cfg, out, tolerance_scale),
        Command::Oracle(_) => commands::oracle::run(cfg, out, tolerance_scale),
        Command::Geometry(_) => commands::geometry::run(cfg, out, tolerance_scale),
        Command::KmsCheck(_) => commands::kms::run(cfg, out, tolerance_scale),
    }
}
