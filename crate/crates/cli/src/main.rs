//! `ellq`: batch front end for the indefinite elliptic laboratory.
//!
//! Exit codes: 0 success, 1 configuration error, 2 solver divergence,
//! 3 structural-hypothesis validation failure.

mod commands;
mod config;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Ctx, Failure};
use config::{config_hash, RunConfig};
use output::OutputWriter;

#[derive(Parser)]
#[command(name = "ellq", version, about = "indefinite elliptic laboratory")]
struct Cli {
    /// Path to the JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory (created if missing).
    #[arg(long, global = true, value_name = "DIR", default_value = "ellq-out")]
    out: PathBuf,

    /// Seed override for randomized suites.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Worker threads for sample-parallel suites (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Progress logging on stderr.
    #[arg(long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the problem at a fixed lambda and emit the solution field.
    Solve,
    /// Trace the solution branch in lambda and emit the bifurcation diagram.
    Continue,
    /// Run the randomized inequality suites and emit their report table.
    Harnack,
    /// Assemble the a priori bound certificate over a lambda window.
    Certify,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // usage problems are configuration errors in this tool's contract
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    if let Some(t) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let config_path = match &cli.config {
        Some(p) => p.clone(),
        None => {
            eprintln!("error: --config PATH is required");
            return ExitCode::from(1);
        }
    };
    let text = match std::fs::read_to_string(&config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", config_path.display());
            return ExitCode::from(1);
        }
    };
    let cfg = match RunConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let hash = config_hash(&text);
    let out = match OutputWriter::new(&cli.out, &hash) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let ctx = Ctx {
        cfg: &cfg,
        out,
        seed: cli.seed.or(cfg.seed).unwrap_or(0),
        verbose: cli.verbose,
        header: format!("ellq v{} config={hash}", env!("CARGO_PKG_VERSION")),
    };
    let result = match cli.command {
        Command::Solve => commands::cmd_solve(&ctx),
        Command::Continue => commands::cmd_continue(&ctx),
        Command::Harnack => commands::cmd_harnack(&ctx),
        Command::Certify => commands::cmd_certify(&ctx),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Solver(e)) => {
            eprintln!("solver error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Validation(e)) => {
            eprintln!("validation error: {e:#}");
            ExitCode::from(3)
        }
    }
}
