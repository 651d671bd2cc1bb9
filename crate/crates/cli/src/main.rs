//! `qkinetic verify|sweep|evolve --config PATH [--force] [--out DIR] [--threads N]`.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 configuration error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qkinetic_core::KineticError;

use crate::config::RunConfig;

#[derive(Parser)]
#[command(name = "qkinetic", version, about = "Kinetic equations and mean-field limits on finite lattices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run invariant suites, Duhamel checks and the kinetic-equation residual.
    Verify(Common),
    /// Run the configured ε-sweeps and write records.csv and summary.txt.
    Sweep(Common),
    /// Integrate the Vlasov equation and write trajectory.csv.
    Evolve(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Allow sweep times at or beyond t_0.
    #[arg(long)]
    force: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; QKINETIC_THREADS takes precedence.
    #[arg(long)]
    threads: Option<usize>,
}

const EXIT_NUMERIC: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn exit_code(e: &KineticError) -> u8 {
    match e {
        KineticError::InsufficientData(_) => EXIT_NUMERIC,
        _ => EXIT_CONFIG,
    }
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, String> {
    match std::env::var("QKINETIC_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| format!("ConfigError: QKINETIC_THREADS={v} is not a thread count")),
        Err(_) => Ok(flag),
    }
}

fn run(cli: Cli) -> Result<bool, (u8, String)> {
    let (common, which) = match &cli.command {
        Command::Verify(c) => (c, "verify"),
        Command::Sweep(c) => (c, "sweep"),
        Command::Evolve(c) => (c, "evolve"),
    };
    let threads = thread_count(common.threads).map_err(|e| (EXIT_CONFIG, e))?;
    if let Some(n) = threads.filter(|&n| n > 0) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| (EXIT_CONFIG, format!("cannot configure {n} threads: {e}")))?;
    }
    let cfg = RunConfig::load(&common.config).map_err(|e| (EXIT_CONFIG, e))?;
    let outcome = match which {
        "verify" => commands::verify(&cfg),
        "sweep" => commands::sweep(&cfg, common.force),
        _ => commands::evolve(&cfg),
    }
    .map_err(|e| (exit_code(&e), e.to_string()))?;
    let out = common
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("qkinetic-out"));
    commands::write_outputs(&out, &outcome.files)
        .map_err(|e| (EXIT_NUMERIC, format!("cannot write to {}: {e}", out.display())))?;
    print!("{}", outcome.report);
    Ok(outcome.pass)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_NUMERIC),
        Err((code, msg)) => {
            eprintln!("qkinetic: {msg}");
            ExitCode::from(code)
        }
    }
}
