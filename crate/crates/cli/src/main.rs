//! `ranktwo`: solve, enumerate and certify rank-two likelihood maxima.
//!
//! Exit codes: 0 ok, 2 bad input, 3 solver failure, 4 inconclusive.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CandidatesArgs, Failure, SolveArgs, VerifyArgs, EXIT_INPUT};
use output::{emit, Format};

#[derive(Parser, Debug)]
#[command(name = "ranktwo", version, about = "Maximum likelihood over rank-two matrices with prescribed weights")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Write to this file (atomically) instead of stdout
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Multistart Newton / gradient search, or EM on a counts table
    Solve(SolveArgs),
    /// Exact stationary candidates for n = 4
    Candidates(CandidatesArgs),
    /// Certificate for (n, s, t), or a single lemma check
    Verify(VerifyArgs),
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("RANKTWO_THREADS") else { return Ok(()) };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&k| k > 0)
        .ok_or_else(|| Failure::input(format!("RANKTWO_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::input(e.to_string()))
}

fn run(cli: &Cli) -> Result<i32, Failure> {
    configure_threads()?;
    let outcome = match &cli.command {
        Command::Solve(a) => commands::solve(a)?,
        Command::Candidates(a) => commands::candidates(a)?,
        Command::Verify(a) => commands::verify(a)?,
    };
    emit(&outcome.render(cli.format), cli.out.as_deref())
        .map_err(|e| Failure { code: EXIT_INPUT, message: format!("cannot write output: {e}") })?;
    Ok(outcome.code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}
