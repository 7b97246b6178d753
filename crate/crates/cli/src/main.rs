//! `dradp`: solve MDP files and run the chain and pendulum studies.

mod bench;
mod solve;

use std::fmt;
use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Exit status for bad input: unreadable files, malformed JSON, bad flags.
const EXIT_INPUT: u8 = 2;
/// Exit status when a solver or a post-run check fails.
const EXIT_SOLVER: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "dradp", version, about = "Distributionally robust approximate dynamic programming")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one MDP file with one method and write the result as JSON.
    Solve(solve::SolveArgs),
    /// Compare methods on seeded random chains; writes one CSV row per method and instance.
    ChainBench(bench::ChainArgs),
    /// Train on sampled pendulum episodes and measure balancing time.
    PendulumBench(bench::PendulumArgs),
}

/// A failure with the exit status it maps to.
#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self { code: EXIT_INPUT, message: message.into() }
    }

    pub fn solver(message: impl Into<String>) -> Self {
        Self { code: EXIT_SOLVER, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Creates the output file, mapping failures to an input error that names it.
pub fn create_output(path: &Path) -> CliResult<std::fs::File> {
    std::fs::File::create(path).map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

/// `DRADP_LOG=debug|info|quiet`; warnings only when unset.
fn init_logging() {
    let level = match std::env::var("DRADP_LOG").as_deref() {
        Ok("debug") => log::LevelFilter::Debug,
        Ok("info") => log::LevelFilter::Info,
        Ok("quiet") => log::LevelFilter::Off,
        _ => log::LevelFilter::Warn,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
}

fn main() -> ExitCode {
    init_logging();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Solve(args) => solve::run(&args),
        Command::ChainBench(args) => bench::run_chain(&args),
        Command::PendulumBench(args) => bench::run_pendulum(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
