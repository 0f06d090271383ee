//! Command-line front end: one subcommand per computation or verification,
//! each writing a deterministic JSON (or CSV) report.
//!
//! Exit codes: 0 success, 1 verification failure or numerical breakdown, 2 usage error.

mod commands;
mod config;
mod output;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use commands::Command;
use config::Flags;

const THREADS_VAR: &str = "SEIFERT_WRT_THREADS";

#[derive(Parser, Debug)]
#[command(name = "seifert-wrt", version, about = "WRT invariants, WRT q-series and their resurgence for Seifert loops")]
#[command(after_help = "Set SEIFERT_WRT_THREADS to cap the number of worker threads.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Compute(String),
}

impl From<seifert_wrt::Error> for Failure {
    fn from(e: seifert_wrt::Error) -> Self {
        use seifert_wrt::Error::*;
        match e {
            MalformedLoop(_) | InvalidLoop(_) | NotCoprime(..) | LevelTooSmall | ColorTooSmall | Precondition(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Compute(other.to_string()),
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(text) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = text
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("{THREADS_VAR} must be a positive integer, got {text:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Compute(e.to_string()))
}

fn execute(cli: &Cli) -> Result<bool, Failure> {
    configure_threads()?;
    let cfg = commands::resolve(cli.command, &cli.flags)?;
    let outcome = commands::run(cli.command, &cfg)?;
    let pass = outcome.checks.iter().all(|c| c.pass);
    let bytes = output::render(cli.command.name(), &cfg, pass, &outcome.result, &outcome.checks, outcome.table)
        .map_err(Failure::Compute)?;
    match &cfg.out {
        Some(path) => std::fs::write(path, &bytes).map_err(|e| Failure::Compute(format!("cannot write {path}: {e}")))?,
        None => std::io::stdout().write_all(&bytes).map_err(|e| Failure::Compute(e.to_string()))?,
    }
    Ok(pass)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
