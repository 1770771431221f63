//! The `crowdwalk` command-line tool. `main.rs` is a thin wrapper around
//! [`run`]; everything is here so tests can drive commands in-process.

pub mod args;
pub mod config;
mod evolve;
mod gallery;
mod replay;
pub mod run_dir;
mod serve;

use std::process::ExitCode;

use thiserror::Error;

pub use args::{Cli, Command};
pub use evolve::{plan_from_args, run_manifest, EvolveSummary};
pub use gallery::record_from_run;
pub use replay::{replay, ReplayVerdict};

/// Failures, split by who has to act: the caller (2) or the environment (1).
#[derive(Debug, Error, PartialEq)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let file = config::FileConfig::load(cli.config.as_deref())?;
    let globals = Globals {
        seed: config::pick(cli.seed, file.seed),
        workers: config::pick(cli.workers, file.workers),
        out: config::pick(cli.out, file.out.clone()),
    };
    match cli.command {
        Command::Evolve(args) => evolve::command(&globals, &args, &file),
        Command::Replay(args) => replay::command(&globals, &args),
        Command::Upload(args) => gallery::upload(&globals, &args, &file),
        Command::Stats(args) => gallery::stats(&globals, &args, &file),
        Command::Serve(args) => serve::command(&args, &file),
    }
}

/// Global settings after layering.
#[derive(Clone, Debug, Default)]
pub struct Globals {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<std::path::PathBuf>,
}

/// Parses the process arguments, runs, and maps the result to an exit code.
pub fn main_entry() -> ExitCode {
    use clap::Parser;
    let cli = Cli::parse();
    init_logging();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn init_logging() {
    use tracing_subscriber::EnvFilter;
    let filter = EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info"));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .with_target(false)
        .try_init();
}

pub(crate) fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start async runtime: {e}")))
}

pub(crate) fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into())
}
