//! Experiment driver behind the `latdec` binary.
//!
//! Every command is a pure function of its configuration: the same settings
//! and seed give byte-identical output for any worker count.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

use config::{ExperimentConfig, FileConfig, Flags, Format};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("compute budget exceeded: {0}")]
    Budget(latdec::Error),
    #[error("{0}")]
    Compute(latdec::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<latdec::Error> for CliError {
    fn from(e: latdec::Error) -> Self {
        match e {
            e if e.is_budget() => CliError::Budget(e),
            latdec::Error::InvalidParameter(msg) => CliError::Config(msg),
            e => CliError::Compute(e),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Budget(_) => EXIT_BUDGET,
            CliError::Compute(_) | CliError::Io(_) => EXIT_FAILURE,
        }
    }
}

/// Renders the result of `cfg` without writing it anywhere.
pub fn render(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let run = || {
        let table = commands::run(cfg)?;
        Ok(match cfg.format {
            Format::Csv => table.to_csv(),
            Format::Json => table.to_json(),
        })
    };
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("field `threads`: {e}")))?
            .install(run),
        None => run(),
    }
}

fn execute(flags: Flags) -> Result<(), CliError> {
    let file = match &flags.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let cfg = ExperimentConfig::resolve(flags, file)?;
    let text = render(&cfg)?;
    match &cfg.out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string())),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to standard error.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let flags = match Flags::try_parse_from(args) {
        Ok(f) => f,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(flags) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("latdec: {e}");
            e.exit_code()
        }
    }
}
