//! Command implementations behind the `tailindex` binary.

#![allow(clippy::needless_range_loop)]

pub mod args;
mod commands;
mod data;

use args::{Cli, Command};
use std::path::PathBuf;
use tailindex::ErrorKind;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] tailindex::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid {field}: {reason}")]
    Usage { field: &'static str, reason: String },
}

impl CliError {
    pub fn usage(field: &'static str, reason: impl Into<String>) -> Self {
        CliError::Usage {
            field,
            reason: reason.into(),
        }
    }

    /// 2 for invalid input, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.kind() == ErrorKind::Numerical => 3,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn run(cli: Cli) -> CliResult<Vec<PathBuf>> {
    let job = move || match &cli.command {
        Command::Index(a) => commands::index::run(a, &cli.out_dir),
        Command::Pipeline(a) => commands::pipeline::run(a, &cli.out_dir),
        Command::Extremal(a) => commands::extremal::run(a, &cli.out_dir),
        Command::Simulate(a) => commands::simulate::run(a, &cli.out_dir),
        Command::Fit(a) => commands::fit::run(a, &cli.out_dir),
    };
    match cli.threads {
        Some(0) => Err(CliError::usage("threads", "must be at least 1")),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::usage("threads", e.to_string()))?
            .install(job),
        None => job(),
    }
}
