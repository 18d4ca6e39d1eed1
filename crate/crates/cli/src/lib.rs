//! `gpucb-bench`: validate configs, run seeded GP-UCB suites, sweep one
//! configuration key, and report regret-rate and bound audits.

pub mod layout;
pub mod report;
pub mod suite;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use gpucb::ExperimentConfig;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// Report finished with at least one FAIL row, or an I/O failure.
    pub const FAILED: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const NUMERIC: i32 = 3;
    pub const INSUFFICIENT: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{0}")]
    Insufficient(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Numeric(_) => exit::NUMERIC,
            CliError::Insufficient(_) => exit::INSUFFICIENT,
            CliError::Io(_) => exit::FAILED,
        }
    }
}

impl From<gpucb::Error> for CliError {
    fn from(e: gpucb::Error) -> Self {
        match &e {
            gpucb::Error::Io(_) => CliError::Io(e.to_string()),
            gpucb::Error::Insufficient(_) => CliError::Insufficient(e.to_string()),
            _ if e.is_numeric() => CliError::Numeric(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "gpucb-bench", version, about = "Seeded GP-UCB experiment harness")]
pub struct Cli {
    /// Worker threads for seed-level parallelism (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a config and check its invariants.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run every seed of a config and write traces.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the config once per value of one scalar key.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit exponents and audit bounds over a horizon sweep.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    ExperimentConfig::parse(&text, &path.display().to_string()).map_err(|e| CliError::Config(e.to_string()))
}

fn configure_threads(jobs: Option<usize>) {
    #[cfg(feature = "parallel")]
    if let Some(n) = jobs {
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = jobs;
}

/// Runs one command and returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    configure_threads(cli.jobs);
    let result = match cli.command {
        Command::Validate { config } => load_config(&config).map(|c| {
            println!("ok {} ({} seeds, digest {})", config.display(), c.seeds.len(), c.digest());
            exit::OK
        }),
        Command::Run { config, out } => {
            load_config(&config).and_then(|c| suite::run_to_dir(&c, &out).map(|_| exit::OK))
        }
        Command::Sweep {
            config,
            axis,
            values,
            out,
        } => load_config(&config).and_then(|c| suite::sweep_to_dir(&c, &axis, &values, &out)),
        Command::Report { out } => report::report_dir(&out).map(|r| {
            print!("{}", r.text);
            if r.all_pass {
                exit::OK
            } else {
                exit::FAILED
            }
        }),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
