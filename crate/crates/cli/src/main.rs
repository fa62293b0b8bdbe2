//! Command-line driver: simulate datasets, ingest tick data, fit and
//! evaluate hedging models, and emit plot-ready reports.
//!
//! Exit codes: 0 on success, 2 for input or configuration problems, 3 when
//! a model fit, training or evaluation fails.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use config::{ConfigOverrides, ExperimentConfig};
use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

/// Error wrapper that pins the exit code of model-stage failures.
#[derive(Debug)]
pub enum CliError {
    Model(String),
    Input(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Model(m) | CliError::Input(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    /// Classify a core error: numerical/fitting/evaluation problems are
    /// model errors (exit 3), everything else is an input problem (exit 2).
    pub fn from_core(e: deltabench_core::Error) -> anyhow::Error {
        use deltabench_core::Error as E;
        let wrapped = match &e {
            E::Fit(_) | E::Numerical(_) | E::State(_) | E::Evaluation(_) | E::Inversion(_) => {
                CliError::Model(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        };
        anyhow::Error::new(wrapped)
    }
}

#[derive(Parser)]
#[command(
    name = "deltabench",
    about = "Simulated option-hedging benchmark: simulate, ingest, run, report",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate paths, list option contracts and build sample tables.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
    /// Match option tick data against the underlying into sample tables.
    Ingest {
        #[arg(long)]
        config: PathBuf,
        /// Option trades CSV: timestamp_us,contract_id,price,volume.
        #[arg(long)]
        trades: PathBuf,
        /// Underlying ticks CSV: timestamp_us,price,volume.
        #[arg(long)]
        underlying: PathBuf,
        /// Contract metadata CSV: id,kind,strike,expiry.
        #[arg(long)]
        contracts: PathBuf,
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
    /// Fit the model roster (and train any requested networks), evaluate on
    /// the test sets and write the comparison table.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
    /// Emit plot-ready diagnostic CSVs from a finished run.
    Report {
        /// Run directory containing manifest.json.
        #[arg(long)]
        run_dir: PathBuf,
    },
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate { config, overrides } => {
            let cfg = ExperimentConfig::load(&config, &overrides)?;
            commands::cmd_simulate(&cfg)
        }
        Command::Ingest { config, trades, underlying, contracts, overrides } => {
            let cfg = ExperimentConfig::load(&config, &overrides)?;
            commands::cmd_ingest(&cfg, &trades, &underlying, &contracts)
        }
        Command::Run { config, overrides } => {
            let cfg = ExperimentConfig::load(&config, &overrides)?;
            commands::cmd_run(&cfg)
        }
        Command::Report { run_dir } => commands::cmd_report(&run_dir),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let model_error = err.chain().any(|cause| {
                matches!(cause.downcast_ref::<CliError>(), Some(CliError::Model(_)))
            });
            ExitCode::from(if model_error { 3 } else { 2 })
        }
    }
}
