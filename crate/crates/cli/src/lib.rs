//! Command-line front end: fidelity sweeps, channel reports and validation runs.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::io::Write;

use clap::{Parser, Subcommand};

use crate::commands::Report;
use crate::config::{Params, RunConfig};
pub use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "qst-memory", version, about = "Repeated-use state transfer through spin chains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Flat TOML file with any of the flag keys; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<std::path::PathBuf>,
    #[command(flatten)]
    pub params: Params,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Boundary amplitudes f11 and f1N over a time grid.
    Amplitudes,
    /// Average fidelity against the number of uses, one column per timing error.
    SweepUses,
    /// Average fidelity against chain length for uses 1..max_uses.
    SweepLength,
    /// Second-use map: damping parameters, Choi spectrum, capacity bound.
    Map,
    /// Concurrence after the first and second use over a time grid.
    Concurrence,
    /// Seeded property suites; exits with 3 on any failure.
    Validate,
}

pub fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let file = match &cli.config {
        Some(path) => Params::from_file(path)?,
        None => Params::default(),
    };
    RunConfig::resolve(cli.params.clone().over(file))
}

fn dispatch(command: Command, cfg: &RunConfig) -> Result<Report, CliError> {
    match command {
        Command::Amplitudes => commands::amplitudes(cfg),
        Command::SweepUses => commands::sweep_uses(cfg),
        Command::SweepLength => commands::sweep_length(cfg),
        Command::Map => commands::map(cfg),
        Command::Concurrence => commands::concurrence(cfg),
        Command::Validate => commands::validate(cfg),
    }
}

/// Runs the command and writes its output; validation failures surface as errors
/// after the report has been written.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve(cli)?;
    let report = match cfg.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CliError::Config(format!("jobs: {e}")))?
            .install(|| dispatch(cli.command, &cfg))?,
        None => dispatch(cli.command, &cfg)?,
    };
    let text = report.table.render(cfg.format);
    match &cfg.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    match report.failure {
        Some(f) => Err(CliError::Validation(f)),
        None => Ok(()),
    }
}
