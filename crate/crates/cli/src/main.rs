//! `sparsequbo`: run binary sparse coding experiments from a config file.

mod commands;
mod config;
mod inputs;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{CommonArgs, ExperimentConfig};

/// A file or directory named by the config or flags does not exist.
#[derive(Debug)]
pub struct MissingInput(pub PathBuf);

impl fmt::Display for MissingInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "input not found: {}", self.0.display())
    }
}

impl std::error::Error for MissingInput {}

#[derive(Debug, Parser)]
#[command(name = "sparsequbo", version, about = "Binary sparse coding as QUBO")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Learn a dictionary from the patches of one image.
    LearnDict(CommonArgs),
    /// Write one QUBO file per patch.
    BuildQubo(CommonArgs),
    /// Sample every patch QUBO and report against the exact optimum.
    Solve(CommonArgs),
    /// Iterated warm starting per patch.
    WarmStart(CommonArgs),
    /// Reverse-anneal chains per patch and anneal fraction.
    Qemc(CommonArgs),
    /// Reassemble the image from per-patch codes.
    Reconstruct {
        #[command(flatten)]
        common: CommonArgs,
        /// Run directory of `solve`, `warm-start` or one `qemc` fraction to
        /// take codes from; codes are sampled afresh when absent.
        #[arg(long)]
        from: Option<PathBuf>,
    },
    /// Verify run directories and print their reports.
    Report {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::LearnDict(args) => commands::learn_dict(&ExperimentConfig::resolve(&args)?),
        Command::BuildQubo(args) => commands::build_qubo_files(&ExperimentConfig::resolve(&args)?),
        Command::Solve(args) => commands::solve(&ExperimentConfig::resolve(&args)?),
        Command::WarmStart(args) => commands::warm_start(&ExperimentConfig::resolve(&args)?),
        Command::Qemc(args) => commands::qemc(&ExperimentConfig::resolve(&args)?),
        Command::Reconstruct { common, from } => {
            commands::reconstruct(&ExperimentConfig::resolve(&common)?, from.as_deref())
        }
        Command::Report { runs } => commands::report(&runs),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.chain().any(|e| e.is::<MissingInput>()) {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
