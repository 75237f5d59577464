//! Command-line front end: each pipeline stage reads the previous stage's
//! files from one output directory and writes its own next to them.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod svg;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::{PipelineConfig, RunArgs};
use error::CliError;
use output::RunDir;

#[derive(Debug, Parser)]
#[command(name = "hrv-affect", version, about = "ECG/PPG heart-rate-variability features, variance and affect classification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic canonical dataset.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Reseeds subject i with a stream derived from this seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Convert a WESAD export to the canonical layout.
    AdaptWesad {
        #[arg(long)]
        raw: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convert a CASE export to the canonical layout.
    AdaptCase {
        #[arg(long)]
        raw: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Filter, window and compute features into features.csv.
    Extract(RunArgs),
    /// ECG vs PPG feature differences and per-state distributions.
    Variance(RunArgs),
    /// Cross-validate, hold-out score and store the tree model.
    TrainEval(RunArgs),
    /// Shapley feature importance of the stored model on the hold-out.
    Importance(RunArgs),
    /// Aggregate every stage into run_summary.json.
    Report(RunArgs),
}

fn stage(args: &RunArgs) -> Result<(PipelineConfig, RunDir), CliError> {
    let cfg = PipelineConfig::resolve(args)?;
    let run = RunDir::open(&args.out, &cfg, args.force)?;
    Ok((cfg, run))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth { spec, out, seed } => commands::synth(&spec, &out, seed),
        Command::AdaptWesad { raw, out } => commands::adapt(&raw, &out, false),
        Command::AdaptCase { raw, out } => commands::adapt(&raw, &out, true),
        Command::Extract(a) => {
            let (cfg, run) = stage(&a)?;
            commands::extract(&cfg, &run)
        }
        Command::Variance(a) => {
            let (_, run) = stage(&a)?;
            commands::variance(&run)
        }
        Command::TrainEval(a) => {
            let (cfg, run) = stage(&a)?;
            commands::train_eval(&cfg, &run)
        }
        Command::Importance(a) => {
            let (cfg, run) = stage(&a)?;
            commands::importance(&cfg, &run)
        }
        Command::Report(a) => {
            let (cfg, run) = stage(&a)?;
            commands::report(&cfg, &run)
        }
    }
}
