mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use shockzone::Error;

#[derive(Parser)]
#[command(
    name = "shockzone",
    version,
    about = "Adaptive zoning experiments for 1D compressible flow"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Common {
    /// Config file (TOML or JSON).
    #[arg(long)]
    pub config: Option<String>,
    /// Overrides the seed in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Zone random staircase profiles and write a training dataset.
    GenerateData {
        #[command(flatten)]
        common: Common,
        /// Overrides the number of staircases requested.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Train the surrogate on a dataset.
    Train {
        #[command(flatten)]
        common: Common,
        /// Dataset written by `generate-data`.
        #[arg(long)]
        data: PathBuf,
        /// Overrides the number of epochs.
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Score a trained model on a dataset and on probe profiles.
    EvaluateModel {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Run one experiment; `--config` also accepts a preset such as
    /// `sod_weno5_uniform`.
    RunCase {
        #[command(flatten)]
        common: Common,
        /// Surrogate model for the dl_surrogate strategy.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Run uniform, elliptic and surrogate zoning on one case and compare
    /// their timings; `--config` also accepts a preset such as `sod_weno5`.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = commands::configure_threads().and_then(|()| match cli.command {
        Command::GenerateData { common, samples } => commands::generate_data(&common, samples),
        Command::Train {
            common,
            data,
            epochs,
        } => commands::train(&common, &data, epochs),
        Command::EvaluateModel {
            common,
            model,
            data,
        } => commands::evaluate_model(&common, &model, data.as_deref()),
        Command::RunCase { common, model } => commands::run_case(&common, model),
        Command::Compare { common, model } => commands::compare(&common, model),
    });
    match result {
        Ok(summary) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&summary).expect("summary serializes")
            );
            ExitCode::SUCCESS
        }
        Err(Error::Config { field, reason }) => {
            eprintln!(
                "{}",
                json!({ "error": "config", "field": field, "message": reason })
            );
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!(
                "{}",
                json!({ "error": "runtime", "message": e.to_string() })
            );
            ExitCode::from(1)
        }
    }
}
