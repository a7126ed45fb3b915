//! The `streetcrime` command-line pipeline.
//!
//! `sample -> fetch -> (external segmentation) -> aggregate -> train | sweep
//! | importance -> report`. Every command reads an optional TOML config,
//! lets flags override it, writes under `--out` and echoes the effective
//! configuration there as `effective_config.toml`.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod points;

pub use config::PipelineConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] streetcrime::Error),
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Parser)]
#[command(name = "streetcrime", version, about = "Street-view features and community crime rates")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Suppress progress messages on stderr.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML pipeline config.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides paths.out).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample points along road centerlines and subsample per community.
    Sample(SampleArgs),
    /// Build the image manifest and download street-view images.
    Fetch(FetchArgs),
    /// Join image features and crimes into one row per community.
    Aggregate(AggregateArgs),
    /// Fit one model and report train and validation metrics.
    Train(TrainArgs),
    /// Run a hyperparameter sweep, or the full `paper-suite`.
    Sweep(SweepArgs),
    /// Rank features by importance for a tree-based model.
    Importance(ImportanceArgs),
    /// Summarize sweep results found in a directory.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub centerlines: Option<PathBuf>,
    #[arg(long)]
    pub boundaries: Option<PathBuf>,
    /// Metres between consecutive samples.
    #[arg(long)]
    pub spacing: Option<f64>,
    #[arg(long)]
    pub per_community: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub points: Option<PathBuf>,
    /// Existing manifest to resume (default: <out>/manifest.jsonl).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Only write the manifest; make no requests.
    #[arg(long)]
    pub offline: bool,
    #[arg(long)]
    pub max_concurrent: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub boundaries: Option<PathBuf>,
    #[arg(long)]
    pub centerlines: Option<PathBuf>,
    #[arg(long)]
    pub crime: Option<PathBuf>,
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub population: Option<PathBuf>,
    #[arg(long)]
    pub points: Option<PathBuf>,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// pixel_fraction or image_presence.
    #[arg(long)]
    pub mode: Option<String>,
    /// population, area_km2 or road_length_km.
    #[arg(long)]
    pub denominator: Option<String>,
    #[arg(long)]
    pub year: Option<i32>,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Dataset CSV written by `aggregate`.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Model kind (see `--model help`).
    #[arg(long, default_value = "linear")]
    pub model: String,
    /// Full model spec as JSON; overrides --model.
    #[arg(long)]
    pub spec: Option<String>,
    /// Hyperparameter override, e.g. `--set max_depth=4`.
    #[arg(long = "set", value_name = "NAME=VALUE")]
    pub set: Vec<String>,
    /// loo, kfold:K or holdout:FRACTION.
    #[arg(long)]
    pub protocol: Option<String>,
    /// Seed for folds and forests (overrides eval.seed).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Dataset CSV written by `aggregate`.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Built-in sweep name, or `paper-suite` for all seven.
    #[arg(long, default_value = "paper-suite")]
    pub sweep: String,
    /// Custom comma-separated grid replacing the built-in one.
    #[arg(long, value_delimiter = ',')]
    pub values: Option<Vec<f64>>,
    /// loo, kfold:K or holdout:FRACTION.
    #[arg(long)]
    pub protocol: Option<String>,
    /// Seed for folds and forests (overrides eval.seed).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Keep only the top N rows of importance tables.
    #[arg(long)]
    pub top: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ImportanceArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Keep only the N most important features.
    #[arg(long)]
    pub top: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub common: Common,
    /// Directory holding `<sweep>.json` results (default: the output dir).
    #[arg(long)]
    pub from: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
    run(cli)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let threads = cli.threads;
    let quiet = cli.quiet;
    let go = move || commands::dispatch(cli.command, quiet);
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?
            .install(go),
        None => go(),
    }
}
