//! `momentforge` command-line entry point.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::FileConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "momentforge", version, about = "Query reformulation and moment localization over clip features")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand. Unset flags fall back to the config
/// file, then to built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML file with default values for these flags
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub annotations: Option<PathBuf>,
    /// Directory holding one <clip_id>.mlf per clip
    #[arg(long, global = true)]
    pub features_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Use the offline mock client
    #[arg(long, global = true, conflicts_with = "live")]
    pub mock: bool,
    /// Use the HTTP client at MOMENTFORGE_API_URL
    #[arg(long, global = true)]
    pub live: bool,
    /// Window length in seconds [default: 40]
    #[arg(long, global = true)]
    pub window_s: Option<f64>,
    /// Window stride in seconds [default: 20]
    #[arg(long, global = true)]
    pub stride_s: Option<f64>,
    /// Segments per window [default: 16]
    #[arg(long, global = true)]
    pub segments: Option<usize>,
    /// Predictions kept per query [default: 5]
    #[arg(long, global = true)]
    pub top_k: Option<usize>,
    /// NMS IoU threshold [default: 0.5]
    #[arg(long, global = true)]
    pub nms: Option<f64>,
    /// Text embedding dimension [default: 256]
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    /// Text embedding hash seed [default: 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic corpus with planted events
    Synth(SynthArgs),
    /// Reformulate every annotated query into step-wise instructions
    Reformulate(ReformulateArgs),
    /// Localize every annotated query and write a prediction dump
    Localize(LocalizeArgs),
    /// Compute R@n, IoU=m recall for a prediction dump
    Evaluate(EvaluateArgs),
    /// Compare two metrics files side by side
    Compare(CompareArgs),
    /// Word-count statistics of a reformulated corpus
    Stats(StatsArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LayoutArg {
    Distinct,
    Ambiguous,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Seed of the corpus generator
    #[arg(long, default_value_t = 0)]
    pub synth_seed: u64,
    #[arg(long, default_value_t = 20)]
    pub clips: usize,
    #[arg(long, default_value_t = 100.0)]
    pub duration_s: f64,
    #[arg(long, default_value_t = 0.5)]
    pub step_s: f64,
    #[arg(long, default_value_t = 2)]
    pub events: usize,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, value_enum, default_value_t = LayoutArg::Distinct)]
    pub layout: LayoutArg,
}

#[derive(Debug, Args)]
pub struct ReformulateArgs {
    /// Model name sent to the endpoint [default: gpt-3.5-turbo]
    #[arg(long)]
    pub model: Option<String>,
    /// Sampling temperature [default: 0]
    #[arg(long)]
    pub temperature: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LocalizeMode {
    /// Localize each instruction step in turn under its relation constraint
    Stepwise,
    /// Localize the joined step descriptions as one query
    Joined,
}

#[derive(Debug, Args)]
pub struct LocalizeArgs {
    /// Reformulated corpus; without it the original query texts are used
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = LocalizeMode::Stepwise, requires = "corpus")]
    pub mode: LocalizeMode,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub predictions: PathBuf,
    /// Row label stored in the metrics file
    #[arg(long, default_value = "run")]
    pub label: String,
    /// Comma-separated ranks [default: 1,5]
    #[arg(long, value_delimiter = ',')]
    pub ranks: Option<Vec<usize>>,
    /// Comma-separated IoU thresholds [default: 0.3,0.5]
    #[arg(long, value_delimiter = ',')]
    pub iou: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Metrics file of the baseline
    pub base: PathBuf,
    /// Metrics file of the reformulated run
    pub reform: PathBuf,
    /// Row labels; defaults to the labels stored in the files
    #[arg(long, num_args = 2, value_names = ["BASE", "REFORM"])]
    pub labels: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub corpus: PathBuf,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.common.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let cfg = commands::Resolved::new(&cli.common, &file);
    match cli.command {
        Command::Synth(a) => commands::synth(&cfg, &a),
        Command::Reformulate(a) => commands::reformulate(&cfg, &file, &a),
        Command::Localize(a) => commands::localize(&cfg, &a),
        Command::Evaluate(a) => commands::evaluate(&cfg, &file, &a),
        Command::Compare(a) => commands::compare(&cfg, &a),
        Command::Stats(a) => commands::stats(&cfg, &a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
