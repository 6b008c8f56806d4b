use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sarv_core::models::Preset;
use sarv_core::nn::Precision;

use crate::config::{Overrides, ScheduleKind};

#[derive(Debug, Parser)]
#[command(name = "sarv", version, about = "Sentiment classification for Persian product reviews")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize, tokenize and encode a corpus; write the length histogram.
    Preprocess,
    /// Split encoded records into train/test shards.
    Shard,
    /// Train a model on the shards and write a checkpoint and report.
    Train,
    /// Score a checkpoint on a shard manifest.
    Eval {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Manifest to score; defaults to the test split.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Classify raw text, one review per line, from a file or stdin.
    Predict {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Count labels per product category in a corpus.
    Stats,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScheduleArg {
    Constant,
    Exp,
    Plateau,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PrecisionArg {
    Single,
    Double,
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    s.to_ascii_uppercase().replace('-', "_").parse().map_err(|e: sarv_core::Error| e.to_string())
}

fn parse_classes(s: &str) -> Result<usize, String> {
    match s {
        "2" => Ok(2),
        "3" => Ok(3),
        _ => Err(format!("expected 2 or 3, got `{s}`")),
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,
    #[arg(long, global = true)]
    pub embeddings: Option<PathBuf>,
    #[arg(long, global = true)]
    pub stopwords: Option<PathBuf>,
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_parser = parse_preset)]
    pub preset: Option<Preset>,
    #[arg(long, global = true, value_parser = parse_classes)]
    pub classes: Option<usize>,
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    #[arg(long, global = true)]
    pub batch_size: Option<usize>,
    #[arg(long, global = true)]
    pub lr: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub lr_schedule: Option<ScheduleArg>,
    #[arg(long, global = true)]
    pub dropout: Option<f64>,
    #[arg(long, global = true)]
    pub shard_size: Option<usize>,
    #[arg(long, global = true)]
    pub split: Option<f64>,
    /// Falls back to the SARV_SEED environment variable.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Undersample the training split to the minority class count.
    #[arg(long, global = true)]
    pub rus: bool,
    #[arg(long, global = true, value_enum)]
    pub precision: Option<PrecisionArg>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
}

impl From<RunArgs> for Overrides {
    fn from(a: RunArgs) -> Self {
        Overrides {
            corpus: a.corpus,
            embeddings: a.embeddings,
            stopwords: a.stopwords,
            config: a.config,
            preset: a.preset,
            classes: a.classes,
            epochs: a.epochs,
            batch_size: a.batch_size,
            lr: a.lr,
            lr_schedule: a.lr_schedule.map(|s| match s {
                ScheduleArg::Constant => ScheduleKind::Constant,
                ScheduleArg::Exp => ScheduleKind::Exp,
                ScheduleArg::Plateau => ScheduleKind::Plateau,
            }),
            dropout: a.dropout,
            shard_size: a.shard_size,
            split: a.split,
            seed: a.seed,
            rus: a.rus,
            precision: a.precision.map(|p| match p {
                PrecisionArg::Single => Precision::Single,
                PrecisionArg::Double => Precision::Double,
            }),
            out_dir: a.out_dir,
        }
    }
}
