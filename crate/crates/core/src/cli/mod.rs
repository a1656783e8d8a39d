//! The `esnli` command line.

mod commands;
mod manifest;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use thiserror::Error;

use crate::corpus::{CorpusError, Split};
use crate::evalkit::{EvalError, ForeignSource, Metric};
use crate::models::{ModelError, Variant};
use crate::quality::QualityError;

pub use manifest::{content_hash, FileDigest, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "esnli", version, about = "Train and evaluate NLI models that explain their labels")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Directory searched for relative input paths that do not exist as given.
    #[arg(long, env = "ESNLI_DATA_DIR", global = true)]
    pub data_dir: Option<PathBuf>,
    /// Directory receiving every output file and the run manifest.
    #[arg(long, default_value = "out", global = true)]
    pub out: PathBuf,
}

impl Common {
    pub fn resolve(&self, path: &Path) -> PathBuf {
        match &self.data_dir {
            Some(dir) if path.is_relative() && !path.exists() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Delimited dataset file.
    #[arg(long)]
    pub data: PathBuf,
    /// `auto`, `canonical`, `esnli`, or a schema TOML file.
    #[arg(long, default_value = "auto")]
    pub schema: String,
    /// Split the rows belong to (train, dev, test).
    #[arg(long, default_value = "train")]
    pub split: Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Small dimensions that train in minutes on one core.
    Desk,
    /// Dimensions of the original large-scale experiments.
    Paper,
    /// Dimensions for gradient checks and smoke tests.
    Tiny,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Unit {
    Chars,
    Tokens,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Training data.
    #[arg(long)]
    pub train: PathBuf,
    /// Validation data used for model selection and the learning-rate schedule.
    #[arg(long)]
    pub validation: Option<PathBuf>,
    #[arg(long, default_value = "auto")]
    pub schema: String,
    /// Model config TOML; flags below override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub variant: Option<Variant>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Label-loss weights: a list `0.3,0.6` or a range `0.1:0.9:0.1`.
    #[arg(long)]
    pub alpha: Option<String>,
    /// Decoder hidden sizes to sweep, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub decoder_size: Vec<usize>,
    /// Seeds, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub seed: Vec<u64>,
    /// Run this many consecutive seeds starting at the first `--seed`.
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Existing vocabulary; built from the training data otherwise.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long, default_value_t = 15)]
    pub vocab_threshold: u64,
    /// Worker threads for the sweep (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a dataset and check every record against the quality rules.
    Validate {
        #[command(flatten)]
        data: DataArgs,
        /// Share of highlighted words an explanation must reuse.
        #[arg(long, default_value = "1/2")]
        highlight_fraction: String,
    },
    /// Flag records whose explanations match an uninformative template.
    FilterTemplates {
        #[command(flatten)]
        data: DataArgs,
        /// Template file; the built-in list otherwise.
        #[arg(long)]
        templates: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        threshold: usize,
        #[arg(long, value_enum, default_value = "chars")]
        unit: Unit,
    },
    /// Build a vocabulary from one or more datasets.
    BuildVocab {
        #[arg(long, required = true, num_args = 1..)]
        data: Vec<PathBuf>,
        #[arg(long, default_value = "auto")]
        schema: String,
        #[arg(long, default_value_t = 15)]
        threshold: u64,
    },
    /// Train one model per (alpha, decoder size, seed) point.
    Train(TrainArgs),
    /// Greedy labels and explanations for a dataset.
    Generate {
        /// Run directory written by `train`.
        #[arg(long)]
        model: PathBuf,
        /// Run directory of an explanation_to_label model; labels then come
        /// from classifying the generated explanations.
        #[arg(long)]
        classifier: Option<PathBuf>,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        max_len: Option<usize>,
        #[arg(long, default_value_t = 64)]
        batch_size: usize,
    },
    /// Accuracy, perplexity and BLEU over one or more trained seeds.
    Evaluate {
        #[arg(long, required = true, num_args = 1..)]
        model: Vec<PathBuf>,
        #[command(flatten)]
        data: DataArgs,
        /// Human judgments: TSV with predicted, gold, mentioned, required.
        #[arg(long)]
        judgments: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        window: usize,
        #[arg(long, default_value_t = 64)]
        batch_size: usize,
    },
    /// Export pooled sentence vectors from a trained encoder.
    Embed {
        #[arg(long)]
        model: PathBuf,
        /// One sentence per line.
        #[arg(long)]
        sentences: PathBuf,
        #[arg(long, default_value_t = 64)]
        batch_size: usize,
    },
    /// Logistic-regression probe on frozen features.
    Probe {
        /// TSV of `split, label, f1, f2, …`.
        #[arg(long, conflicts_with_all = ["model", "task"])]
        features: Option<PathBuf>,
        /// Run directory whose encoder embeds `--task` sentences.
        #[arg(long, requires = "task")]
        model: Option<PathBuf>,
        /// TSV of `split, label, sentence`.
        #[arg(long, requires = "model")]
        task: Option<PathBuf>,
        /// L2 strengths tried on validation, comma-separated.
        #[arg(long, value_delimiter = ',')]
        l2: Vec<f64>,
        #[arg(long, default_value_t = 300)]
        epochs: usize,
    },
    /// Label accuracy on a foreign NLI dataset without fine-tuning.
    TransferEval {
        #[arg(long, required = true, num_args = 1..)]
        model: Vec<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        source: ForeignSource,
        #[arg(long, default_value_t = 64)]
        batch_size: usize,
    },
    /// Welch's t-test between the per-seed values of two reports.
    Ttest {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value = "accuracy")]
        metric: Metric,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::FilterTemplates { .. } => "filter-templates",
            Command::BuildVocab { .. } => "build-vocab",
            Command::Train(_) => "train",
            Command::Generate { .. } => "generate",
            Command::Evaluate { .. } => "evaluate",
            Command::Embed { .. } => "embed",
            Command::Probe { .. } => "probe",
            Command::TransferEval { .. } => "transfer-eval",
            Command::Ttest { .. } => "ttest",
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Quality(#[from] QualityError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
            CliError::Corpus(_) => "corpus",
            CliError::Quality(_) => "quality",
            CliError::Model(_) => "model",
            CliError::Eval(_) => "evaluation",
            CliError::Json(_) => "json",
            CliError::Pool(_) => "thread-pool",
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({ "error": { "kind": self.kind(), "message": self.to_string() } })
    }
}

/// Runs a parsed command, returning its JSON summary.
pub fn execute(cli: Cli) -> Result<serde_json::Value, CliError> {
    commands::dispatch(&cli.common, cli.command)
}

/// Parses `args`, runs the command and prints its summary to stdout or a
/// JSON error to stderr. Returns the exit code: 0 on success, 2 for usage
/// errors, 1 for everything else.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let err = json!({ "error": { "kind": "usage", "message": e.to_string().trim_end() } });
            eprintln!("{err}");
            return 2;
        }
    };
    match execute(cli) {
        Ok(summary) => {
            let text = serde_json::to_string_pretty(&summary).unwrap_or_default();
            let _ = writeln!(std::io::stdout(), "{text}");
            0
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            if matches!(e, CliError::Usage(_)) {
                2
            } else {
                1
            }
        }
    }
}
