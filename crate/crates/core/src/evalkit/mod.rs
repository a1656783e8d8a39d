//! Metrics, significance testing, embedding export, probes and transfer
//! evaluation.

pub mod bleu;
mod embed;
mod metrics;
mod probe;
mod report;
pub mod stats;
mod transfer;

use thiserror::Error;

pub use bleu::{corpus_bleu, interannotator_bleu, model_bleu, reference_pair, BleuStats};
pub use embed::{export_embeddings, read_embeddings, write_embeddings, EmbeddingManifest, EmbeddingMatrix};
pub use metrics::{accuracy, perplexity, perplexity_from_nll};
pub use probe::{probe, LabeledFeatures, ProbeOptions, ProbeResult, ProbeSplits};
pub use report::{evaluate, CorrectnessSummary, EvalReport, Evaluation, Metric, SeedEval};
pub use stats::{t_critical_05, welch_t, Summary, WelchResult};
pub use transfer::{adapt_foreign, read_foreign, transfer_eval, ForeignOutcome, ForeignRecord, ForeignSource, TransferReport};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{0} is empty")]
    Empty(&'static str),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("candidate {0} has no references")]
    NoReferences(usize),
    #[error("record {pair_id:?} has {found} explanations, expected 3")]
    ExplanationCount { pair_id: String, found: usize },
    #[error("each sample needs at least 2 values, got {0}")]
    SampleTooSmall(usize),
    #[error("both samples have zero variance; the t statistic is undefined")]
    ZeroVariance,
    #[error("training data for the probe has a single class")]
    SingleClass,
    #[error("{dataset} file lacks a {column:?} column")]
    MissingColumn { dataset: &'static str, column: String },
    #[error("unknown label {label:?} on line {line}")]
    UnknownLabel { line: u64, label: String },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("bad embedding manifest: {0}")]
    Manifest(String),
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Model(#[from] crate::models::ModelError),
    #[error(transparent)]
    Autodiff(#[from] crate::autodiff::AutodiffError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
