//! The five model variants, their joint objective, decoding and training.

mod config;
mod io;
mod loss;
mod model;
mod pipeline;
mod train;

use thiserror::Error;

use crate::autodiff::AutodiffError;

pub use config::{ModelConfig, TrainingConfig, Variant};
pub use io::{load_checkpoint, save_checkpoint};
pub use loss::{total_loss, LossBreakdown};
pub use model::{LossNodes, Model, Prediction};
pub use pipeline::{ExplainThenPredict, PipelinePrediction};
pub use train::{score, selection_metric, EpochStats, Scores, StopReason, TrainReport, Trainer};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("alpha must lie in [0, 1], got {0}")]
    Alpha(f64),
    #[error("losses must be non-negative (label {label}, explanation {explanation})")]
    NegativeLoss { label: f64, explanation: f64 },
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("checkpoint was written for config {found}, expected {expected}")]
    ConfigMismatch { expected: String, found: String },
    #[error("a sentence in the batch has no tokens")]
    EmptySentence,
    #[error("the batch is empty")]
    EmptyBatch,
    #[error("training and explanation classification need a gold explanation for every record")]
    MissingExplanation,
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
