use serde::{Deserialize, Serialize};

use crate::autodiff::ParameterStore;
use crate::corpus::{make_batches, ExampleRecord, Vocabulary};
use crate::models::{score, Model, Prediction, Variant};
use crate::quality::CorrectnessReport;

use super::bleu::model_bleu;
use super::stats::Summary;
use super::EvalError;

/// Metrics of one trained model on one record set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedEval {
    pub seed: u64,
    pub accuracy: Option<f64>,
    pub perplexity: Option<f64>,
    pub bleu: Option<f64>,
}

/// Predictions plus metrics from [`evaluate`].
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub metrics: SeedEval,
    pub predictions: Vec<Prediction>,
}

/// Runs a model over `records`.
///
/// Accuracy is reported for labelling variants. Perplexity is the
/// teacher-forced perplexity of the first explanation, EOS included, for
/// generating variants. BLEU scores greedy explanations against the first
/// two explanations and needs every record to carry exactly three.
pub fn evaluate(
    model: &Model,
    store: &ParameterStore,
    vocab: &Vocabulary,
    records: &[ExampleRecord],
    batch_size: usize,
) -> Result<Evaluation, EvalError> {
    if records.is_empty() {
        return Err(EvalError::Empty("evaluation records"));
    }
    let variant = model.variant();
    let batches = make_batches(records, batch_size, vocab);
    let mut predictions = Vec::with_capacity(records.len());
    for b in &batches {
        predictions.extend(model.predict(store, b)?);
    }
    let accuracy = variant.predicts_label().then(|| {
        let hits = predictions.iter().zip(records).filter(|(p, r)| p.label == Some(r.label)).count();
        hits as f64 / records.len() as f64
    });
    let has_targets = records.iter().all(|r| r.explanation().is_some());
    let perplexity = if variant.generates() && has_targets {
        score(model, store, &batches)?.perplexity()
    } else {
        None
    };
    let bleu = if variant.generates() && records.iter().all(|r| r.explanations.len() == 3) {
        let generated: Vec<Vec<String>> = predictions.iter().map(|p| p.explanation_tokens(vocab)).collect();
        Some(model_bleu(&generated, records)?)
    } else {
        None
    };
    Ok(Evaluation {
        metrics: SeedEval { seed: model.config.seed, accuracy, perplexity, bleu },
        predictions,
    })
}

/// Human correctness bookkeeping for the first `window` predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectnessSummary {
    pub window: usize,
    pub label_accuracy: f64,
    pub explanation_score: Option<f64>,
}

impl From<&CorrectnessReport> for CorrectnessSummary {
    fn from(r: &CorrectnessReport) -> Self {
        Self {
            window: r.window,
            label_accuracy: r.label_accuracy_f64(),
            explanation_score: r.explanation_score_f64(),
        }
    }
}

/// Per-seed metrics with their mean and sample standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub variant: Variant,
    pub seeds: Vec<SeedEval>,
    pub accuracy: Option<Summary>,
    pub perplexity: Option<Summary>,
    pub bleu: Option<Summary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correctness: Option<CorrectnessSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Accuracy,
    Perplexity,
    Bleu,
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "accuracy" => Ok(Metric::Accuracy),
            "perplexity" => Ok(Metric::Perplexity),
            "bleu" => Ok(Metric::Bleu),
            other => Err(format!("unknown metric {other:?}")),
        }
    }
}

impl EvalReport {
    /// Aggregates a metric only when every seed reports it.
    pub fn from_seeds(variant: Variant, seeds: Vec<SeedEval>) -> Result<Self, EvalError> {
        if seeds.is_empty() {
            return Err(EvalError::Empty("seed list"));
        }
        let summarize = |f: fn(&SeedEval) -> Option<f64>| -> Result<Option<Summary>, EvalError> {
            seeds.iter().map(f).collect::<Option<Vec<f64>>>().map(Summary::new).transpose()
        };
        Ok(Self {
            variant,
            accuracy: summarize(|s| s.accuracy)?,
            perplexity: summarize(|s| s.perplexity)?,
            bleu: summarize(|s| s.bleu)?,
            seeds,
            correctness: None,
        })
    }

    pub fn metric(&self, m: Metric) -> Option<&Summary> {
        match m {
            Metric::Accuracy => self.accuracy.as_ref(),
            Metric::Perplexity => self.perplexity.as_ref(),
            Metric::Bleu => self.bleu.as_ref(),
        }
    }
}
