use std::ops::ControlFlow;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{sgd_step, Graph, LrSchedule, ParameterStore};
use crate::corpus::{make_batches, Batch, ExampleRecord, Vocabulary};

use super::config::Variant;
use super::loss::LossBreakdown;
use super::model::Model;
use super::ModelError;

/// Teacher-forced totals over a set of batches.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub examples: usize,
    pub correct_labels: usize,
    pub token_nll: f64,
    pub tokens: usize,
    /// Sums of per-batch mean losses weighted by batch size.
    pub label_loss: f64,
    pub explanation_loss: f64,
    pub total_loss: f64,
}

impl Scores {
    pub fn label_accuracy(&self) -> Option<f64> {
        (self.examples > 0).then(|| self.correct_labels as f64 / self.examples as f64)
    }

    /// `exp` of the mean token NLL, EOS included.
    pub fn perplexity(&self) -> Option<f64> {
        (self.tokens > 0).then(|| (self.token_nll / self.tokens as f64).exp())
    }

    pub fn mean_loss(&self) -> LossBreakdown {
        let n = self.examples.max(1) as f64;
        LossBreakdown {
            label: self.label_loss / n,
            explanation: self.explanation_loss / n,
            total: self.total_loss / n,
        }
    }
}

/// Teacher-forced evaluation of `batches`.
pub fn score(model: &Model, store: &ParameterStore, batches: &[Batch]) -> Result<Scores, ModelError> {
    let mut s = Scores::default();
    for batch in batches {
        let mut g = Graph::new(store);
        let nodes = model.loss(&mut g, batch)?;
        accumulate(&mut s, &g, &nodes, batch);
    }
    Ok(s)
}

/// Statistics recorded after every epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub learning_rate: f64,
    pub train: Scores,
    pub validation: Option<Scores>,
    /// Largest pre-clipping gradient norm seen in the epoch.
    pub max_grad_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    MaxEpochs,
    LearningRateExhausted,
    Callback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    /// Epoch whose parameters were kept (1-based), by validation metric.
    pub best_epoch: Option<usize>,
    pub stop: StopReason,
}

/// Higher-is-better selection metric: label accuracy for classifying
/// variants, negative perplexity for the others.
pub fn selection_metric(variant: Variant, scores: &Scores) -> f64 {
    if variant.predicts_label() {
        scores.label_accuracy().unwrap_or(0.0)
    } else {
        -scores.perplexity().unwrap_or(f64::INFINITY)
    }
}

/// SGD training with per-epoch shuffling, gradient clipping and a decaying
/// learning rate.
pub struct Trainer<'a> {
    pub model: &'a Model,
    pub vocab: &'a Vocabulary,
}

impl<'a> Trainer<'a> {
    pub fn new(model: &'a Model, vocab: &'a Vocabulary) -> Self {
        Self { model, vocab }
    }

    pub fn train(
        &self,
        store: &mut ParameterStore,
        train: &[ExampleRecord],
        validation: &[ExampleRecord],
    ) -> Result<TrainReport, ModelError> {
        self.train_with(store, train, validation, |_, _| ControlFlow::Continue(()))
    }

    /// As [`Trainer::train`], calling `on_epoch` after each epoch; returning
    /// `Break` stops training with the current parameters.
    pub fn train_with(
        &self,
        store: &mut ParameterStore,
        train: &[ExampleRecord],
        validation: &[ExampleRecord],
        mut on_epoch: impl FnMut(&EpochStats, &ParameterStore) -> ControlFlow<()>,
    ) -> Result<TrainReport, ModelError> {
        if train.is_empty() {
            return Err(ModelError::EmptyBatch);
        }
        let cfg = &self.model.config.training;
        let mut rng = ChaCha8Rng::seed_from_u64(self.model.config.seed);
        let mut schedule = LrSchedule::new(cfg.learning_rate, cfg.decay, cfg.shrink, cfg.min_learning_rate);
        let val_batches = make_batches(validation, cfg.batch_size, self.vocab);
        let mut order: Vec<usize> = (0..train.len()).collect();
        let mut epochs = Vec::new();
        let mut best: Option<(f64, usize, ParameterStore)> = None;
        let mut stop = StopReason::MaxEpochs;
        for epoch in 1..=cfg.max_epochs {
            order.shuffle(&mut rng);
            let lr = schedule.current();
            let mut totals = Scores::default();
            let mut max_norm: f64 = 0.0;
            for chunk in order.chunks(cfg.batch_size) {
                let refs: Vec<&ExampleRecord> = chunk.iter().map(|&i| &train[i]).collect();
                let batch = Batch::from_records(&refs, self.vocab);
                let mut grads = {
                    let mut g = Graph::new(store);
                    let nodes = self.model.loss(&mut g, &batch)?;
                    accumulate(&mut totals, &g, &nodes, &batch);
                    g.backward(nodes.total)?
                };
                let norm = if cfg.max_grad_norm > 0.0 {
                    grads.clip_global_norm(cfg.max_grad_norm)
                } else {
                    grads.global_norm()
                };
                max_norm = max_norm.max(norm);
                sgd_step(store, &grads, lr)?;
            }
            let validation = if val_batches.is_empty() {
                None
            } else {
                Some(score(self.model, store, &val_batches)?)
            };
            let stats = EpochStats { epoch, learning_rate: lr, train: totals, validation, max_grad_norm: max_norm };
            schedule.end_epoch();
            if let Some(v) = &stats.validation {
                let metric = selection_metric(self.model.variant(), v);
                schedule.on_validation(metric);
                if best.as_ref().is_none_or(|(m, _, _)| metric > *m) {
                    best = Some((metric, epoch, store.clone()));
                }
            }
            let flow = on_epoch(&stats, store);
            epochs.push(stats);
            if flow.is_break() {
                stop = StopReason::Callback;
                best = None;
                break;
            }
            if schedule.exhausted() {
                stop = StopReason::LearningRateExhausted;
                break;
            }
        }
        let best_epoch = best.map(|(_, epoch, params)| {
            *store = params;
            epoch
        });
        Ok(TrainReport { epochs, best_epoch, stop })
    }
}

fn accumulate(s: &mut Scores, g: &Graph<'_>, nodes: &super::model::LossNodes, batch: &Batch) {
    let n = batch.len();
    let b = nodes.breakdown(g);
    s.examples += n;
    s.label_loss += b.label * n as f64;
    s.explanation_loss += b.explanation * n as f64;
    s.total_loss += b.total * n as f64;
    s.token_nll += g.value(nodes.token_nll).item();
    s.tokens += nodes.tokens;
    if let Some(d) = nodes.label_distribution {
        let d = g.value(d);
        s.correct_labels += batch.labels.iter().enumerate().filter(|(r, l)| d.argmax_row(*r) == l.index()).count();
    }
}
