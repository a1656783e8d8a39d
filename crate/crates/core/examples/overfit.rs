//! Memorizes a 50-pair synthetic corpus with predict_and_explain.
//!
//! cargo run --release --example overfit -- [batch_size] [learning_rate] [max_epochs]

use std::ops::ControlFlow;
use std::time::Instant;

use esnli::autodiff::ParameterStore;
use esnli::corpus::{build_vocab, make_batches, synthetic, ExampleRecord, Vocabulary};
use esnli::models::{Model, ModelConfig, ModelError, Trainer, Variant};

/// Greedy decodes that reproduce the gold explanation token for token.
fn exact_decodes(model: &Model, store: &ParameterStore, records: &[ExampleRecord], vocab: &Vocabulary) -> Result<usize, ModelError> {
    let mut exact = 0;
    for batch in make_batches(records, 50, vocab) {
        let preds = model.predict(store, &batch)?;
        let gold = batch.explanation.as_ref().expect("training explanations");
        for (r, p) in preds.iter().enumerate() {
            exact += usize::from(p.reached_eos && p.explanation == gold.sequence(r));
        }
    }
    Ok(exact)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let batch_size: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(5);
    let lr: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.5);
    let epochs: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1000);

    let records = synthetic::overfit_corpus(50, 7);
    let vocab = build_vocab(&[&records], 1)?;
    let mut cfg = ModelConfig::new(Variant::PredictAndExplain);
    cfg.alpha = 0.6;
    cfg.training.batch_size = batch_size;
    cfg.training.learning_rate = lr;
    cfg.training.decay = 1.0;
    cfg.training.max_epochs = epochs;
    let (model, mut store) = Model::new(&cfg, vocab.len())?;
    let start = Instant::now();
    let mut exact = 0;
    let report = Trainer::new(&model, &vocab).train_with(&mut store, &records, &[], |s, params| {
        let acc = s.train.label_accuracy().unwrap_or(0.0);
        let ppl = s.train.perplexity().unwrap_or(f64::INFINITY);
        if s.epoch % 5 != 0 {
            return ControlFlow::Continue(());
        }
        exact = exact_decodes(&model, params, &records, &vocab).unwrap_or(0);
        println!(
            "epoch {:4}  {:6.1}s  acc {acc:.3}  ppl {ppl:.3}  exact {exact}/50",
            s.epoch,
            start.elapsed().as_secs_f64()
        );
        if acc >= 0.95 && ppl < 2.0 && exact >= 40 {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    let last = report.epochs.last().expect("at least one epoch");
    println!(
        "stopped after {} epochs in {:.1}s: train accuracy {:.3}, perplexity {:.3}, exact explanations {exact}/50",
        last.epoch,
        start.elapsed().as_secs_f64(),
        last.train.label_accuracy().unwrap_or(0.0),
        last.train.perplexity().unwrap_or(f64::INFINITY),
    );
    Ok(())
}
