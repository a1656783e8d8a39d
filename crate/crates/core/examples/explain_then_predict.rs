//! Two-stage pipeline: a seq2seq model writes an explanation from the
//! premise and hypothesis, then a second model reads only that explanation
//! and predicts the label.
//!
//! cargo run --release --example explain_then_predict -- [epochs]

use esnli::corpus::{build_vocab, make_batches, synthetic};
use esnli::models::{ExplainThenPredict, Model, ModelConfig, Trainer, Variant};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let records = synthetic::overfit_corpus(30, 4);
    let vocab = build_vocab(&[&records], 1)?;

    let epochs: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(40);
    let fit = |variant: Variant| -> Result<_, Box<dyn std::error::Error>> {
        let mut cfg = ModelConfig::new(variant);
        cfg.training.batch_size = 5;
        cfg.training.learning_rate = 0.5;
        cfg.training.decay = 1.0;
        cfg.training.max_epochs = epochs;
        let (model, mut store) = Model::new(&cfg, vocab.len())?;
        let report = Trainer::new(&model, &vocab).train(&mut store, &records, &[])?;
        println!("{variant}: {} epochs, stop {:?}", report.epochs.len(), report.stop);
        Ok((model, store))
    };
    let (generator, gen_params) = fit(Variant::ExplainSeq2seq)?;
    let (classifier, cls_params) = fit(Variant::ExplanationToLabel)?;

    let pipeline = ExplainThenPredict::new(&generator, &gen_params, &classifier, &cls_params)?;
    let batch = &make_batches(&records[..6], 6, &vocab)[0];
    for (record, p) in records.iter().zip(pipeline.predict(batch)?) {
        println!(
            "gold {:<13} predicted {:<13} {}",
            record.label.as_str(),
            p.label.as_str(),
            p.generated.explanation_tokens(&vocab).join(" ")
        );
    }
    Ok(())
}
