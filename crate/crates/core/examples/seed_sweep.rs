//! Trains one variant over several alpha values and seeds and summarizes
//! the per-seed metrics.
//!
//! cargo run --release --example seed_sweep -- [variant] [epochs]

use esnli::corpus::{build_vocab, synthetic, Sentence, Split};
use esnli::evalkit::{evaluate, EvalReport};
use esnli::models::{Model, ModelConfig, Trainer, Variant};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let variant: Variant = args.next().unwrap_or_else(|| "predict_and_explain".into()).parse()?;
    let epochs: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(60);

    let train = synthetic::overfit_corpus(40, 1);
    // scored on the training pairs themselves, with three references each
    let dev: Vec<_> = train[..12]
        .iter()
        .cloned()
        .map(|mut r| {
            r.split = Split::Validation;
            let e = r.explanations[0].raw.clone();
            r.explanations = vec![Sentence::new(e.clone()), Sentence::new(e.clone()), Sentence::new(e)];
            r
        })
        .collect();
    let vocab = build_vocab(&[&train], 1)?;

    for alpha in [0.2, 0.5, 0.8] {
        let mut seeds = Vec::new();
        for seed in [1, 2, 3] {
            let mut cfg = ModelConfig::tiny(variant);
            cfg.alpha = alpha;
            cfg.seed = seed;
            cfg.training.max_epochs = epochs;
            cfg.training.batch_size = 5;
            cfg.training.learning_rate = 0.5;
            cfg.training.decay = 1.0;
            let (model, mut store) = Model::new(&cfg, vocab.len())?;
            Trainer::new(&model, &vocab).train(&mut store, &train, &[])?;
            let mut eval = evaluate(&model, &store, &vocab, &dev, 16)?;
            eval.metrics.seed = seed;
            seeds.push(eval.metrics);
        }
        let report = EvalReport::from_seeds(variant, seeds)?;
        let show = |s: &Option<esnli::evalkit::Summary>| {
            s.as_ref().map(|s| format!("{:.3}±{:.3}", s.mean, s.stddev)).unwrap_or_else(|| "-".into())
        };
        println!(
            "alpha {alpha}: accuracy {}  perplexity {}  bleu {}",
            show(&report.accuracy),
            show(&report.perplexity),
            show(&report.bleu)
        );
    }
    Ok(())
}
