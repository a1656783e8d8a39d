//! Scores an NLI label model on SICK-E style rows it was never trained on.
//!
//! cargo run --release --example transfer

use esnli::corpus::{build_vocab, synthetic};
use esnli::evalkit::{read_foreign, transfer_eval, ForeignSource};
use esnli::models::{Model, ModelConfig, Trainer, Variant};

const SICK: &str = "pair_ID\tsentence_A\tsentence_B\tentailment_label
1\tA man is sleeping in the park\tA man is asleep\tENTAILMENT
2\tA dog runs across the road\tA dog is sleeping\tCONTRADICTION
3\tA woman is singing\tA woman is singing a song for a friend\tNEUTRAL
4\tTwo kids play in the sand\tNobody is playing\tCONTRADICTION
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let records = synthetic::overfit_corpus(40, 2);
    let vocab = build_vocab(&[&records], 1)?;
    let mut cfg = ModelConfig::tiny(Variant::PredictAndExplain);
    cfg.training.max_epochs = 3;
    let (model, mut store) = Model::new(&cfg, vocab.len())?;
    Trainer::new(&model, &vocab).train(&mut store, &records, &[])?;

    let outcome = read_foreign(SICK.as_bytes(), ForeignSource::SickE)?;
    for r in &outcome.records {
        println!("{}  {:?}  {} / {}", r.pair_id, r.label, r.premise, r.hypothesis);
    }
    let report = transfer_eval(&model, &store, &vocab, &outcome, ForeignSource::SickE, 8)?;
    println!("{} examples, accuracy {:.3}", report.examples, report.accuracy);
    Ok(())
}
