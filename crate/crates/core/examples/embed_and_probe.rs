//! Trains a small label model, exports sentence embeddings and fits a
//! logistic probe that tells sleeping sentences from moving ones.
//!
//! cargo run --release --example embed_and_probe

use esnli::corpus::{build_vocab, synthetic, ExampleRecord, Label, Split};
use esnli::evalkit::{export_embeddings, probe, LabeledFeatures, ProbeOptions, ProbeSplits};
use esnli::models::{Model, ModelConfig, Trainer, Variant};

const SUBJECTS: [&str; 6] = ["a man", "a woman", "the dog", "two kids", "a child", "an old man"];
const SLEEPING: [&str; 3] = ["is sleeping", "naps on a bench", "is asleep"];
const MOVING: [&str; 3] = ["is running", "rides a bike", "walks fast"];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let records = synthetic::overfit_corpus(30, 11);
    let extra = [ExampleRecord::new("words", Split::Train, &SUBJECTS.join(" "), &[SLEEPING, MOVING].concat().join(" "), Label::Neutral, &[])];
    let vocab = build_vocab(&[&records, &extra], 1)?;
    let mut cfg = ModelConfig::new(Variant::PredictAndExplain);
    cfg.training.max_epochs = 2;
    let (model, mut store) = Model::new(&cfg, vocab.len())?;
    Trainer::new(&model, &vocab).train(&mut store, &records, &[])?;

    let mut sentences = Vec::new();
    let mut rows = Vec::new();
    for (i, s) in SUBJECTS.iter().enumerate() {
        for (label, verbs) in [SLEEPING, MOVING].iter().enumerate() {
            for v in verbs.iter() {
                sentences.push(format!("{s} {v}"));
                rows.push((i, label));
            }
        }
    }
    let matrix = export_embeddings(&model, &store, &vocab, &sentences, 16)?;
    println!("{} sentences embedded into {} dimensions", matrix.rows, matrix.dim);

    let mut splits = ProbeSplits { classes: vec!["sleeping".into(), "moving".into()], ..Default::default() };
    // held-out subjects
    for (r, &(subject, label)) in rows.iter().enumerate() {
        let part: &mut LabeledFeatures = match subject {
            4 => &mut splits.validation,
            5 => &mut splits.test,
            _ => &mut splits.train,
        };
        part.push(matrix.row(r).to_vec(), label);
    }
    let result = probe(&splits, &ProbeOptions::default())?;
    println!("chosen l2 {}: validation {:.3}, test {:.3}", result.l2, result.validation_accuracy, result.test_accuracy);
    Ok(())
}
