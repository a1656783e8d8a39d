//! Corpus BLEU between annotators and for a toy set of generated
//! explanations.
//!
//! cargo run --example bleu_score

use esnli::corpus::{tokenize, ExampleRecord, Label, Split};
use esnli::evalkit::{corpus_bleu, interannotator_bleu, model_bleu, BleuStats};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let records = vec![
        ExampleRecord::new(
            "1",
            Split::Test,
            "A man plays a guitar on stage.",
            "A man is playing music.",
            Label::Entailment,
            &["Playing a guitar is playing music.", "A guitar makes music.", "The man plays guitar, which is music."],
        ),
        ExampleRecord::new(
            "2",
            Split::Test,
            "Two dogs run in a field.",
            "The dogs are sleeping.",
            Label::Contradiction,
            &["Dogs can not run and sleep at once.", "Running dogs are not sleeping.", "The dogs run so they are awake."],
        ),
    ];
    println!("inter-annotator BLEU: {:.4}", interannotator_bleu(&records)?);

    let generated: Vec<Vec<String>> =
        ["playing a guitar is playing music .", "dogs that run are not sleeping ."].iter().map(|s| tokenize(s)).collect();
    println!("model BLEU:           {:.4}", model_bleu(&generated, &records)?);

    let cand = vec![vec!["the", "cat", "sat"]];
    let refs = vec![vec![vec!["the", "cat", "sat", "down"]]];
    let stats = BleuStats::sentence(&cand[0], &refs[0]);
    println!("sentence stats: {stats:?}");
    println!("corpus BLEU of one sentence: {:.4}", corpus_bleu(&cand, &refs)?);
    Ok(())
}
