//! Encodes one premise/hypothesis pair and prints the attention weights a
//! random query puts on each token.
//!
//! cargo run --example attention_weights

use esnli::autodiff::{Graph, ParameterStore, Tensor};
use esnli::corpus::{build_vocab, make_batches, ExampleRecord, Label, Split};
use esnli::layers::{BiLstmEncoder, DualAttention, Embedding, DEFAULT_MAX_ATTENDED};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let records = vec![ExampleRecord::new(
        "1",
        Split::Train,
        "A woman rides a red bicycle in the city.",
        "A person is cycling.",
        Label::Entailment,
        &["Riding a bicycle is cycling."],
    )];
    let vocab = build_vocab(&[&records], 1)?;
    let batch = &make_batches(&records, 1, &vocab)[0];

    let mut store = ParameterStore::new(3);
    let emb = Embedding::new(&mut store, "emb", vocab.len(), 8)?;
    let enc = BiLstmEncoder::new(&mut store, "enc", 8, 6)?;
    let att = DualAttention::new(&mut store, "att", enc.output_dim(), 10, 8, 6, DEFAULT_MAX_ATTENDED)?;
    store.resample_uniform(4, 1.0);

    let mut g = Graph::new(&store);
    let premise = enc.encode(&mut g, &emb, &batch.premise)?;
    let hypothesis = enc.encode(&mut g, &emb, &batch.hypothesis)?;
    let prepared = att.prepare(&mut g, &premise, &hypothesis)?;
    let query = g.input(Tensor::new(vec![1, 10], (0..10).map(|i| (i as f64 * 0.7).sin()).collect())?);
    let step = att.step(&mut g, &prepared, query)?;

    for (name, record_side, weights) in [
        ("premise", &records[0].premise, step.premise_weights),
        ("hypothesis", &records[0].hypothesis, step.hypothesis_weights),
    ] {
        println!("{name}:");
        for (tok, w) in record_side.tokens.iter().zip(g.value(weights).row_slice(0)) {
            println!("  {tok:<10} {w:.4}");
        }
    }
    println!("context width {}", att.context_dim());
    Ok(())
}
