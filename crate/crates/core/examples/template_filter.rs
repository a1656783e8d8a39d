//! Seeds a corpus with template explanations, then flags them with the
//! uninformative-template filter.
//!
//! cargo run --release --example template_filter -- [pairs] [fraction]

use std::collections::BTreeSet;

use esnli::corpus::synthetic;
use esnli::quality::{char_distance, filter_report_tsv, filter_uninformative, FilterSummary, MatchOptions, TemplateSet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(200);
    let fraction: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.1);

    println!("char_distance(\"kitten\", \"sitting\") = {}", char_distance("kitten", "sitting"));

    let templates = TemplateSet::default();
    let opts = MatchOptions::default();
    let corpus = synthetic::template_seeded_corpus(n, fraction, 5, &templates, &opts);
    let outcome = filter_uninformative(corpus.records, &templates, &opts);

    let flagged: BTreeSet<String> = outcome.flagged.iter().map(|f| f.record.pair_id.clone()).collect();
    let recalled = flagged.intersection(&corpus.seeded).count();
    println!(
        "{} templates, {} seeded, {} flagged, {} recalled, {} kept",
        templates.len(),
        corpus.seeded.len(),
        flagged.len(),
        recalled,
        outcome.kept.len()
    );
    let summary = FilterSummary::new(&outcome, &templates);
    for line in filter_report_tsv(&summary).lines().take(6) {
        println!("{line}");
    }
    Ok(())
}
