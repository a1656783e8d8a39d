//! Runs the annotation rules over a handful of hand-written records and
//! prints the violation table.
//!
//! cargo run --example validate_records

use esnli::corpus::{ExampleRecord, Label, Split};
use esnli::quality::{validate_record, violations_tsv};
use num_rational::Ratio;

fn main() {
    let records = vec![
        ExampleRecord::new("good", Split::Train, "A man sings on stage.", "A man sings.", Label::Entailment, &["A man on stage sings, so he sings."])
            .with_highlights(vec![1, 2], vec![1, 2]),
        ExampleRecord::new("too-short", Split::Train, "A man sings.", "Nobody sings.", Label::Contradiction, &["man sings"])
            .with_highlights(vec![1], vec![0]),
        ExampleRecord::new("copy", Split::Train, "A dog runs.", "A dog runs.", Label::Entailment, &["A dog runs."])
            .with_highlights(vec![1], vec![1]),
        ExampleRecord::new("neutral", Split::Train, "A cat sleeps.", "A cat is tired.", Label::Neutral, &["Sleeping cats are not always tired."]),
    ];
    let half = Ratio::new(1, 2);
    let violations: Vec<_> = records.iter().flat_map(|r| validate_record(r, half)).collect();
    print!("{}", violations_tsv(&violations));
    println!("{} violations over {} records", violations.len(), records.len());
}
