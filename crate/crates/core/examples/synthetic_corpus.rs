//! Writes a small synthetic train/dev pair in the canonical TSV layout.
//!
//! cargo run --example synthetic_corpus -- <out-dir> [pairs]

use std::fs::File;
use std::path::PathBuf;

use esnli::corpus::{synthetic, write_canonical, Sentence, Split};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "synthetic".into()));
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(60);
    std::fs::create_dir_all(&dir)?;

    let train = synthetic::overfit_corpus(n, 7);
    write_canonical(File::create(dir.join("train.tsv"))?, &train)?;

    // dev rows carry three explanations each
    let dev: Vec<_> = synthetic::overfit_corpus(n / 3 + 3, 8)
        .into_iter()
        .map(|mut r| {
            r.split = Split::Validation;
            r.pair_id = format!("dev-{}", r.pair_id);
            let e = r.explanations[0].raw.clone();
            r.explanations = vec![Sentence::new(e.clone()), Sentence::new(e.clone()), Sentence::new(e)];
            r
        })
        .collect();
    write_canonical(File::create(dir.join("dev.tsv"))?, &dev)?;
    println!("wrote {} train and {} dev pairs to {}", train.len(), dev.len(), dir.display());
    Ok(())
}
