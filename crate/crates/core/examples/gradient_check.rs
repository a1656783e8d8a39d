//! Central-difference gradient check of every model variant on a tiny
//! fixture.
//!
//! cargo run --release --example gradient_check -- [seed]

use esnli::autodiff::grad_check;
use esnli::corpus::{build_vocab, make_batches, synthetic};
use esnli::models::{Model, ModelConfig, Variant};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0);
    let records = synthetic::gradient_fixture();
    let vocab = build_vocab(&[&records], 1)?;
    let batch = &make_batches(&records, records.len(), &vocab)[0];

    for variant in Variant::ALL {
        let mut cfg = ModelConfig::tiny(variant);
        cfg.alpha = 0.4;
        cfg.seed = seed;
        let (model, mut store) = Model::new(&cfg, vocab.len())?;
        // generic evaluation point; default init leaves many gradients near zero
        store.resample_uniform(seed + 100, 1.0);
        let report = grad_check(&mut store, 2.5e-4, 1e-4, |g| model.loss(g, batch).map(|l| l.total))?;
        let worst = report.worst.as_ref().map(|(n, i)| format!("{n}[{i}]")).unwrap_or_default();
        println!(
            "{:<22} {} entries  max rel err {:.2e} at {worst}  {}",
            variant.as_str(),
            report.entries_checked,
            report.max_rel_error,
            if report.passed() { "ok" } else { "FAIL" }
        );
    }
    Ok(())
}
