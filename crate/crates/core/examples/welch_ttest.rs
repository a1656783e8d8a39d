//! Welch's t-test on two sets of per-seed accuracies.
//!
//! cargo run --example welch_ttest -- 0.81,0.82,0.80 0.84,0.85,0.86

use esnli::evalkit::{welch_t, Summary};

fn parse(arg: Option<String>, default: &[f64]) -> Result<Vec<f64>, std::num::ParseFloatError> {
    match arg {
        Some(s) => s.split(',').map(str::parse).collect(),
        None => Ok(default.to_vec()),
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let a = parse(args.next(), &[0.8312, 0.8356, 0.8301, 0.8340, 0.8327])?;
    let b = parse(args.next(), &[0.8398, 0.8421, 0.8376, 0.8405, 0.8389])?;
    for (name, xs) in [("a", &a), ("b", &b)] {
        let s = Summary::new(xs.clone())?;
        println!("{name}: mean {:.4} sd {:.4} over {} seeds", s.mean, s.stddev, s.values.len());
    }
    let r = welch_t(&a, &b)?;
    println!("t = {:.3}, df = {:.2}, critical = {:.3}, significant at 0.05: {}", r.t, r.df, r.critical, r.significant);
    Ok(())
}
