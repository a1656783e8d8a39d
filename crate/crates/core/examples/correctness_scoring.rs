//! Label accuracy and the mean partial explanation score over a window of
//! judged predictions.
//!
//! cargo run --example correctness_scoring

use esnli::corpus::Label;
use esnli::quality::{correctness_report, partial_score, JudgedPrediction, PartialScore};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    use Label::*;
    let judged = vec![
        JudgedPrediction { predicted: Entailment, gold: Entailment, score: PartialScore::correct() },
        JudgedPrediction { predicted: Neutral, gold: Neutral, score: partial_score(1, 2)? },
        JudgedPrediction { predicted: Contradiction, gold: Contradiction, score: partial_score(2, 3)? },
        JudgedPrediction { predicted: Entailment, gold: Neutral, score: PartialScore::incorrect() },
        JudgedPrediction { predicted: Contradiction, gold: Contradiction, score: PartialScore::incorrect() },
    ];
    for window in [3, judged.len()] {
        let r = correctness_report(&judged, window)?;
        println!(
            "first {window}: label accuracy {} ({:.3}), explanation score {} ({:.3})",
            r.label_accuracy(),
            r.label_accuracy_f64(),
            r.explanation_score().map(|s| s.to_string()).unwrap_or_else(|| "n/a".into()),
            r.explanation_score_f64().unwrap_or(f64::NAN),
        );
    }
    Ok(())
}
