use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::QualityError;
use crate::corpus::Label;

/// A grade of `k/n` when `k` of the `n` required arguments are mentioned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartialScore {
    mentioned: u32,
    required: u32,
}

impl PartialScore {
    pub fn new(mentioned: u32, required: u32) -> Result<Self, QualityError> {
        if required == 0 || mentioned > required {
            return Err(QualityError::InvalidScore { mentioned, required });
        }
        Ok(Self { mentioned, required })
    }

    pub fn correct() -> Self {
        Self { mentioned: 1, required: 1 }
    }

    pub fn incorrect() -> Self {
        Self { mentioned: 0, required: 1 }
    }

    pub fn mentioned(self) -> u32 {
        self.mentioned
    }

    pub fn required(self) -> u32 {
        self.required
    }

    pub fn value(self) -> Ratio<u64> {
        Ratio::new(self.mentioned as u64, self.required as u64)
    }
}

impl fmt::Display for PartialScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.mentioned, self.required)
    }
}

/// See [`PartialScore::new`].
pub fn partial_score(mentioned: u32, required: u32) -> Result<PartialScore, QualityError> {
    PartialScore::new(mentioned, required)
}

/// One judged prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgedPrediction {
    pub predicted: Label,
    pub gold: Label,
    pub score: PartialScore,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectnessReport {
    pub window: usize,
    pub correct_labels: usize,
    /// Sum of partial scores over correct-label predictions, as `numer/denom`.
    pub score_sum: (u128, u128),
}

impl CorrectnessReport {
    pub fn label_accuracy(&self) -> Ratio<u128> {
        Ratio::new(self.correct_labels as u128, self.window as u128)
    }

    /// Mean partial score over correct-label predictions; `None` when no
    /// label in the window was correct.
    pub fn explanation_score(&self) -> Option<Ratio<u128>> {
        (self.correct_labels > 0)
            .then(|| Ratio::new(self.score_sum.0, self.score_sum.1) / self.correct_labels as u128)
    }

    pub fn label_accuracy_f64(&self) -> f64 {
        ratio_f64(self.label_accuracy())
    }

    pub fn explanation_score_f64(&self) -> Option<f64> {
        self.explanation_score().map(ratio_f64)
    }
}

fn ratio_f64(r: Ratio<u128>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Label accuracy over the first `window` predictions and the mean partial
/// score over those whose predicted label was correct.
pub fn correctness_report(
    predictions: &[JudgedPrediction],
    window: usize,
) -> Result<CorrectnessReport, QualityError> {
    if window == 0 || window > predictions.len() {
        return Err(QualityError::Window { window, available: predictions.len() });
    }
    let mut correct = 0;
    let mut sum = Ratio::<u128>::from_integer(0);
    for p in &predictions[..window] {
        if p.predicted == p.gold {
            correct += 1;
            sum += Ratio::new(p.score.mentioned as u128, p.score.required as u128);
        }
    }
    Ok(CorrectnessReport { window, correct_labels: correct, score_sum: (*sum.numer(), *sum.denom()) })
}
