use serde::{Deserialize, Serialize};

use super::ModelError;

/// The two loss terms and their weighted combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub label: f64,
    pub explanation: f64,
    pub total: f64,
}

/// `alpha · label + (1 − alpha) · explanation`.
///
/// ```
/// let l = esnli::models::total_loss(0.6, 1.0, 10.0).unwrap();
/// assert!((l.total - 4.6).abs() < 1e-12);
/// ```
pub fn total_loss(alpha: f64, label: f64, explanation: f64) -> Result<LossBreakdown, ModelError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(ModelError::Alpha(alpha));
    }
    if label < 0.0 || explanation < 0.0 {
        return Err(ModelError::NegativeLoss { label, explanation });
    }
    Ok(LossBreakdown { label, explanation, total: alpha * label + (1.0 - alpha) * explanation })
}
