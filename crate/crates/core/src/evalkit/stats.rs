use serde::{Deserialize, Serialize};

use super::EvalError;

/// Two-sided 0.05 critical values of Student's t, keyed by degrees of freedom.
const T_CRITICAL_05: [(f64, f64); 36] = [
    (1.0, 12.706205),
    (2.0, 4.302653),
    (3.0, 3.182446),
    (4.0, 2.776445),
    (5.0, 2.570582),
    (6.0, 2.446912),
    (7.0, 2.364624),
    (8.0, 2.306004),
    (9.0, 2.262157),
    (10.0, 2.228139),
    (11.0, 2.200985),
    (12.0, 2.178813),
    (13.0, 2.160369),
    (14.0, 2.144787),
    (15.0, 2.131450),
    (16.0, 2.119905),
    (17.0, 2.109816),
    (18.0, 2.100922),
    (19.0, 2.093024),
    (20.0, 2.085963),
    (21.0, 2.079614),
    (22.0, 2.073873),
    (23.0, 2.068658),
    (24.0, 2.063899),
    (25.0, 2.059539),
    (26.0, 2.055529),
    (27.0, 2.051831),
    (28.0, 2.048407),
    (29.0, 2.045230),
    (30.0, 2.042272),
    (40.0, 2.021075),
    (50.0, 2.008559),
    (60.0, 2.000298),
    (80.0, 1.990063),
    (100.0, 1.983972),
    (120.0, 1.979930),
];

/// Critical value for the largest tabulated df not above `df`, so
/// fractional df round toward the stricter threshold.
pub fn t_critical_05(df: f64) -> f64 {
    T_CRITICAL_05
        .iter()
        .rev()
        .find(|(d, _)| *d <= df)
        .map_or(T_CRITICAL_05[0].1, |(_, t)| *t)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with the n−1 denominator.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Mean and sample standard deviation of per-seed values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub values: Vec<f64>,
    pub mean: f64,
    pub stddev: f64,
}

impl Summary {
    pub fn new(values: Vec<f64>) -> Result<Self, EvalError> {
        if values.is_empty() {
            return Err(EvalError::Empty("summary"));
        }
        let mean = mean(&values);
        let stddev = sample_variance(&values).sqrt();
        Ok(Self { values, mean, stddev })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchResult {
    pub t: f64,
    pub df: f64,
    pub critical: f64,
    pub significant: bool,
}

/// Unequal-variance two-sample t-test, two-sided at 0.05.
pub fn welch_t(a: &[f64], b: &[f64]) -> Result<WelchResult, EvalError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(EvalError::SampleTooSmall(a.len().min(b.len())));
    }
    let (va, vb) = (sample_variance(a) / a.len() as f64, sample_variance(b) / b.len() as f64);
    if va == 0.0 && vb == 0.0 {
        return Err(EvalError::ZeroVariance);
    }
    let se2 = va + vb;
    let t = (mean(a) - mean(b)) / se2.sqrt();
    let df = se2 * se2 / (va * va / (a.len() - 1) as f64 + vb * vb / (b.len() - 1) as f64);
    let critical = t_critical_05(df);
    Ok(WelchResult { t, df, critical, significant: t.abs() > critical })
}
