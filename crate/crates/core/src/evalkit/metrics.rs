use super::EvalError;

/// Fraction of positions where `predicted` equals `gold`.
pub fn accuracy<T: PartialEq>(predicted: &[T], gold: &[T]) -> Result<f64, EvalError> {
    if predicted.len() != gold.len() {
        return Err(EvalError::LengthMismatch {
            left: predicted.len(),
            right: gold.len(),
        });
    }
    if gold.is_empty() {
        return Err(EvalError::Empty("accuracy"));
    }
    let hits = predicted.iter().zip(gold).filter(|(p, g)| p == g).count();
    Ok(hits as f64 / gold.len() as f64)
}

/// `exp(-mean log p)` over natural-log token probabilities. The caller
/// passes one entry per real token plus one for EOS and none for PAD. A
/// zero-probability token gives `+∞`.
pub fn perplexity(log_probs: &[f64]) -> Result<f64, EvalError> {
    if log_probs.is_empty() {
        return Err(EvalError::Empty("perplexity"));
    }
    if log_probs.iter().any(|&lp| lp == f64::NEG_INFINITY) {
        return Ok(f64::INFINITY);
    }
    let sum: f64 = log_probs.iter().sum();
    Ok((-sum / log_probs.len() as f64).exp())
}

/// Perplexity from a summed NLL over `tokens` positions.
pub fn perplexity_from_nll(nll_sum: f64, tokens: usize) -> Result<f64, EvalError> {
    if tokens == 0 {
        return Err(EvalError::Empty("perplexity"));
    }
    Ok((nll_sum / tokens as f64).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn accuracy_cases() {
        assert_eq!(accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 1], &[2, 2]).unwrap(), 0.0);
        assert_eq!(accuracy(&[1, 2, 3, 4], &[1, 2, 3, 0]).unwrap(), 0.75);
        assert!(accuracy::<u8>(&[], &[]).is_err());
        assert!(accuracy(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn perplexity_cases() {
        assert_eq!(perplexity(&[0.0, 0.0]).unwrap(), 1.0);
        let v = 37.0_f64;
        let uniform = vec![-v.ln(); 9];
        assert!((perplexity(&uniform).unwrap() - v).abs() < 1e-9);
        let halves = [0.5_f64.ln(), 0.25_f64.ln(), 0.125_f64.ln()];
        assert!((perplexity(&halves).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(perplexity(&[-1.0, f64::NEG_INFINITY]).unwrap(), f64::INFINITY);
        assert!(perplexity(&[]).is_err());
        assert!((perplexity_from_nll(3.0 * 2f64.ln(), 3).unwrap() - 2.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn raising_a_probability_never_raises_perplexity(
            ps in proptest::collection::vec(0.01f64..1.0, 1..20),
            i in 0usize..20,
            bump in 0.0f64..1.0,
        ) {
            let i = i % ps.len();
            let before: Vec<f64> = ps.iter().map(|p| p.ln()).collect();
            let mut after = before.clone();
            after[i] = (ps[i] + bump * (1.0 - ps[i])).ln();
            prop_assert!(perplexity(&after).unwrap() <= perplexity(&before).unwrap() + 1e-12);
        }
    }
}
