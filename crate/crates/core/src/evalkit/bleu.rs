//! Corpus-level BLEU-4 with uniform weights, closest-reference brevity
//! penalty, max-count clipping over references and add-one smoothing of
//! zero-match precisions for n ≥ 2.

use std::collections::HashMap;
use std::hash::Hash;

use crate::corpus::ExampleRecord;

use super::EvalError;

pub const MAX_ORDER: usize = 4;

/// Sufficient statistics; summing them over sentences gives the corpus.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BleuStats {
    pub matches: [u64; MAX_ORDER],
    pub totals: [u64; MAX_ORDER],
    pub candidate_len: u64,
    pub reference_len: u64,
}

fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], u64> {
    let mut counts = HashMap::new();
    for w in tokens.windows(n) {
        *counts.entry(w).or_default() += 1;
    }
    counts
}

/// Reference length closest to `len`, the shorter one on ties.
fn closest_length<T>(len: usize, references: &[Vec<T>]) -> usize {
    references
        .iter()
        .map(Vec::len)
        .min_by_key(|&r| (r.abs_diff(len), r))
        .unwrap_or(0)
}

impl BleuStats {
    pub fn sentence<T: Eq + Hash>(candidate: &[T], references: &[Vec<T>]) -> Self {
        let mut s = Self {
            candidate_len: candidate.len() as u64,
            reference_len: closest_length(candidate.len(), references) as u64,
            ..Self::default()
        };
        for n in 1..=MAX_ORDER {
            let cand = ngram_counts(candidate, n);
            let mut max_ref: HashMap<&[T], u64> = HashMap::new();
            for r in references {
                for (g, c) in ngram_counts(r, n) {
                    let e = max_ref.entry(g).or_default();
                    *e = (*e).max(c);
                }
            }
            s.totals[n - 1] = candidate.len().saturating_sub(n - 1) as u64;
            s.matches[n - 1] = cand
                .iter()
                .map(|(g, &c)| c.min(max_ref.get(g).copied().unwrap_or(0)))
                .sum();
        }
        s
    }

    pub fn add(&mut self, other: &Self) {
        for n in 0..MAX_ORDER {
            self.matches[n] += other.matches[n];
            self.totals[n] += other.totals[n];
        }
        self.candidate_len += other.candidate_len;
        self.reference_len += other.reference_len;
    }

    /// Score in `[0, 100]`.
    pub fn score(&self) -> f64 {
        if self.candidate_len == 0 || self.matches[0] == 0 {
            return 0.0;
        }
        let mut log_sum = 0.0;
        for n in 0..MAX_ORDER {
            let (m, t) = (self.matches[n], self.totals[n]);
            let p = if n > 0 && m == 0 {
                1.0 / (t + 1) as f64
            } else {
                m as f64 / t as f64
            };
            log_sum += p.ln();
        }
        let (c, r) = (self.candidate_len as f64, self.reference_len as f64);
        let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
        (100.0 * bp * (log_sum / MAX_ORDER as f64).exp()).clamp(0.0, 100.0)
    }
}

/// BLEU of `candidates[i]` against `references[i]`, pooled over the corpus.
pub fn corpus_bleu<T: Eq + Hash>(candidates: &[Vec<T>], references: &[Vec<Vec<T>>]) -> Result<f64, EvalError> {
    if candidates.is_empty() {
        return Err(EvalError::Empty("candidate corpus"));
    }
    if candidates.len() != references.len() {
        return Err(EvalError::LengthMismatch {
            left: candidates.len(),
            right: references.len(),
        });
    }
    let mut total = BleuStats::default();
    for (i, (c, refs)) in candidates.iter().zip(references).enumerate() {
        if refs.is_empty() {
            return Err(EvalError::NoReferences(i));
        }
        total.add(&BleuStats::sentence(c, refs));
    }
    Ok(total.score())
}

/// Single-candidate convenience wrapper around [`corpus_bleu`].
pub fn bleu<T: Eq + Hash + Clone>(candidate: &[T], references: &[Vec<T>]) -> Result<f64, EvalError> {
    corpus_bleu(&[candidate.to_vec()], &[references.to_vec()])
}

/// The first two explanations of a three-explanation record, used as the
/// references for both human and model candidates.
pub fn reference_pair(record: &ExampleRecord) -> Result<Vec<Vec<String>>, EvalError> {
    if record.explanations.len() != 3 {
        return Err(EvalError::ExplanationCount {
            pair_id: record.pair_id.clone(),
            found: record.explanations.len(),
        });
    }
    Ok(record.explanations[..2].iter().map(|e| e.tokens.clone()).collect())
}

/// BLEU of every record's third explanation against its first two.
pub fn interannotator_bleu(records: &[ExampleRecord]) -> Result<f64, EvalError> {
    let refs = records.iter().map(reference_pair).collect::<Result<Vec<_>, _>>()?;
    let cands: Vec<Vec<String>> = records.iter().map(|r| r.explanations[2].tokens.clone()).collect();
    corpus_bleu(&cands, &refs)
}

/// BLEU of generated explanations against the same two references.
pub fn model_bleu(generated: &[Vec<String>], records: &[ExampleRecord]) -> Result<f64, EvalError> {
    let refs = records.iter().map(reference_pair).collect::<Result<Vec<_>, _>>()?;
    corpus_bleu(generated, &refs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Label, Split};
    use proptest::prelude::*;

    fn words(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    /// Brute-force BLEU: n-gram counts by scanning every window pairwise.
    fn oracle(cands: &[Vec<&str>], refs: &[Vec<Vec<&str>>]) -> f64 {
        let count_in = |g: &[&str], s: &[&str]| (0..(s.len() + 1).saturating_sub(g.len())).filter(|&i| &s[i..i + g.len()] == g).count();
        let mut m = [0usize; 4];
        let mut t = [0usize; 4];
        let (mut c, mut r) = (0usize, 0usize);
        for (cand, rs) in cands.iter().zip(refs) {
            c += cand.len();
            let mut best = rs[0].len();
            for x in rs {
                let (d, bd) = (x.len().abs_diff(cand.len()), best.abs_diff(cand.len()));
                if d < bd || (d == bd && x.len() < best) {
                    best = x.len();
                }
            }
            r += best;
            for n in 1..=4 {
                if cand.len() < n {
                    continue;
                }
                t[n - 1] += cand.len() - n + 1;
                let mut seen: Vec<&[&str]> = Vec::new();
                for i in 0..=cand.len() - n {
                    let g = &cand[i..i + n];
                    if seen.contains(&g) {
                        continue;
                    }
                    seen.push(g);
                    let in_ref = rs.iter().map(|x| count_in(g, x)).max().unwrap();
                    m[n - 1] += count_in(g, cand).min(in_ref);
                }
            }
        }
        if c == 0 || m[0] == 0 {
            return 0.0;
        }
        let mut prod = 1.0f64;
        for n in 0..4 {
            prod *= if n > 0 && m[n] == 0 { 1.0 / (t[n] as f64 + 1.0) } else { m[n] as f64 / t[n] as f64 };
        }
        let bp = if c > r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
        100.0 * bp * prod.powf(0.25)
    }

    #[test]
    fn identical_and_disjoint() {
        let r = words("a man is sleeping on the couch");
        assert!((bleu(&r, &[r.clone()]).unwrap() - 100.0).abs() < 1e-9);
        assert!((bleu(&r, &[words("the dog runs"), r.clone()]).unwrap() - 100.0).abs() < 1e-9);
        assert_eq!(bleu(&words("cats eat fish"), &[r]).unwrap(), 0.0);
    }

    #[test]
    fn clipping_uses_max_reference_count() {
        let c = words("the the the the the the the");
        let refs = [words("the cat is on the mat"), words("there is a cat on the mat")];
        let s = BleuStats::sentence(&c, &refs);
        assert_eq!(s.matches[0], 2);
        assert_eq!(s.totals[0], 7);
    }

    #[test]
    fn closest_reference_length_prefers_shorter_on_ties() {
        let refs = [vec![0; 4], vec![0; 8]];
        assert_eq!(closest_length(6, &refs), 4);
        assert_eq!(closest_length(7, &refs), 8);
    }

    #[test]
    fn matches_textbook_oracle_on_hand_corpus() {
        let cands = [
            "it is a guide to action which ensures that the military always obeys the commands of the party",
            "he read the book because he was interested in world history",
            "a dog",
            "the cat sat",
        ];
        let refs = [
            vec![
                "it is a guide to action that ensures that the military will forever heed party commands",
                "it is the guiding principle which guarantees the military forces always being under the command of the party",
            ],
            vec!["he was interested in world history because he read the book"],
            vec!["a dog runs in the park", "dogs run"],
            vec!["the cat sat on the mat", "a cat is sitting"],
        ];
        let c: Vec<Vec<&str>> = cands.iter().map(|s| words(s)).collect();
        let r: Vec<Vec<Vec<&str>>> = refs.iter().map(|rs| rs.iter().map(|s| words(s)).collect()).collect();
        let got = corpus_bleu(&c, &r).unwrap();
        assert!((got - oracle(&c, &r)).abs() < 1e-9, "{got} vs {}", oracle(&c, &r));
        assert!(got > 0.0 && got < 100.0);
    }

    #[test]
    fn errors() {
        assert!(corpus_bleu::<&str>(&[], &[]).is_err());
        assert!(matches!(corpus_bleu(&[words("a")], &[vec![]]), Err(EvalError::NoReferences(0))));
    }

    #[test]
    fn interannotator_protocol() {
        let rec = |e: [&str; 3]| ExampleRecord::new("p", Split::Test, "a b", "c d", Label::Neutral, &e);
        let same = vec![rec(["the man is tall and old", "someone sleeps now", "the man is tall and old"])];
        assert!((interannotator_bleu(&same).unwrap() - 100.0).abs() < 1e-9);
        let disjoint = vec![rec(["aa bb cc", "dd ee ff", "gg hh ii"])];
        assert_eq!(interannotator_bleu(&disjoint).unwrap(), 0.0);
        let two = vec![ExampleRecord::new("q", Split::Train, "a", "b", Label::Neutral, &["x", "y"])];
        assert!(matches!(interannotator_bleu(&two), Err(EvalError::ExplanationCount { found: 2, .. })));
    }

    proptest! {
        #[test]
        fn agrees_with_oracle_and_stays_in_range(
            corpus in proptest::collection::vec(
                (proptest::collection::vec(0u8..5, 0..10), proptest::collection::vec(proptest::collection::vec(0u8..5, 1..10), 1..3)),
                1..5,
            )
        ) {
            let names = ["a", "b", "c", "d", "e"];
            let c: Vec<Vec<&str>> = corpus.iter().map(|(x, _)| x.iter().map(|&i| names[i as usize]).collect()).collect();
            let r: Vec<Vec<Vec<&str>>> = corpus
                .iter()
                .map(|(_, rs)| rs.iter().map(|x| x.iter().map(|&i| names[i as usize]).collect()).collect())
                .collect();
            let got = corpus_bleu(&c, &r).unwrap();
            prop_assert!((0.0..=100.0).contains(&got));
            prop_assert!((got - oracle(&c, &r)).abs() < 1e-9);
        }

        #[test]
        fn perfect_score_iff_identical(
            c in proptest::collection::vec(0u8..5, 4..10),
            r in proptest::collection::vec(0u8..5, 4..10),
        ) {
            let s = bleu(&c, &[r.clone()]).unwrap();
            prop_assert_eq!((s - 100.0).abs() < 1e-9, c == r);
            prop_assert!((bleu(&r, &[r.clone()]).unwrap() - 100.0).abs() < 1e-9);
        }
    }
}
