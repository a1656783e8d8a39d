use std::collections::HashMap;
use std::io::{BufRead, Write};

use super::{CorpusError, ExampleRecord, Label};

/// Reserved tokens, in id order.
pub const SPECIAL_TOKENS: [&str; 7] = [
    "<pad>",
    "<unk>",
    "<s>",
    "</s>",
    "entailment",
    "neutral",
    "contradiction",
];

/// Token ↔ id maps. Ids 0..7 are [`SPECIAL_TOKENS`]; the rest are corpus
/// tokens seen at least `threshold` times, by descending count then
/// lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, usize>,
    counts: Vec<u64>,
    threshold: u64,
    /// Distinct corpus tokens that fell under the threshold.
    discarded_types: usize,
}

impl Vocabulary {
    pub const PAD: usize = 0;
    pub const UNK: usize = 1;
    pub const SOS: usize = 2;
    pub const EOS: usize = 3;

    pub fn label_token(label: Label) -> usize {
        4 + label.index()
    }

    /// Inverse of [`Vocabulary::label_token`].
    pub fn token_label(id: usize) -> Option<Label> {
        id.checked_sub(4).and_then(Label::from_index)
    }

    fn from_counts(mut kept: Vec<(String, u64)>, threshold: u64, discarded_types: usize) -> Self {
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut tokens: Vec<String> = SPECIAL_TOKENS.iter().map(|s| s.to_string()).collect();
        let mut counts = vec![0; SPECIAL_TOKENS.len()];
        for (t, c) in kept {
            tokens.push(t);
            counts.push(c);
        }
        let ids = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self {
            tokens,
            ids,
            counts,
            threshold,
            discarded_types,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Number of non-special tokens.
    pub fn corpus_tokens(&self) -> usize {
        self.tokens.len() - SPECIAL_TOKENS.len()
    }

    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    pub fn discarded_types(&self) -> usize {
        self.discarded_types
    }

    pub fn id(&self, token: &str) -> usize {
        self.ids.get(token).copied().unwrap_or(Self::UNK)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.ids.contains_key(token)
    }

    pub fn token(&self, id: usize) -> &str {
        self.tokens.get(id).map_or(SPECIAL_TOKENS[Self::UNK], String::as_str)
    }

    pub fn count(&self, id: usize) -> u64 {
        self.counts.get(id).copied().unwrap_or(0)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Tab-separated `id, token, count` lines after a `#threshold` header.
    pub fn write_tsv(&self, mut w: impl Write) -> Result<(), CorpusError> {
        writeln!(w, "#threshold\t{}\t{}", self.threshold, self.discarded_types)?;
        for (i, t) in self.tokens.iter().enumerate() {
            writeln!(w, "{i}\t{t}\t{}", self.counts[i])?;
        }
        Ok(())
    }

    pub fn read_tsv(r: impl BufRead) -> Result<Self, CorpusError> {
        let bad = |m: &str| CorpusError::VocabFormat(m.to_string());
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| bad("empty file"))??;
        let mut h = header.split('\t');
        if h.next() != Some("#threshold") {
            return Err(bad("missing #threshold header"));
        }
        let threshold = h
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad threshold"))?;
        let discarded_types = h.next().and_then(|s| s.parse().ok()).unwrap_or(0);
        let mut kept = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            let mut parts = line.split('\t');
            let (Some(id), Some(tok), Some(count)) = (parts.next(), parts.next(), parts.next()) else {
                return Err(bad(&format!("line {}", i + 2)));
            };
            if id.parse::<usize>().ok() != Some(i) {
                return Err(bad(&format!("id out of order on line {}", i + 2)));
            }
            if i < SPECIAL_TOKENS.len() {
                if tok != SPECIAL_TOKENS[i] {
                    return Err(bad(&format!("expected special {:?} at id {i}", SPECIAL_TOKENS[i])));
                }
                continue;
            }
            let count = count.parse().map_err(|_| bad("bad count"))?;
            kept.push((tok.to_string(), count));
        }
        let v = Self::from_counts(kept, threshold, discarded_types);
        Ok(v)
    }
}

/// Counts tokens over premises, hypotheses and every explanation of the
/// given record lists and keeps those with count ≥ `threshold`.
pub fn build_vocab(sources: &[&[ExampleRecord]], threshold: u64) -> Result<Vocabulary, CorpusError> {
    if threshold == 0 {
        return Err(CorpusError::ZeroThreshold);
    }
    let mut freq: HashMap<&str, u64> = HashMap::new();
    let mut any = false;
    for records in sources {
        for r in *records {
            any = true;
            let sentences = [&r.premise, &r.hypothesis].into_iter().chain(&r.explanations);
            for s in sentences {
                for t in &s.tokens {
                    *freq.entry(t.as_str()).or_default() += 1;
                }
            }
        }
    }
    if !any || freq.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let mut kept = Vec::new();
    let mut discarded = 0;
    for (t, c) in freq {
        if SPECIAL_TOKENS.contains(&t) {
            continue;
        }
        if c >= threshold {
            kept.push((t.to_string(), c));
        } else {
            discarded += 1;
        }
    }
    Ok(Vocabulary::from_counts(kept, threshold, discarded))
}

/// Maps tokens to ids; out-of-vocabulary tokens become `<unk>`.
pub fn encode<S: AsRef<str>>(vocab: &Vocabulary, tokens: &[S]) -> Vec<usize> {
    tokens.iter().map(|t| vocab.id(t.as_ref())).collect()
}

pub fn decode(vocab: &Vocabulary, ids: &[usize]) -> Vec<String> {
    ids.iter().map(|&i| vocab.token(i).to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Split;

    fn records_with_counts(counts: &[(&str, usize)]) -> Vec<ExampleRecord> {
        // spread tokens across premise/hypothesis/explanation to exercise all three sources
        let mut out = Vec::new();
        for (i, (tok, n)) in counts.iter().enumerate() {
            for k in 0..*n {
                let where_ = k % 3;
                let (p, h, e) = match where_ {
                    0 => (tok.to_string(), String::new(), String::new()),
                    1 => (String::new(), tok.to_string(), String::new()),
                    _ => (String::new(), String::new(), tok.to_string()),
                };
                let mut r = ExampleRecord::new(format!("{i}-{k}"), Split::Train, &p, &h, Label::Neutral, &[]);
                if !e.is_empty() {
                    r.explanations.push(crate::corpus::Sentence::new(e));
                }
                out.push(r);
            }
        }
        out
    }

    #[test]
    fn threshold_keeps_frequent_tokens() {
        let recs = records_with_counts(&[("a", 20), ("b", 14)]);
        let v = build_vocab(&[&recs], 15).unwrap();
        assert!(v.contains("a"));
        assert!(!v.contains("b"));
        assert_eq!(v.id("b"), Vocabulary::UNK);
        assert_eq!(v.count(v.id("a")), 20);
        assert_eq!(v.discarded_types(), 1);
    }

    #[test]
    fn threshold_one_keeps_everything() {
        let recs = records_with_counts(&[("a", 2), ("b", 1), ("c", 1)]);
        let v = build_vocab(&[&recs], 1).unwrap();
        assert_eq!(v.corpus_tokens(), 3);
        // descending count, then lexicographic
        assert_eq!(&v.tokens()[7..], ["a", "b", "c"]);
    }

    #[test]
    fn specials_have_fixed_ids() {
        let recs = records_with_counts(&[("neutral", 5), ("x", 5)]);
        let v = build_vocab(&[&recs], 1).unwrap();
        for (i, s) in SPECIAL_TOKENS.iter().enumerate() {
            assert_eq!(v.id(s), i);
        }
        assert_eq!(v.corpus_tokens(), 1);
        assert_eq!(Vocabulary::label_token(Label::Contradiction), 6);
        assert_eq!(Vocabulary::token_label(5), Some(Label::Neutral));
        assert_eq!(Vocabulary::token_label(3), None);
    }

    #[test]
    fn empty_corpus_and_zero_threshold() {
        assert!(matches!(build_vocab(&[&[]], 1), Err(CorpusError::EmptyCorpus)));
        let recs = records_with_counts(&[("a", 1)]);
        assert!(matches!(build_vocab(&[&recs], 0), Err(CorpusError::ZeroThreshold)));
    }

    #[test]
    fn encode_decode() {
        let recs = records_with_counts(&[("a", 1), ("man", 1), ("sleeps", 1)]);
        let v = build_vocab(&[&recs], 1).unwrap();
        let s = ["a", "man", "sleeps"];
        assert_eq!(decode(&v, &encode(&v, &s)), s);
        assert_eq!(encode(&v, &["zyx"]), [Vocabulary::UNK]);
        assert!(encode::<&str>(&v, &[]).is_empty());
    }

    #[test]
    fn tsv_round_trip() {
        let recs = records_with_counts(&[("a", 3), ("b", 2), ("c", 1)]);
        let v = build_vocab(&[&recs], 2).unwrap();
        let mut buf = Vec::new();
        v.write_tsv(&mut buf).unwrap();
        let back = Vocabulary::read_tsv(buf.as_slice()).unwrap();
        assert_eq!(v, back);
    }
}
