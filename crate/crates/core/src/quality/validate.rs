use std::collections::BTreeSet;
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::templates::normalize;
use crate::corpus::{ExampleRecord, Label, Sentence};

/// The collection-time constraints an annotation must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rule {
    /// Explanation has at least three words.
    R1,
    /// Explanation is not a copy of the premise or hypothesis.
    R2,
    /// Entailment highlights at least one premise word.
    R3,
    /// Contradiction highlights at least one word in each sentence.
    R4,
    /// Neutral highlights only hypothesis words.
    R5,
    /// Enough of the highlighted words reappear in the explanation.
    R6,
    /// The explanation uses at least one word that is not highlighted.
    R7,
}

impl Rule {
    pub const ALL: [Rule; 7] = [Rule::R1, Rule::R2, Rule::R3, Rule::R4, Rule::R5, Rule::R6, Rule::R7];
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub pair_id: String,
    pub rule: Rule,
    /// Which explanation broke the rule, for per-explanation rules.
    pub explanation: Option<usize>,
    pub message: String,
}

fn words(s: &Sentence) -> impl Iterator<Item = &str> {
    s.tokens
        .iter()
        .map(String::as_str)
        .filter(|t| !t.chars().all(|c| c.is_ascii_punctuation()))
}

fn highlighted_words(record: &ExampleRecord) -> Vec<&str> {
    record
        .premise_highlights
        .iter()
        .filter_map(|&i| record.premise.tokens.get(i))
        .chain(
            record
                .hypothesis_highlights
                .iter()
                .filter_map(|&i| record.hypothesis.tokens.get(i)),
        )
        .map(String::as_str)
        .collect()
}

/// Checks every rule and returns the failures ordered by rule, then by
/// explanation index.
pub fn validate_record(record: &ExampleRecord, required_fraction: Ratio<u64>) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |rule, explanation, message: String| {
        out.push(Violation { pair_id: record.pair_id.clone(), rule, explanation, message })
    };
    let highlighted = highlighted_words(record);
    let highlighted_set: BTreeSet<&str> = highlighted.iter().copied().collect();
    let premise = normalize(&record.premise.raw);
    let hypothesis = normalize(&record.hypothesis.raw);

    for (i, e) in record.explanations.iter().enumerate() {
        let n = words(e).count();
        if n < 3 {
            push(Rule::R1, Some(i), format!("explanation has {n} words, needs at least 3"));
        }
    }
    for (i, e) in record.explanations.iter().enumerate() {
        let text = normalize(&e.raw);
        if text == premise {
            push(Rule::R2, Some(i), "explanation copies the premise".into());
        } else if text == hypothesis {
            push(Rule::R2, Some(i), "explanation copies the hypothesis".into());
        }
    }
    let p = record.premise_highlights.len();
    let h = record.hypothesis_highlights.len();
    match record.label {
        Label::Entailment if p == 0 => {
            push(Rule::R3, None, "entailment needs a highlighted premise word".into())
        }
        Label::Contradiction if p == 0 || h == 0 => push(
            Rule::R4,
            None,
            format!("contradiction needs highlights in both sentences (premise {p}, hypothesis {h})"),
        ),
        Label::Neutral if p > 0 => {
            push(Rule::R5, None, format!("neutral may only highlight the hypothesis, found {p} premise highlights"))
        }
        _ => {}
    }
    if !highlighted.is_empty() {
        let total = highlighted.len() as u64;
        for (i, e) in record.explanations.iter().enumerate() {
            let used_words: BTreeSet<&str> = e.tokens.iter().map(String::as_str).collect();
            let used = highlighted.iter().filter(|w| used_words.contains(*w)).count() as u64;
            if Ratio::new(used, total) < required_fraction {
                push(
                    Rule::R6,
                    Some(i),
                    format!("explanation reuses {used} of {total} highlighted words, needs {required_fraction}"),
                );
            }
        }
    }
    for (i, e) in record.explanations.iter().enumerate() {
        if words(e).all(|w| highlighted_set.contains(w)) {
            push(Rule::R7, Some(i), "explanation uses only highlighted words".into());
        }
    }
    out
}
