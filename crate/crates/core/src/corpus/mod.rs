//! Dataset records, ingestion, vocabulary and batching.

mod batch;
mod highlight;
mod parse;
pub mod synthetic;
mod tokenize;
mod vocab;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use batch::{make_batches, Batch, PaddedIds};
pub use highlight::{format_highlights, parse_highlights, HighlightError};
pub use parse::{
    parse_dataset, parse_reader, write_canonical, ParseOptions, ParseOutcome, Reject, RejectReason,
    Schema, CANONICAL_COLUMNS,
};
pub use tokenize::tokenize;
pub use vocab::{build_vocab, decode, encode, Vocabulary, SPECIAL_TOKENS};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("header has no column {column:?} (mapped from {field})")]
    MissingColumn { field: String, column: String },
    #[error("duplicate pair_id {0:?}")]
    DuplicatePairId(String),
    #[error("malformed delimited data: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid schema: {0}")]
    Schema(String),
    #[error("vocabulary needs a non-empty corpus")]
    EmptyCorpus,
    #[error("vocabulary threshold must be at least 1")]
    ZeroThreshold,
    #[error("malformed vocabulary file: {0}")]
    VocabFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The three inference classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Entailment,
    Neutral,
    Contradiction,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Entailment, Label::Neutral, Label::Contradiction];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Label> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Entailment => "entailment",
            Label::Neutral => "neutral",
            Label::Contradiction => "contradiction",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    /// Case-insensitive match on the three class names.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "entailment" => Ok(Label::Entailment),
            "neutral" => Ok(Label::Neutral),
            "contradiction" => Ok(Label::Contradiction),
            other => Err(other.to_string()),
        }
    }
}

/// Which portion of a dataset a record came from. Training rows carry one
/// or more explanations; validation and test rows carry exactly three.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn accepts_explanation_count(self, n: usize) -> bool {
        match self {
            Split::Train => n >= 1,
            Split::Validation | Split::Test => n == 3,
        }
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "dev" | "val" | "validation" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

/// Raw text together with its tokenization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub raw: String,
    pub tokens: Vec<String>,
}

impl Sentence {
    pub fn new(raw: impl Into<String>) -> Self {
        let raw = raw.into();
        let tokens = tokenize(&raw);
        Self { raw, tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// One premise/hypothesis pair with its label, explanations and highlights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExampleRecord {
    pub pair_id: String,
    pub split: Split,
    pub premise: Sentence,
    pub hypothesis: Sentence,
    pub label: Label,
    pub explanations: Vec<Sentence>,
    pub premise_highlights: BTreeSet<usize>,
    pub hypothesis_highlights: BTreeSet<usize>,
}

impl ExampleRecord {
    /// A record with no highlights.
    pub fn new(
        pair_id: impl Into<String>,
        split: Split,
        premise: &str,
        hypothesis: &str,
        label: Label,
        explanations: &[&str],
    ) -> Self {
        Self {
            pair_id: pair_id.into(),
            split,
            premise: Sentence::new(premise),
            hypothesis: Sentence::new(hypothesis),
            label,
            explanations: explanations.iter().map(|e| Sentence::new(*e)).collect(),
            premise_highlights: BTreeSet::new(),
            hypothesis_highlights: BTreeSet::new(),
        }
    }

    pub fn with_highlights(
        mut self,
        premise: impl IntoIterator<Item = usize>,
        hypothesis: impl IntoIterator<Item = usize>,
    ) -> Self {
        self.premise_highlights = premise.into_iter().collect();
        self.hypothesis_highlights = hypothesis.into_iter().collect();
        self
    }

    /// The first explanation, used as the training target.
    pub fn explanation(&self) -> Option<&Sentence> {
        self.explanations.first()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_parsing_is_case_insensitive() {
        assert_eq!("ENTAILMENT".parse::<Label>(), Ok(Label::Entailment));
        assert_eq!(" neutral ".parse::<Label>(), Ok(Label::Neutral));
        assert!("maybe".parse::<Label>().is_err());
        assert!("-".parse::<Label>().is_err());
    }

    #[test]
    fn label_indices_round_trip() {
        for l in Label::ALL {
            assert_eq!(Label::from_index(l.index()), Some(l));
        }
        assert_eq!(Label::from_index(3), None);
    }

    #[test]
    fn explanation_counts_per_split() {
        assert!(Split::Train.accepts_explanation_count(1));
        assert!(!Split::Train.accepts_explanation_count(0));
        assert!(Split::Test.accepts_explanation_count(3));
        assert!(!Split::Validation.accepts_explanation_count(1));
    }
}
