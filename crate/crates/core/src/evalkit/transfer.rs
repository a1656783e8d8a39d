//! Readers for foreign NLI datasets evaluated without fine-tuning.

use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::autodiff::ParameterStore;
use crate::corpus::{make_batches, ExampleRecord, Label, Split, Vocabulary};
use crate::models::Model;

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ForeignSource {
    #[serde(rename = "sick-e")]
    SickE,
    #[serde(rename = "multinli")]
    MultiNli,
    #[serde(rename = "custom")]
    Custom,
}

impl ForeignSource {
    pub fn as_str(self) -> &'static str {
        match self {
            ForeignSource::SickE => "sick-e",
            ForeignSource::MultiNli => "multinli",
            ForeignSource::Custom => "custom",
        }
    }

    /// Accepted header names for pair id, premise, hypothesis and label.
    fn columns(self) -> [&'static [&'static str]; 4] {
        match self {
            ForeignSource::SickE => [&["pair_ID"], &["sentence_A"], &["sentence_B"], &["entailment_label", "entailment_judgment"]],
            ForeignSource::MultiNli => [&["pairID"], &["sentence1"], &["sentence2"], &["gold_label"]],
            ForeignSource::Custom => [&["pair_id"], &["premise"], &["hypothesis"], &["label"]],
        }
    }
}

impl fmt::Display for ForeignSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ForeignSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_lowercase().replace('_', "-").as_str() {
            "sick-e" | "sick" | "sicke" => Ok(ForeignSource::SickE),
            "multinli" | "mnli" => Ok(ForeignSource::MultiNli),
            "custom" => Ok(ForeignSource::Custom),
            other => Err(format!("unknown foreign source {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForeignRecord {
    pub source: ForeignSource,
    pub pair_id: String,
    pub premise: String,
    pub hypothesis: String,
    pub label: Label,
}

impl ForeignRecord {
    /// A test record without explanations for the standard evaluation path.
    pub fn to_example(&self) -> ExampleRecord {
        ExampleRecord::new(self.pair_id.clone(), Split::Test, &self.premise, &self.hypothesis, self.label, &[])
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ForeignOutcome {
    pub records: Vec<ForeignRecord>,
    /// 1-based lines of rows without a gold consensus label (`-`).
    pub no_consensus: Vec<u64>,
}

pub fn adapt_foreign(path: &Path, source: ForeignSource) -> Result<ForeignOutcome, EvalError> {
    read_foreign(File::open(path)?, source)
}

/// Reads tab-separated rows with a header line.
pub fn read_foreign(reader: impl Read, source: ForeignSource) -> Result<ForeignOutcome, EvalError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .quoting(false)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |names: &[&str]| headers.iter().position(|h| names.contains(&h.trim()));
    let [id_names, p_names, h_names, l_names] = source.columns();
    let required = |names: &[&str]| {
        find(names).ok_or_else(|| EvalError::MissingColumn {
            dataset: source.as_str(),
            column: names[0].to_string(),
        })
    };
    let (p_col, h_col, l_col) = (required(p_names)?, required(h_names)?, required(l_names)?);
    let id_col = find(id_names);
    let mut out = ForeignOutcome::default();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = row.position().map_or(i as u64 + 2, |p| p.line());
        let cell = |c: usize| row.get(c).unwrap_or("").trim();
        let raw_label = cell(l_col);
        if raw_label == "-" {
            out.no_consensus.push(line);
            continue;
        }
        let label = raw_label.parse::<Label>().map_err(|_| EvalError::UnknownLabel {
            line,
            label: raw_label.to_string(),
        })?;
        let pair_id = id_col.map(cell).filter(|s| !s.is_empty()).map_or_else(|| format!("{source}-{line}"), str::to_string);
        out.records.push(ForeignRecord {
            source,
            pair_id,
            premise: cell(p_col).to_string(),
            hypothesis: cell(h_col).to_string(),
            label,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub source: ForeignSource,
    pub examples: usize,
    pub no_consensus: usize,
    pub accuracy: f64,
}

/// Label accuracy of an NLI-trained labelling model on foreign records.
/// Tokens outside the model's vocabulary become `<unk>`.
pub fn transfer_eval(
    model: &Model,
    store: &ParameterStore,
    vocab: &Vocabulary,
    outcome: &ForeignOutcome,
    source: ForeignSource,
    batch_size: usize,
) -> Result<TransferReport, EvalError> {
    if !model.variant().predicts_label() || model.config.variant == crate::models::Variant::ExplanationToLabel {
        return Err(EvalError::Unsupported(format!("{} cannot label premise/hypothesis pairs", model.variant())));
    }
    let examples: Vec<ExampleRecord> = outcome.records.iter().map(ForeignRecord::to_example).collect();
    if examples.is_empty() {
        return Err(EvalError::Empty("foreign dataset"));
    }
    let mut correct = 0;
    for batch in make_batches(&examples, batch_size, vocab) {
        for (p, gold) in model.predict(store, &batch)?.iter().zip(&batch.labels) {
            correct += usize::from(p.label == Some(*gold));
        }
    }
    Ok(TransferReport {
        source,
        examples: examples.len(),
        no_consensus: outcome.no_consensus.len(),
        accuracy: correct as f64 / examples.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sick_rows_map_to_labels() {
        let text = "pair_ID\tsentence_A\tsentence_B\tentailment_label\trelatedness_score\n\
                    1\tA group of kids is playing\tKids are playing\tENTAILMENT\t4.5\n\
                    2\tA man sings\tA woman dances\tNEUTRAL\t2.0\n";
        let out = read_foreign(text.as_bytes(), ForeignSource::SickE).unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.records[0].label, Label::Entailment);
        assert_eq!(out.records[1].pair_id, "2");
        assert_eq!(out.records[0].to_example().explanations.len(), 0);
    }

    #[test]
    fn multinli_without_consensus_is_dropped() {
        let text = "gold_label\tsentence1_binary_parse\tsentence1\tsentence2\tpairID\n\
                    -\tx\tThe cat sat.\tA cat sat.\t11e\n\
                    contradiction\tx\tIt rains \"hard\".\tIt is dry.\t12c\n";
        let out = read_foreign(text.as_bytes(), ForeignSource::MultiNli).unwrap();
        assert_eq!(out.no_consensus, [2]);
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].premise, "It rains \"hard\".");
        assert_eq!(out.records[0].label, Label::Contradiction);
    }

    #[test]
    fn unknown_label_is_an_error() {
        let text = "premise\thypothesis\tlabel\na\tb\tmaybe\n";
        assert!(matches!(
            read_foreign(text.as_bytes(), ForeignSource::Custom),
            Err(EvalError::UnknownLabel { line: 2, .. })
        ));
        assert!(matches!(
            read_foreign("x\ty\n".as_bytes(), ForeignSource::Custom),
            Err(EvalError::MissingColumn { .. })
        ));
    }

    #[test]
    fn source_names() {
        assert_eq!("SICK-E".parse::<ForeignSource>(), Ok(ForeignSource::SickE));
        assert_eq!("mnli".parse::<ForeignSource>(), Ok(ForeignSource::MultiNli));
        assert!("snli".parse::<ForeignSource>().is_err());
    }
}
