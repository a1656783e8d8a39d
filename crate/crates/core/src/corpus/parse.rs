use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::highlight::{format_highlights, parse_highlights, HighlightError};
use super::{CorpusError, ExampleRecord, Label, Sentence, Split};

/// Column order of the canonical tab-separated serialization.
pub const CANONICAL_COLUMNS: [&str; 9] = [
    "pair_id",
    "label",
    "premise",
    "hypothesis",
    "explanation_1",
    "explanation_2",
    "explanation_3",
    "premise_highlights",
    "hypothesis_highlights",
];

/// Maps logical fields to the column names of a particular file layout.
///
/// Loaded from a TOML file whose keys are the logical field names:
///
/// ```toml
/// delimiter = ","
/// pair_id = "pairID"
/// label = "gold_label"
/// premise = "Sentence1"
/// hypothesis = "Sentence2"
/// explanation_1 = "Explanation_1"
/// premise_highlights = "Sentence1_marked_1"
/// hypothesis_highlights = "Sentence2_marked_1"
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schema {
    #[serde(default = "default_delimiter")]
    pub delimiter: String,
    pub pair_id: String,
    pub label: String,
    pub premise: String,
    pub hypothesis: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explanation_1: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explanation_2: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explanation_3: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub premise_highlights: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypothesis_highlights: Option<String>,
}

fn default_delimiter() -> String {
    ",".into()
}

impl Schema {
    /// The layout written by [`write_canonical`].
    pub fn canonical() -> Self {
        let c = |s: &str| s.to_string();
        Self {
            delimiter: "\t".into(),
            pair_id: c("pair_id"),
            label: c("label"),
            premise: c("premise"),
            hypothesis: c("hypothesis"),
            explanation_1: Some(c("explanation_1")),
            explanation_2: Some(c("explanation_2")),
            explanation_3: Some(c("explanation_3")),
            premise_highlights: Some(c("premise_highlights")),
            hypothesis_highlights: Some(c("hypothesis_highlights")),
        }
    }

    /// The published e-SNLI CSV layout. `explanations` is 1 for the training
    /// files and 3 for the dev/test files; highlights come from the
    /// asterisk-marked columns of the first annotator.
    pub fn esnli(explanations: usize) -> Self {
        let e = |i: usize| (i <= explanations).then(|| format!("Explanation_{i}"));
        Self {
            delimiter: ",".into(),
            pair_id: "pairID".into(),
            label: "gold_label".into(),
            premise: "Sentence1".into(),
            hypothesis: "Sentence2".into(),
            explanation_1: e(1),
            explanation_2: e(2),
            explanation_3: e(3),
            premise_highlights: Some("Sentence1_marked_1".into()),
            hypothesis_highlights: Some("Sentence2_marked_1".into()),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, CorpusError> {
        toml::from_str(text).map_err(|e| CorpusError::Schema(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Unreadable {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn delimiter_byte(&self) -> Result<u8, CorpusError> {
        match self.delimiter.as_str() {
            "\t" | "tab" | "\\t" => Ok(b'\t'),
            "," | "comma" => Ok(b','),
            s if s.len() == 1 => Ok(s.as_bytes()[0]),
            s => Err(CorpusError::Schema(format!("unsupported delimiter {s:?}"))),
        }
    }

    fn fields(&self) -> Vec<(&'static str, Option<&str>)> {
        vec![
            ("pair_id", Some(self.pair_id.as_str())),
            ("label", Some(self.label.as_str())),
            ("premise", Some(self.premise.as_str())),
            ("hypothesis", Some(self.hypothesis.as_str())),
            ("explanation_1", self.explanation_1.as_deref()),
            ("explanation_2", self.explanation_2.as_deref()),
            ("explanation_3", self.explanation_3.as_deref()),
            ("premise_highlights", self.premise_highlights.as_deref()),
            ("hypothesis_highlights", self.hypothesis_highlights.as_deref()),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParseOptions {
    pub split: Split,
}

impl ParseOptions {
    pub fn new(split: Split) -> Self {
        Self { split }
    }
}

/// Why a data row was not accepted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RejectReason {
    MissingPairId,
    MissingLabel,
    InvalidLabel { value: String },
    EmptySentence { field: String },
    OutOfBoundsHighlight { field: String, index: usize, len: usize },
    MalformedHighlight { field: String, detail: String },
    ExplanationCount { expected: String, found: usize },
    MalformedRow { detail: String },
}

impl RejectReason {
    /// Short stable tag, e.g. `invalid-label`.
    pub fn tag(&self) -> &'static str {
        match self {
            RejectReason::MissingPairId => "missing-pair-id",
            RejectReason::MissingLabel => "missing-label",
            RejectReason::InvalidLabel { .. } => "invalid-label",
            RejectReason::EmptySentence { .. } => "empty-sentence",
            RejectReason::OutOfBoundsHighlight { .. } => "out-of-bounds-highlight",
            RejectReason::MalformedHighlight { .. } => "malformed-highlight",
            RejectReason::ExplanationCount { .. } => "explanation-count",
            RejectReason::MalformedRow { .. } => "malformed-row",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Reject {
    /// 1-based line in the source file.
    pub line: u64,
    pub pair_id: Option<String>,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParseOutcome {
    pub records: Vec<ExampleRecord>,
    pub rejects: Vec<Reject>,
}

impl ParseOutcome {
    /// Fraction of data rows that were accepted.
    pub fn acceptance_rate(&self) -> f64 {
        let total = self.records.len() + self.rejects.len();
        if total == 0 {
            return 1.0;
        }
        self.records.len() as f64 / total as f64
    }
}

pub fn parse_dataset(
    path: impl AsRef<Path>,
    schema: &Schema,
    options: ParseOptions,
) -> Result<ParseOutcome, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| CorpusError::Unreadable {
        path: path.display().to_string(),
        source,
    })?;
    parse_reader(file, schema, options)
}

/// Parses delimited text with a header row. Malformed rows become
/// [`Reject`]s; only structural problems with the whole file are errors.
pub fn parse_reader(
    reader: impl Read,
    schema: &Schema,
    options: ParseOptions,
) -> Result<ParseOutcome, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter_byte()?)
        .flexible(true)
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut columns: Vec<Option<usize>> = Vec::new();
    for (field, column) in schema.fields() {
        match column {
            None => columns.push(None),
            Some(name) => {
                let idx = headers.iter().position(|h| h.trim() == name).ok_or_else(|| {
                    CorpusError::MissingColumn {
                        field: field.to_string(),
                        column: name.to_string(),
                    }
                })?;
                columns.push(Some(idx));
            }
        }
    }

    let mut outcome = ParseOutcome::default();
    let mut seen = HashSet::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let cell = |i: usize| columns[i].and_then(|c| row.get(c));
        let pair_id = cell(0).unwrap_or("").trim().to_string();
        if !pair_id.is_empty() && !seen.insert(pair_id.clone()) {
            return Err(CorpusError::DuplicatePairId(pair_id));
        }
        if columns.iter().flatten().any(|&c| c >= row.len()) {
            outcome.rejects.push(Reject {
                line,
                pair_id: (!pair_id.is_empty()).then_some(pair_id),
                reason: RejectReason::MalformedRow {
                    detail: format!("{} fields, expected {}", row.len(), headers.len()),
                },
            });
            continue;
        }
        match build_record(&pair_id, &cell, options.split) {
            Ok(record) => outcome.records.push(record),
            Err(reason) => outcome.rejects.push(Reject {
                line,
                pair_id: (!pair_id.is_empty()).then_some(pair_id),
                reason,
            }),
        }
    }
    Ok(outcome)
}

fn build_record<'a>(
    pair_id: &str,
    cell: &impl Fn(usize) -> Option<&'a str>,
    split: Split,
) -> Result<ExampleRecord, RejectReason> {
    if pair_id.is_empty() {
        return Err(RejectReason::MissingPairId);
    }
    let label_cell = cell(1).unwrap_or("").trim();
    if label_cell.is_empty() {
        return Err(RejectReason::MissingLabel);
    }
    let label: Label = label_cell.parse().map_err(|_| RejectReason::InvalidLabel {
        value: label_cell.to_string(),
    })?;
    let premise = Sentence::new(cell(2).unwrap_or(""));
    let hypothesis = Sentence::new(cell(3).unwrap_or(""));
    for (field, s) in [("premise", &premise), ("hypothesis", &hypothesis)] {
        if s.is_empty() {
            return Err(RejectReason::EmptySentence {
                field: field.to_string(),
            });
        }
    }
    let explanations: Vec<Sentence> = (4..7)
        .filter_map(|i| cell(i))
        .filter(|raw| !raw.trim().is_empty())
        .map(Sentence::new)
        .collect();
    if !split.accepts_explanation_count(explanations.len()) {
        return Err(RejectReason::ExplanationCount {
            expected: match split {
                Split::Train => "at least 1".into(),
                _ => "exactly 3".into(),
            },
            found: explanations.len(),
        });
    }
    let highlights = |i: usize, field: &str, sentence: &Sentence| -> Result<BTreeSet<usize>, RejectReason> {
        match cell(i) {
            None => Ok(BTreeSet::new()),
            Some(c) => parse_highlights(c, &sentence.tokens).map_err(|e| match e {
                HighlightError::OutOfBounds { index, len } => RejectReason::OutOfBoundsHighlight {
                    field: field.to_string(),
                    index,
                    len,
                },
                HighlightError::Malformed(detail) => RejectReason::MalformedHighlight {
                    field: field.to_string(),
                    detail,
                },
            }),
        }
    };
    let premise_highlights = highlights(7, "premise_highlights", &premise)?;
    let hypothesis_highlights = highlights(8, "hypothesis_highlights", &hypothesis)?;
    Ok(ExampleRecord {
        pair_id: pair_id.to_string(),
        split,
        premise,
        hypothesis,
        label,
        explanations,
        premise_highlights,
        hypothesis_highlights,
    })
}

/// Writes records as tab-separated UTF-8 in [`CANONICAL_COLUMNS`] order.
pub fn write_canonical<'a>(
    writer: impl Write,
    records: impl IntoIterator<Item = &'a ExampleRecord>,
) -> Result<(), CorpusError> {
    let mut w = csv::WriterBuilder::new()
        .delimiter(b'\t')
        .from_writer(writer);
    w.write_record(CANONICAL_COLUMNS)?;
    for r in records {
        let expl = |i: usize| r.explanations.get(i).map_or("", |s| s.raw.as_str());
        w.write_record([
            r.pair_id.as_str(),
            r.label.as_str(),
            r.premise.raw.as_str(),
            r.hypothesis.raw.as_str(),
            expl(0),
            expl(1),
            expl(2),
            &format_highlights(&r.premise_highlights),
            &format_highlights(&r.hypothesis_highlights),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "pair_id\tlabel\tpremise\thypothesis\texplanation_1\texplanation_2\texplanation_3\tpremise_highlights\thypothesis_highlights\n";

    fn parse(body: &str) -> Result<ParseOutcome, CorpusError> {
        let text = format!("{HEADER}{body}");
        parse_reader(text.as_bytes(), &Schema::canonical(), ParseOptions::new(Split::Train))
    }

    #[test]
    fn well_formed_rows() {
        let out = parse(
            "1\tentailment\tA man sleeps.\tA person sleeps.\tA man is a person.\t\t\t1\t1\n\
             2\tneutral\tA dog runs.\tA dog runs fast.\tNot all running is fast.\t\t\t\t3\n\
             3\tcontradiction\tA cat sits.\tA cat jumps.\tSitting is not jumping.\t\t\t2\t2\n",
        )
        .unwrap();
        assert_eq!(out.records.len(), 3);
        assert!(out.rejects.is_empty());
        assert_eq!(out.records[1].hypothesis_highlights, BTreeSet::from([3]));
    }

    #[test]
    fn invalid_label_is_rejected_not_dropped() {
        let out = parse(
            "1\tentailment\tA man sleeps.\tA person sleeps.\tA man is a person.\t\t\t\t\n\
             2\tmaybe\tA dog runs.\tA dog runs fast.\tNot all running is fast.\t\t\t\t\n\
             3\tneutral\tA cat sits.\tA cat sits still.\tSitting need not be still.\t\t\t\t\n",
        )
        .unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.rejects.len(), 1);
        assert_eq!(out.rejects[0].reason.tag(), "invalid-label");
        assert_eq!(out.rejects[0].pair_id.as_deref(), Some("2"));
    }

    #[test]
    fn out_of_bounds_highlight() {
        let out = parse("1\tentailment\tA man sleeps.\tA person sleeps.\tA man is a person.\t\t\t9\t\n").unwrap();
        assert_eq!(out.rejects[0].reason.tag(), "out-of-bounds-highlight");
    }

    #[test]
    fn duplicate_pair_id_is_fatal() {
        let err = parse(
            "1\tentailment\tA b.\tC d.\tE f g.\t\t\t\t\n1\tneutral\tA b.\tC d.\tE f g.\t\t\t\t\n",
        )
        .unwrap_err();
        assert!(matches!(err, CorpusError::DuplicatePairId(id) if id == "1"));
    }

    #[test]
    fn missing_column_is_fatal() {
        let text = "pair_id\tlabel\tpremise\n1\tentailment\tx\n";
        let err = parse_reader(text.as_bytes(), &Schema::canonical(), ParseOptions::new(Split::Train))
            .unwrap_err();
        assert!(matches!(err, CorpusError::MissingColumn { .. }));
    }

    #[test]
    fn unreadable_file() {
        let err = parse_dataset("/nonexistent/file.tsv", &Schema::canonical(), ParseOptions::new(Split::Train))
            .unwrap_err();
        assert!(matches!(err, CorpusError::Unreadable { .. }));
    }

    #[test]
    fn test_split_requires_three_explanations() {
        let text = format!("{HEADER}1\tentailment\tA b.\tC d.\tE f g.\t\t\t\t\n");
        let out = parse_reader(text.as_bytes(), &Schema::canonical(), ParseOptions::new(Split::Test)).unwrap();
        assert_eq!(out.rejects[0].reason.tag(), "explanation-count");
    }

    #[test]
    fn esnli_layout_with_quoted_fields_and_marked_highlights() {
        let text = "pairID,gold_label,Sentence1,Sentence2,Explanation_1,Sentence1_marked_1,Sentence2_marked_1,Sentence1_Highlighted_1,Sentence2_Highlighted_1\n\
            3416050480.jpg#4r1n,neutral,\"A person on a horse jumps over a broken down airplane.\",\"A person is training his horse for a competition.\",\"the person is not necessarily training his horse\",\"A person on a horse jumps over a broken down airplane.\",\"A person is *training* his horse for a *competition*.\",{},\"3,7\"\n";
        let out = parse_reader(text.as_bytes(), &Schema::esnli(1), ParseOptions::new(Split::Train)).unwrap();
        assert!(out.rejects.is_empty(), "{:?}", out.rejects);
        let r = &out.records[0];
        assert_eq!(r.label, Label::Neutral);
        assert!(r.premise_highlights.is_empty());
        assert_eq!(r.hypothesis_highlights, BTreeSet::from([3, 8]));
    }

    #[test]
    fn schema_from_toml() {
        let s = Schema::from_toml(
            "delimiter = \"tab\"\npair_id = \"id\"\nlabel = \"y\"\npremise = \"p\"\nhypothesis = \"h\"\nexplanation_1 = \"e\"\n",
        )
        .unwrap();
        assert_eq!(s.delimiter_byte().unwrap(), b'\t');
        assert_eq!(s.explanation_1.as_deref(), Some("e"));
        assert!(Schema::from_toml("pair_id = \"id\"\nbogus = 1\n").is_err());
    }
}
