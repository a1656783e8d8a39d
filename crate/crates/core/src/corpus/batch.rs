use super::vocab::{encode, Vocabulary};
use super::{ExampleRecord, Label, Sentence};

/// Right-padded id rows with their true lengths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaddedIds {
    pub ids: Vec<Vec<usize>>,
    pub lengths: Vec<usize>,
}

impl PaddedIds {
    pub fn from_sequences(seqs: Vec<Vec<usize>>) -> Self {
        let width = seqs.iter().map(Vec::len).max().unwrap_or(0);
        let lengths = seqs.iter().map(Vec::len).collect();
        let ids = seqs
            .into_iter()
            .map(|mut s| {
                s.resize(width, Vocabulary::PAD);
                s
            })
            .collect();
        Self { ids, lengths }
    }

    pub fn width(&self) -> usize {
        self.ids.first().map_or(0, Vec::len)
    }

    pub fn rows(&self) -> usize {
        self.ids.len()
    }

    /// Ids of every row at time step `t`.
    pub fn column(&self, t: usize) -> Vec<usize> {
        self.ids.iter().map(|row| row[t]).collect()
    }

    /// The unpadded sequence of row `r`.
    pub fn sequence(&self, r: usize) -> &[usize] {
        &self.ids[r][..self.lengths[r]]
    }

    /// Extends every row with `extra` more PAD columns.
    pub fn pad_extra(&mut self, extra: usize) {
        for row in &mut self.ids {
            row.extend(std::iter::repeat_n(Vocabulary::PAD, extra));
        }
    }
}

/// A group of encoded examples ready for the models.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub pair_ids: Vec<String>,
    pub premise: PaddedIds,
    pub hypothesis: PaddedIds,
    /// First explanation of every record, or `None` if any record has none.
    pub explanation: Option<PaddedIds>,
    pub labels: Vec<Label>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn from_records(records: &[&ExampleRecord], vocab: &Vocabulary) -> Self {
        let enc = |s: &Sentence| encode(vocab, &s.tokens);
        let explanation = records
            .iter()
            .map(|r| r.explanation().map(enc))
            .collect::<Option<Vec<_>>>()
            .map(PaddedIds::from_sequences);
        Batch {
            pair_ids: records.iter().map(|r| r.pair_id.clone()).collect(),
            premise: PaddedIds::from_sequences(records.iter().map(|r| enc(&r.premise)).collect()),
            hypothesis: PaddedIds::from_sequences(records.iter().map(|r| enc(&r.hypothesis)).collect()),
            explanation,
            labels: records.iter().map(|r| r.label).collect(),
        }
    }
}

/// Splits records, in order, into batches of at most `batch_size`.
pub fn make_batches<'a>(
    records: impl IntoIterator<Item = &'a ExampleRecord>,
    batch_size: usize,
    vocab: &Vocabulary,
) -> Vec<Batch> {
    let batch_size = batch_size.max(1);
    let all: Vec<&ExampleRecord> = records.into_iter().collect();
    all.chunks(batch_size)
        .map(|chunk| Batch::from_records(chunk, vocab))
        .collect()
}
