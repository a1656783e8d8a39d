//! Frozen sentence vectors from a trained encoder.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::autodiff::ParameterStore;
use crate::corpus::{encode, tokenize, PaddedIds, Vocabulary};
use crate::models::Model;

use super::EvalError;

/// Row-major `rows × dim` matrix of pooled encoder states.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub rows: usize,
    pub dim: usize,
    pub data: Vec<f64>,
    /// Rows whose sentence tokenized to nothing and was encoded as `<unk>`.
    pub flagged: Vec<usize>,
}

impl EmbeddingMatrix {
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.dim..(r + 1) * self.dim]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingManifest {
    pub config_hash: String,
    pub rows: usize,
    pub dim: usize,
    pub format: String,
    pub flagged: Vec<usize>,
}

pub const MATRIX_FORMAT: &str = "f64-le-row-major";

/// Encodes `sentences` in batches of `batch_size`.
pub fn export_embeddings<S: AsRef<str>>(
    model: &Model,
    store: &ParameterStore,
    vocab: &Vocabulary,
    sentences: &[S],
    batch_size: usize,
) -> Result<EmbeddingMatrix, EvalError> {
    let dim = model.encoder.output_dim();
    let mut data = Vec::with_capacity(sentences.len() * dim);
    let mut flagged = Vec::new();
    let mut seqs: Vec<Vec<usize>> = Vec::with_capacity(sentences.len());
    for (i, s) in sentences.iter().enumerate() {
        let mut ids = encode(vocab, &tokenize(s.as_ref()));
        if ids.is_empty() {
            ids.push(Vocabulary::UNK);
            flagged.push(i);
        }
        seqs.push(ids);
    }
    for chunk in seqs.chunks(batch_size.max(1)) {
        let ids = PaddedIds::from_sequences(chunk.to_vec());
        let t = model.sentence_embeddings(store, &ids)?;
        data.extend_from_slice(t.data());
    }
    Ok(EmbeddingMatrix { rows: sentences.len(), dim, data, flagged })
}

/// Writes `<stem>.bin` and `<stem>.manifest.toml` into `dir`; returns
/// both paths.
pub fn write_embeddings(
    dir: &Path,
    stem: &str,
    matrix: &EmbeddingMatrix,
    config_hash: &str,
) -> Result<(PathBuf, PathBuf), EvalError> {
    fs::create_dir_all(dir)?;
    let bin = dir.join(format!("{stem}.bin"));
    let manifest = dir.join(format!("{stem}.manifest.toml"));
    let bytes: Vec<u8> = matrix.data.iter().flat_map(|x| x.to_le_bytes()).collect();
    fs::write(&bin, bytes)?;
    let m = EmbeddingManifest {
        config_hash: config_hash.to_string(),
        rows: matrix.rows,
        dim: matrix.dim,
        format: MATRIX_FORMAT.to_string(),
        flagged: matrix.flagged.clone(),
    };
    fs::write(&manifest, toml::to_string(&m).map_err(|e| EvalError::Manifest(e.to_string()))?)?;
    Ok((bin, manifest))
}

pub fn read_embeddings(bin: &Path, manifest: &Path) -> Result<(EmbeddingMatrix, EmbeddingManifest), EvalError> {
    let text = fs::read_to_string(manifest)?;
    let m: EmbeddingManifest = toml::from_str(&text).map_err(|e| EvalError::Manifest(e.to_string()))?;
    let bytes = fs::read(bin)?;
    if m.format != MATRIX_FORMAT || bytes.len() != m.rows * m.dim * 8 {
        return Err(EvalError::Manifest(format!(
            "{} bytes do not hold {}x{} {}",
            bytes.len(),
            m.rows,
            m.dim,
            m.format
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let matrix = EmbeddingMatrix { rows: m.rows, dim: m.dim, data, flagged: m.flagged.clone() };
    Ok((matrix, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocab, synthetic};
    use crate::models::{ModelConfig, Variant};

    fn setup() -> (Model, ParameterStore, Vocabulary) {
        let recs = synthetic::overfit_corpus(9, 2);
        let vocab = build_vocab(&[&recs], 1).unwrap();
        let (m, s) = Model::new(&ModelConfig::tiny(Variant::PredictAndExplain), vocab.len()).unwrap();
        (m, s, vocab)
    }

    #[test]
    fn duplicates_match_and_batching_does_not_matter() {
        let (m, s, v) = setup();
        let sents = ["a dog is running in the park .", "a cat sleeps", "a dog is running in the park ."];
        let one = export_embeddings(&m, &s, &v, &sents, 1).unwrap();
        let all = export_embeddings(&m, &s, &v, &sents, 8).unwrap();
        assert_eq!(one.dim, 2 * m.config.encoder_hidden);
        assert_eq!(one.row(0), one.row(2));
        assert_eq!(one.data, all.data);
        assert!(one.flagged.is_empty());
    }

    #[test]
    fn empty_sentences_are_flagged() {
        let (m, s, v) = setup();
        let e = export_embeddings(&m, &s, &v, &["", "a dog"], 4).unwrap();
        assert_eq!(e.flagged, [0]);
        assert_eq!(e.rows, 2);
    }

    #[test]
    fn file_round_trip() {
        let (m, s, v) = setup();
        let e = export_embeddings(&m, &s, &v, &["a dog", "the cat ."], 4).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (bin, man) = write_embeddings(dir.path(), "emb", &e, "abc").unwrap();
        let (back, manifest) = read_embeddings(&bin, &man).unwrap();
        assert_eq!(back, e);
        assert_eq!(manifest.config_hash, "abc");
    }
}
