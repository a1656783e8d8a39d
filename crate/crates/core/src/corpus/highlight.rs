//! Conversion of the highlight formats found in crowd-sourced files into
//! token-index sets.

use std::collections::BTreeSet;

use super::tokenize::tokenize;

/// Why a highlight cell could not be converted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HighlightError {
    /// An explicit index does not address a token of the sentence.
    OutOfBounds { index: usize, len: usize },
    /// The cell could not be read in any supported format.
    Malformed(String),
}

/// Parses one highlight cell against the tokenized sentence it refers to.
///
/// Accepted forms:
/// - comma-joined token indices, `"0,3,4"` (also `"{}"` or empty for none);
/// - an asterisk-marked copy of the sentence, `"a *man* is *sleeping*"`;
///   a copy with no marks means nothing is highlighted;
/// - comma-joined words, `"man,sleeping"`, matched against every position
///   holding that token.
pub fn parse_highlights(
    cell: &str,
    sentence: &[String],
) -> Result<BTreeSet<usize>, HighlightError> {
    let trimmed = cell.trim();
    if trimmed.is_empty() || trimmed == "{}" {
        return Ok(BTreeSet::new());
    }
    if trimmed.contains('*') {
        return parse_marked(trimmed, sentence);
    }
    if sentence.len() > 1 && tokenize(trimmed) == sentence {
        return Ok(BTreeSet::new());
    }
    let items: Vec<&str> = trimmed
        .trim_matches(|c| c == '{' || c == '}')
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if !items.is_empty() && items.iter().all(|s| s.bytes().all(|b| b.is_ascii_digit())) {
        let mut out = BTreeSet::new();
        for item in items {
            let index: usize = item
                .parse()
                .map_err(|_| HighlightError::Malformed(item.to_string()))?;
            if index >= sentence.len() {
                return Err(HighlightError::OutOfBounds {
                    index,
                    len: sentence.len(),
                });
            }
            out.insert(index);
        }
        return Ok(out);
    }
    parse_words(&items, sentence)
}

fn parse_words(items: &[&str], sentence: &[String]) -> Result<BTreeSet<usize>, HighlightError> {
    let mut out = BTreeSet::new();
    for item in items {
        let word = tokenize(item);
        if word.is_empty() {
            continue;
        }
        let mut found = false;
        for start in 0..sentence.len() {
            if sentence[start..].starts_with(&word) {
                out.extend(start..start + word.len());
                found = true;
            }
        }
        if !found {
            return Err(HighlightError::Malformed(format!("word {item:?} not in sentence")));
        }
    }
    Ok(out)
}

fn parse_marked(cell: &str, sentence: &[String]) -> Result<BTreeSet<usize>, HighlightError> {
    let mut inside = false;
    let mut position = 0;
    let mut out = BTreeSet::new();
    for token in tokenize(cell) {
        if token == "*" {
            inside = !inside;
            continue;
        }
        if sentence.get(position) != Some(&token) {
            return Err(HighlightError::Malformed(format!(
                "marked text diverges from sentence at token {position}"
            )));
        }
        if inside {
            out.insert(position);
        }
        position += 1;
    }
    if position != sentence.len() {
        return Err(HighlightError::Malformed("marked text is shorter than sentence".into()));
    }
    Ok(out)
}

/// Canonical form: comma-joined ascending indices.
pub fn format_highlights(set: &BTreeSet<usize>) -> String {
    set.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}
