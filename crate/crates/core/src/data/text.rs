//! Bag-of-words preprocessing for JSON-lines text corpora.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::matrix::{Attribute, Column, FeatureMatrix, Schema};
use super::DataError;
use crate::bits::Bits;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Document {
    pub text: String,
    pub label: String,
}

/// Most frequent corpus tokens, by descending count then lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub words: Vec<String>,
    /// Size that was asked for; larger than `words.len()` when the corpus ran short.
    pub requested: usize,
}

impl Vocabulary {
    pub fn size(&self) -> usize {
        self.words.len()
    }

    pub fn is_short(&self) -> bool {
        self.words.len() < self.requested
    }
}

/// Lowercase and split on every non-alphanumeric run.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
}

pub fn build_vocabulary<S: AsRef<str>>(corpus: &[S], size: usize) -> Result<Vocabulary, DataError> {
    if corpus.is_empty() {
        return Err(DataError::InvalidParameter("empty corpus".into()));
    }
    if size == 0 {
        return Err(DataError::InvalidParameter("vocabulary size must be at least 1".into()));
    }
    let mut counts: HashMap<String, usize> = HashMap::new();
    for doc in corpus {
        for tok in tokenize(doc.as_ref()) {
            *counts.entry(tok).or_default() += 1;
        }
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(size);
    Ok(Vocabulary {
        words: ranked.into_iter().map(|(w, _)| w).collect(),
        requested: size,
    })
}

pub fn word_attribute(token: &str) -> String {
    format!("w_{token}")
}

/// Binary occurrence matrix: column j is 1 iff `vocab.words[j]` occurs in the document.
pub fn vectorize_texts(corpus: &[Document], vocab: &Vocabulary) -> Result<FeatureMatrix, DataError> {
    if vocab.words.is_empty() {
        return Err(DataError::InvalidParameter("empty vocabulary".into()));
    }
    let position: HashMap<&str, usize> = vocab.words.iter().enumerate().map(|(i, w)| (w.as_str(), i)).collect();
    let mut columns = vec![Bits::zeros(corpus.len()); vocab.words.len()];
    for (r, doc) in corpus.iter().enumerate() {
        let seen: HashSet<String> = tokenize(&doc.text).collect();
        for tok in &seen {
            if let Some(&c) = position.get(tok.as_str()) {
                columns[c].set(r, true);
            }
        }
    }
    let schema = Schema::new(
        vocab
            .words
            .iter()
            .map(|w| Attribute::binary(word_attribute(w)))
            .collect(),
    )?;
    FeatureMatrix::new(
        schema,
        columns.into_iter().map(Column::Binary).collect(),
        corpus.iter().map(|d| d.label.clone()).collect(),
    )
}

#[derive(Deserialize)]
struct JsonDoc {
    text: String,
    label: serde_json::Value,
}

/// One `{"text": ..., "label": ...}` object per line; labels may be strings or integers.
pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Vec<Document>, DataError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| DataError::io(path, e))?;
    let mut docs = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| DataError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: JsonDoc = serde_json::from_str(&line).map_err(|e| DataError::Format {
            path: path.display().to_string(),
            line: n + 1,
            message: e.to_string(),
        })?;
        let label = match doc.label {
            serde_json::Value::String(s) => s,
            serde_json::Value::Number(n) if n.is_i64() || n.is_u64() => n.to_string(),
            other => {
                return Err(DataError::Format {
                    path: path.display().to_string(),
                    line: n + 1,
                    message: format!("label must be a string or integer, got {other}"),
                })
            }
        };
        docs.push(Document { text: doc.text, label });
    }
    Ok(docs)
}
