//! Word embedding table: a fixed-dimension vector per word.
//!
//! The table must cover the run's vocabulary and may carry extra words
//! beyond it (the generation stage looks up language-model tokens here
//! too). File format: plain text, one `word v1 v2 ... vd` line per word.

use crate::error::{Error, Result};
use crate::tensor::Tensor;
use std::collections::BTreeMap;
use std::path::Path;

use super::vocab::Vocabulary;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub dimension: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> Self {
        EmbeddingTable {
            dimension,
            vectors: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, word: &str, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dimension {
            return Err(Error::Dimension {
                op: "embedding_insert",
                left: format!("table dim [{}]", self.dimension),
                right: format!("vector [{}]", vector.len()),
            });
        }
        if vector.iter().map(|v| v * v).sum::<f64>() == 0.0 {
            return Err(Error::Data(format!("embedding for '{word}' has zero norm")));
        }
        self.vectors.insert(word.to_string(), vector);
        Ok(())
    }

    pub fn get(&self, word: &str) -> Result<&[f64]> {
        self.vectors
            .get(word)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Lookup(format!("no embedding for word '{word}'")))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.vectors.contains_key(word)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(String::as_str)
    }

    /// Check that every vocabulary word has a vector.
    pub fn check_covers(&self, vocab: &Vocabulary) -> Result<()> {
        for w in vocab.words() {
            if !self.contains(w) {
                return Err(Error::Data(format!(
                    "embedding table is missing vocabulary word '{w}'"
                )));
            }
        }
        Ok(())
    }

    /// Embedding matrix `[v x dimension]` in vocabulary order: row i is the
    /// vector for word i. This is the Y_true matrix the losses consume.
    pub fn matrix_for(&self, vocab: &Vocabulary) -> Result<Tensor> {
        let mut values = Vec::with_capacity(vocab.len() * self.dimension);
        for w in vocab.words() {
            values.extend_from_slice(self.get(w)?);
        }
        Ok(Tensor::new(vec![vocab.len(), self.dimension], values))
    }
}

pub fn load_embeddings(path: &Path, vocab: &Vocabulary) -> Result<EmbeddingTable> {
    let text = std::fs::read_to_string(path)?;
    let origin = path.display().to_string();
    let mut table: Option<EmbeddingTable> = None;

    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let word = parts.next().unwrap();
        let vector: Vec<f64> = parts
            .map(|t| {
                t.parse::<f64>().map_err(|_| Error::Format {
                    path: origin.clone(),
                    msg: format!("line {}: bad float '{}'", lineno + 1, t),
                })
            })
            .collect::<Result<_>>()?;
        let table = table.get_or_insert_with(|| EmbeddingTable::new(vector.len()));
        if vector.len() != table.dimension {
            return Err(Error::Format {
                path: origin.clone(),
                msg: format!(
                    "line {}: '{}' has {} values, expected {}",
                    lineno + 1,
                    word,
                    vector.len(),
                    table.dimension
                ),
            });
        }
        table.insert(word, vector).map_err(|e| Error::Format {
            path: origin.clone(),
            msg: format!("line {}: {}", lineno + 1, e),
        })?;
    }

    let table = table.ok_or_else(|| Error::Format {
        path: origin,
        msg: "empty embedding file".to_string(),
    })?;
    table.check_covers(vocab)?;
    Ok(table)
}

pub fn save_embeddings(path: &Path, table: &EmbeddingTable) -> Result<()> {
    let mut out = String::new();
    for (word, vector) in &table.vectors {
        out.push_str(word);
        for v in vector {
            // 17 significant digits: enough to round-trip any f64 exactly.
            out.push_str(&format!(" {v:.17e}"));
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}
