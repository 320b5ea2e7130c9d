//! The run's word vocabulary: an ordered, duplicate-free list of words.
//! Word indices used everywhere else are positions in this list, so the
//! order is part of every artifact's contract.
//!
//! File format: one word per line, order significant.

use crate::error::{Error, Result};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
}

impl Vocabulary {
    pub fn new(words: Vec<String>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for w in &words {
            if w.is_empty() || w.split_whitespace().count() != 1 {
                return Err(Error::Data(format!(
                    "vocabulary entry '{w}' is not a single word"
                )));
            }
            if !seen.insert(w.clone()) {
                return Err(Error::Data(format!("duplicate vocabulary word '{w}'")));
            }
        }
        Ok(Vocabulary { words })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, index: usize) -> Result<&str> {
        self.words
            .get(index)
            .map(String::as_str)
            .ok_or_else(|| Error::Lookup(format!("word index {index} out of range")))
    }

    pub fn index_of(&self, word: &str) -> Result<usize> {
        self.words
            .iter()
            .position(|w| w == word)
            .ok_or_else(|| Error::Lookup(format!("word '{word}' not in vocabulary")))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.iter().any(|w| w == word)
    }
}

pub fn load_vocabulary(path: &Path) -> Result<Vocabulary> {
    let text = std::fs::read_to_string(path)?;
    let words: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect();
    Vocabulary::new(words).map_err(|e| Error::Format {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}

pub fn save_vocabulary(path: &Path, vocab: &Vocabulary) -> Result<()> {
    let mut out = String::new();
    for w in vocab.words() {
        out.push_str(w);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}
