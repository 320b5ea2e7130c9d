//! An interpolated n-gram language model with additive smoothing — the
//! desk-scale stand-in for a large pretrained model. Deterministic in
//! its corpus, and its next-token distribution is proper for any
//! context, including unseen and empty ones.

use super::LanguageModel;
use crate::error::{Error, Result};
use std::collections::BTreeMap;

/// The token every out-of-vocabulary word maps to.
pub const UNKNOWN_TOKEN: &str = "<unk>";

/// Additive smoothing mass per token; also the only probability source
/// for contexts never seen in training.
const SMOOTHING: f64 = 0.1;

#[derive(Debug, Clone, Default, PartialEq)]
struct ContextCounts {
    next: BTreeMap<usize, u64>,
    total: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NGramLM {
    order: usize,
    vocabulary: Vec<String>,
    index: BTreeMap<String, usize>,
    /// `counts[k]` maps a context of exactly `k` token indices to the
    /// counts of what followed it; `k` ranges over `0..order`.
    counts: Vec<BTreeMap<Vec<usize>, ContextCounts>>,
    /// Interpolation weight of the `(k+1)`-gram component, summing to 1
    /// and doubling with each order so longer matches dominate.
    weights: Vec<f64>,
}

impl NGramLM {
    pub fn order(&self) -> usize {
        self.order
    }

    /// The index a token resolves to: its own, or the unknown token's.
    pub fn token_index(&self, token: &str) -> usize {
        self.index
            .get(token)
            .copied()
            .unwrap_or_else(|| self.index[UNKNOWN_TOKEN])
    }
}

impl LanguageModel for NGramLM {
    fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    fn next_distribution(&self, context: &[String]) -> Vec<f64> {
        let m = self.vocabulary.len();
        let ids: Vec<usize> = context.iter().map(|t| self.token_index(t)).collect();
        let mut dist = vec![0.0; m];
        for (k, weight) in self.weights.iter().enumerate() {
            // A context shorter than k tokens can never match a stored
            // k-token key, so its component degrades to the smoothing
            // uniform — the interpolated back-off.
            let ctx = &ids[ids.len().saturating_sub(k)..];
            let counts = self.counts[k].get(ctx);
            let denom = counts.map_or(0, |c| c.total) as f64 + SMOOTHING * m as f64;
            for (i, d) in dist.iter_mut().enumerate() {
                let c = counts.and_then(|c| c.next.get(&i)).copied().unwrap_or(0);
                *d += weight * (c as f64 + SMOOTHING) / denom;
            }
        }
        dist
    }
}

/// Train an order-`order` interpolated n-gram on `corpus`. With
/// `vocab_cap` set, only the most frequent `cap` tokens (ties broken
/// alphabetically) keep their identity; the rest collapse into
/// [`UNKNOWN_TOKEN`], which is always present.
pub fn train_ngram(corpus: &str, order: usize, vocab_cap: Option<usize>) -> Result<NGramLM> {
    if order == 0 {
        return Err(Error::Argument("n-gram order must be at least 1".to_string()));
    }
    let tokens = super::tokenize(corpus);
    if tokens.is_empty() {
        return Err(Error::Data("the training corpus has no tokens".to_string()));
    }

    let mut frequency: BTreeMap<&str, u64> = BTreeMap::new();
    for t in &tokens {
        *frequency.entry(t).or_insert(0) += 1;
    }
    let kept: Vec<&str> = match vocab_cap {
        Some(cap) if frequency.len() > cap => {
            let mut ranked: Vec<(&str, u64)> =
                frequency.iter().map(|(&t, &c)| (t, c)).collect();
            ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
            ranked.truncate(cap);
            ranked.into_iter().map(|(t, _)| t).collect()
        }
        _ => frequency.keys().copied().collect(),
    };

    let mut vocabulary: Vec<String> = kept.iter().map(|t| t.to_string()).collect();
    vocabulary.push(UNKNOWN_TOKEN.to_string());
    vocabulary.sort();
    vocabulary.dedup();
    let index: BTreeMap<String, usize> = vocabulary
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i))
        .collect();

    let unk = index[UNKNOWN_TOKEN];
    let ids: Vec<usize> = tokens
        .iter()
        .map(|t| index.get(t.as_str()).copied().unwrap_or(unk))
        .collect();

    let mut counts: Vec<BTreeMap<Vec<usize>, ContextCounts>> = vec![BTreeMap::new(); order];
    for (i, &next) in ids.iter().enumerate() {
        for (k, level) in counts.iter_mut().enumerate() {
            if i < k {
                continue;
            }
            let entry = level.entry(ids[i - k..i].to_vec()).or_default();
            *entry.next.entry(next).or_insert(0) += 1;
            entry.total += 1;
        }
    }

    let total_weight = (2u64.pow(order as u32) - 1) as f64;
    let weights: Vec<f64> = (0..order)
        .map(|k| 2f64.powi(k as i32) / total_weight)
        .collect();

    Ok(NGramLM {
        order,
        vocabulary,
        index,
        counts,
        weights,
    })
}
