//! Anchor-conditioned score adjustment: bias a language model's
//! next-token probabilities toward words decoded from a brain scan.
//!
//! The adjustment is `p′_i = p_i + k · Σ_j cossim(γ(t_i), γ(w_j))` over
//! the anchor words `w_j`. Cosine SIMILARITY pulls generation toward
//! the anchors; the `use_distance` flag flips the term to `1 − cossim`
//! for experiments with the repelling variant. The output is a score
//! vector — renormalization happens inside top-k sampling.

use crate::data::EmbeddingTable;
use crate::error::{Error, Result};
use crate::nn::cosine_similarity;

/// The decoded words that steer generation, with the bias strength `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSet {
    pub words: Vec<String>,
    /// The `k` in `p′_i = p_i + k·Σ_j cossim(γ(t_i), γ(w_j))`.
    pub strength: f64,
    /// Add cosine distance instead of similarity (repels from anchors).
    pub use_distance: bool,
}

impl AnchorSet {
    /// An attracting anchor set; 7.0 is the tuned default strength.
    pub fn new(words: Vec<String>, strength: f64) -> Self {
        AnchorSet {
            words,
            strength,
            use_distance: false,
        }
    }
}

impl Default for AnchorSet {
    fn default() -> Self {
        AnchorSet::new(Vec::new(), 7.0)
    }
}

/// The embedding a token resolves to: exact match first, lowercase
/// second, nothing otherwise.
fn token_embedding<'a>(embeddings: &'a EmbeddingTable, token: &str) -> Option<&'a [f64]> {
    if embeddings.contains(token) {
        return embeddings.get(token).ok();
    }
    let lower = token.to_lowercase();
    if embeddings.contains(&lower) {
        return embeddings.get(&lower).ok();
    }
    None
}

/// The per-token additive bias `k · Σ_j term(t_i, w_j)`: computed once
/// per generation run, since it depends only on the vocabulary and the
/// anchor set. Tokens without an embedding contribute 0; every anchor
/// word must have one.
pub(super) fn anchor_bias(
    anchors: &AnchorSet,
    tokens: &[String],
    embeddings: &EmbeddingTable,
) -> Result<Vec<f64>> {
    if anchors.words.is_empty() {
        return Err(Error::Lookup(
            "the anchor set has no words with embeddings".to_string(),
        ));
    }
    let anchor_vectors: Vec<&[f64]> = anchors
        .words
        .iter()
        .map(|w| {
            token_embedding(embeddings, w).ok_or_else(|| {
                Error::Lookup(format!("anchor word '{w}' has no embedding"))
            })
        })
        .collect::<Result<_>>()?;

    let mut bias = Vec::with_capacity(tokens.len());
    for token in tokens {
        let Some(vector) = token_embedding(embeddings, token) else {
            bias.push(0.0);
            continue;
        };
        let mut sum = 0.0;
        for anchor in &anchor_vectors {
            let s = cosine_similarity(vector, anchor)?;
            sum += if anchors.use_distance { 1.0 - s } else { s };
        }
        bias.push(anchors.strength * sum);
    }
    Ok(bias)
}

/// Adjust a next-token distribution toward the anchors:
/// `p′_i = p_i + k·Σ_j cossim(γ(t_i), γ(w_j))`, where `tokens[i]` names
/// token `i`. Returns an unnormalized score vector.
pub fn anchor_adjust(
    p: &[f64],
    anchors: &AnchorSet,
    tokens: &[String],
    embeddings: &EmbeddingTable,
) -> Result<Vec<f64>> {
    if p.len() != tokens.len() {
        return Err(Error::Dimension {
            op: "anchor_adjust",
            left: format!("distribution [{}]", p.len()),
            right: format!("tokens [{}]", tokens.len()),
        });
    }
    let bias = anchor_bias(anchors, tokens, embeddings)?;
    Ok(p.iter().zip(&bias).map(|(pi, bi)| pi + bi).collect())
}
