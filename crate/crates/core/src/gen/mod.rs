//! Anchor-guided text generation: a language-model interface with a
//! shipped n-gram implementation, next-token score adjustment toward
//! decoded anchor words, top-k sampling, and the fluency / anchor-hit
//! metrics computed over generation records.

mod anchor;
mod context;
mod generate;
mod metrics;
mod ngram;
mod sample;
mod tokenize;

pub use anchor::{anchor_adjust, AnchorSet};
pub use context::select_contexts;
pub use generate::{generate, run_generations, GenConfig, GenerationRecord};
pub use metrics::{anchor_hit_metrics, perplexity};
pub use ngram::{train_ngram, NGramLM, UNKNOWN_TOKEN};
pub use sample::sample_topk;
pub use tokenize::{split_sentences, tokenize};

/// An autoregressive language model over a fixed token vocabulary.
///
/// Implementations must be safe for concurrent `next_distribution`
/// calls (the `Sync` bound); generation runs are independent given
/// separate RNG streams.
pub trait LanguageModel: Sync {
    /// The token vocabulary. Index `i` in a distribution refers to
    /// `vocabulary()[i]`; the list is fixed after construction.
    fn vocabulary(&self) -> &[String];

    /// The probability distribution over the vocabulary for the token
    /// following `context`: nonnegative entries summing to 1 within
    /// 1e-9, for any context including the empty one. Tokens outside
    /// the vocabulary are the implementation's concern (the shipped
    /// n-gram maps them to its unknown token).
    fn next_distribution(&self, context: &[String]) -> Vec<f64>;
}
