//! The autoregressive generation loop: query the language model, record
//! the unadjusted probability of what gets sampled, bias the scores
//! toward the anchors, sample top-k, append, repeat.

use super::anchor::{anchor_bias, AnchorSet};
use super::sample::sample_topk;
use super::LanguageModel;
use crate::data::EmbeddingTable;
use crate::error::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub tokens_to_generate: usize,
    pub topk: usize,
    pub runs_per_scan: usize,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            tokens_to_generate: 30,
            topk: 40,
            runs_per_scan: 10,
            seed: 42,
        }
    }
}

impl GenConfig {
    pub fn validate(&self, vocab_size: usize) -> Result<()> {
        if self.tokens_to_generate == 0 {
            return Err(Error::Config(
                "tokens_to_generate must be at least 1".to_string(),
            ));
        }
        if self.topk == 0 || self.topk > vocab_size {
            return Err(Error::Config(format!(
                "topk must be in 1..={vocab_size} (the vocabulary size), got {}",
                self.topk
            )));
        }
        if self.runs_per_scan == 0 {
            return Err(Error::Config("runs_per_scan must be at least 1".to_string()));
        }
        Ok(())
    }
}

/// One generation run. `probabilities[i]` is the language model's own
/// probability of `generated[i]` BEFORE any anchor adjustment — the
/// values perplexity is defined over.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub context: Vec<String>,
    pub generated: Vec<String>,
    pub probabilities: Vec<f64>,
    pub anchors: Option<AnchorSet>,
}

/// Enforce the [`LanguageModel`] distribution contract on one output.
fn check_distribution(p: &[f64], vocab_size: usize) -> Result<()> {
    if p.len() != vocab_size {
        return Err(Error::Contract(format!(
            "language model produced {} probabilities for {} tokens",
            p.len(),
            vocab_size
        )));
    }
    if p.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::Contract(
            "language model produced a negative or NaN probability".to_string(),
        ));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Contract(format!(
            "language model distribution sums to {sum}, not 1"
        )));
    }
    Ok(())
}

/// Generate `cfg.tokens_to_generate` tokens after `context`. With
/// anchors present, each step's scores are `p + bias` where the bias is
/// the anchor adjustment (computed once — it depends only on the
/// vocabulary); without them the raw distribution is sampled, which is
/// bitwise identical to anchoring at strength 0 under the same RNG.
pub fn generate(
    lm: &dyn LanguageModel,
    context: &[String],
    anchors: Option<(&AnchorSet, &EmbeddingTable)>,
    cfg: &GenConfig,
    rng: &mut ChaCha8Rng,
) -> Result<GenerationRecord> {
    let tokens = lm.vocabulary();
    cfg.validate(tokens.len())?;
    let bias = anchors
        .map(|(set, table)| anchor_bias(set, tokens, table))
        .transpose()?;

    let mut full_context = context.to_vec();
    let mut generated = Vec::with_capacity(cfg.tokens_to_generate);
    let mut probabilities = Vec::with_capacity(cfg.tokens_to_generate);
    for _ in 0..cfg.tokens_to_generate {
        let p = lm.next_distribution(&full_context);
        check_distribution(&p, tokens.len())?;
        let choice = match &bias {
            Some(bias) => {
                let adjusted: Vec<f64> =
                    p.iter().zip(bias).map(|(pi, bi)| pi + bi).collect();
                sample_topk(&adjusted, cfg.topk, rng)?
            }
            None => sample_topk(&p, cfg.topk, rng)?,
        };
        probabilities.push(p[choice]);
        generated.push(tokens[choice].clone());
        full_context.push(tokens[choice].clone());
    }

    Ok(GenerationRecord {
        context: context.to_vec(),
        generated,
        probabilities,
        anchors: anchors.map(|(set, _)| set.clone()),
    })
}

/// `cfg.runs_per_scan` independent generations from the same context.
/// Run r draws from the RNG stream (cfg.seed, r), so every run is
/// reproducible on its own and the set is independent of execution
/// order.
pub fn run_generations(
    lm: &dyn LanguageModel,
    context: &[String],
    anchors: Option<(&AnchorSet, &EmbeddingTable)>,
    cfg: &GenConfig,
) -> Result<Vec<GenerationRecord>> {
    (0..cfg.runs_per_scan)
        .map(|run| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(run as u64);
            generate(lm, context, anchors, cfg, &mut rng)
        })
        .collect()
}
