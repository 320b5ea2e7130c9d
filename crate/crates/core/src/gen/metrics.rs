//! Metrics over generation records: perplexity from the unadjusted
//! probabilities (fluency) and anchor-hit counts (steering efficacy).

use super::generate::GenerationRecord;
use crate::data::EmbeddingTable;
use crate::error::{Error, Result};
use crate::nn::cosine_similarity;
use std::collections::BTreeSet;

/// `exp(−mean log p)` pooled over every recorded probability in every
/// record. The records store the language model's own probabilities, so
/// this measures the model's fluency judgment of what anchoring made it
/// say.
pub fn perplexity(records: &[GenerationRecord]) -> Result<f64> {
    let mut n = 0usize;
    let mut sum_log = 0.0;
    for record in records {
        for &p in &record.probabilities {
            if !(p > 0.0) {
                return Err(Error::Contract(format!(
                    "recorded probability {p} is not positive"
                )));
            }
            sum_log += p.ln();
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::Argument(
            "perplexity needs at least one recorded probability".to_string(),
        ));
    }
    Ok((-sum_log / n as f64).exp())
}

/// Mean occurrences per record of `correct_word` among the generated
/// tokens (word_count), and of its `n_neighbors` nearest embedding
/// neighbors by cosine similarity, the word itself excluded
/// (related_count). Token matching is case-insensitive.
pub fn anchor_hit_metrics(
    records: &[GenerationRecord],
    correct_word: &str,
    embeddings: &EmbeddingTable,
    n_neighbors: usize,
) -> Result<(f64, f64)> {
    if records.is_empty() {
        return Err(Error::Argument(
            "anchor-hit metrics need at least one record".to_string(),
        ));
    }
    let target = embeddings.get(correct_word)?;
    let correct_lower = correct_word.to_lowercase();

    let mut ranked: Vec<(f64, &str)> = Vec::new();
    for word in embeddings.words() {
        if word.to_lowercase() == correct_lower {
            continue;
        }
        ranked.push((cosine_similarity(embeddings.get(word)?, target)?, word));
    }
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)));
    let neighbors: BTreeSet<String> = ranked
        .iter()
        .take(n_neighbors)
        .map(|(_, w)| w.to_lowercase())
        .collect();

    let mut word_hits = 0usize;
    let mut related_hits = 0usize;
    for record in records {
        for token in &record.generated {
            let lower = token.to_lowercase();
            if lower == correct_lower {
                word_hits += 1;
            }
            if neighbors.contains(&lower) {
                related_hits += 1;
            }
        }
    }
    let n = records.len() as f64;
    Ok((word_hits as f64 / n, related_hits as f64 / n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{generate, GenConfig, LanguageModel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn record(generated: &[&str], probabilities: &[f64]) -> GenerationRecord {
        GenerationRecord {
            context: Vec::new(),
            generated: generated.iter().map(|t| t.to_string()).collect(),
            probabilities: probabilities.to_vec(),
            anchors: None,
        }
    }

    /// A model that always answers with the uniform distribution.
    struct UniformLM {
        tokens: Vec<String>,
    }

    impl LanguageModel for UniformLM {
        fn vocabulary(&self) -> &[String] {
            &self.tokens
        }
        fn next_distribution(&self, _context: &[String]) -> Vec<f64> {
            vec![1.0 / self.tokens.len() as f64; self.tokens.len()]
        }
    }

    #[test]
    fn uniform_model_perplexity_equals_the_vocabulary_size() {
        let m = 7;
        let lm = UniformLM {
            tokens: (0..m).map(|i| format!("t{i}")).collect(),
        };
        let cfg = GenConfig {
            tokens_to_generate: 20,
            topk: m,
            runs_per_scan: 1,
            seed: 4,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rec = generate(&lm, &[], None, &cfg, &mut rng).unwrap();
        let ppl = perplexity(&[rec]).unwrap();
        assert!(
            ((ppl - m as f64) / m as f64).abs() < 1e-9,
            "perplexity {ppl} vs {m}"
        );
    }

    #[test]
    fn certain_predictions_give_perplexity_one() {
        let rec = record(&["a", "b"], &[1.0, 1.0]);
        assert!((perplexity(&[rec]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn perplexity_pools_across_records() {
        // Four probabilities across two records: exp(−mean ln p).
        let records = [
            record(&["a", "b"], &[0.5, 0.25]),
            record(&["c", "d"], &[0.125, 1.0]),
        ];
        let expected =
            (-(0.5f64.ln() + 0.25f64.ln() + 0.125f64.ln() + 1.0f64.ln()) / 4.0).exp();
        assert!((perplexity(&records).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn empty_records_are_an_argument_error() {
        assert!(matches!(
            perplexity(&[]).unwrap_err(),
            Error::Argument(_)
        ));
        assert!(matches!(
            perplexity(&[record(&[], &[])]).unwrap_err(),
            Error::Argument(_)
        ));
    }

    #[test]
    fn nonpositive_probabilities_violate_the_record_contract() {
        let rec = record(&["a"], &[0.0]);
        assert!(matches!(
            perplexity(&[rec]).unwrap_err(),
            Error::Contract(_)
        ));
    }

    fn hit_table() -> EmbeddingTable {
        let mut table = EmbeddingTable::new(2);
        table.insert("dog", vec![1.0, 0.0]).unwrap();
        table.insert("wolf", vec![0.9, 0.1]).unwrap();
        table.insert("cat", vec![0.5, 0.5]).unwrap();
        table.insert("stone", vec![0.0, 1.0]).unwrap();
        table
    }

    #[test]
    fn absent_word_counts_zero() {
        let records = [record(&["stone", "cat"], &[0.5, 0.5])];
        let (word_count, _) = anchor_hit_metrics(&records, "dog", &hit_table(), 2).unwrap();
        assert_eq!(word_count, 0.0);
    }

    #[test]
    fn one_occurrence_per_record_counts_one() {
        let records = [
            record(&["dog", "stone"], &[0.5, 0.5]),
            record(&["stone", "dog"], &[0.5, 0.5]),
        ];
        let (word_count, _) = anchor_hit_metrics(&records, "dog", &hit_table(), 2).unwrap();
        assert_eq!(word_count, 1.0);
    }

    #[test]
    fn hand_built_two_record_toy_matches_hand_counts() {
        // Neighbors of "dog" at n = 2: wolf (cossim ~0.994) and cat
        // (~0.707); stone (0) is excluded. Dog appears 2+1 times across
        // the records (mean 1.5); wolf and cat once each (mean 1.0).
        let records = [
            record(&["dog", "wolf", "dog", "stone"], &[0.5; 4]),
            record(&["cat", "dog"], &[0.5; 2]),
        ];
        let (word_count, related_count) =
            anchor_hit_metrics(&records, "dog", &hit_table(), 2).unwrap();
        assert!((word_count - 1.5).abs() < 1e-12);
        assert!((related_count - 1.0).abs() < 1e-12);
    }

    #[test]
    fn token_matching_is_case_insensitive() {
        let records = [record(&["Dog", "WOLF"], &[0.5, 0.5])];
        let (word_count, related_count) =
            anchor_hit_metrics(&records, "dog", &hit_table(), 1).unwrap();
        assert_eq!(word_count, 1.0);
        assert_eq!(related_count, 1.0);
    }

    #[test]
    fn neighbor_list_excludes_the_word_itself() {
        // With n_neighbors covering the whole table, "dog" itself must
        // still not count as related.
        let records = [record(&["dog"], &[0.5])];
        let (_, related_count) =
            anchor_hit_metrics(&records, "dog", &hit_table(), 10).unwrap();
        assert_eq!(related_count, 0.0);
    }

    #[test]
    fn unknown_correct_word_is_a_lookup_error() {
        let records = [record(&["dog"], &[0.5])];
        assert!(matches!(
            anchor_hit_metrics(&records, "ghost", &hit_table(), 2).unwrap_err(),
            Error::Lookup(_)
        ));
    }
}
