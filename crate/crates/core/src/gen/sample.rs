//! Top-k sampling over next-token scores that may be unnormalized or
//! negative after the anchor adjustment.

use crate::error::{Error, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Sample a token index from the `topk` highest scores, ties broken by
/// ascending index. Retained scores are shifted so their minimum is 0
/// when any is negative, then renormalized; if everything is zero after
/// the shift the draw is uniform over the retained set. Exactly one RNG
/// draw is consumed either way, so score values never change the draw
/// count.
pub fn sample_topk(scores: &[f64], topk: usize, rng: &mut ChaCha8Rng) -> Result<usize> {
    if topk == 0 {
        return Err(Error::Argument("top-k sampling needs k >= 1".to_string()));
    }
    if scores.is_empty() {
        return Err(Error::Argument(
            "top-k sampling needs a nonempty score vector".to_string(),
        ));
    }
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::Numeric(format!("non-finite score {bad} in sample_topk")));
    }

    let k = topk.min(scores.len());
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let retained = &order[..k];

    let min = retained
        .iter()
        .map(|&i| scores[i])
        .fold(f64::INFINITY, f64::min);
    let shift = if min < 0.0 { -min } else { 0.0 };
    let weights: Vec<f64> = retained.iter().map(|&i| scores[i] + shift).collect();
    let total: f64 = weights.iter().sum();

    let u: f64 = rng.random();
    if total <= 0.0 {
        let slot = ((u * k as f64) as usize).min(k - 1);
        return Ok(retained[slot]);
    }
    let target = u * total;
    let mut acc = 0.0;
    for (&i, w) in retained.iter().zip(&weights) {
        acc += w;
        if target < acc {
            return Ok(i);
        }
    }
    Ok(retained[k - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use std::collections::BTreeMap;

    fn draw_counts(scores: &[f64], topk: usize, draws: usize, seed: u64) -> BTreeMap<usize, usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut counts = BTreeMap::new();
        for _ in 0..draws {
            let i = sample_topk(scores, topk, &mut rng).unwrap();
            *counts.entry(i).or_insert(0) += 1;
        }
        counts
    }

    #[test]
    fn topk_one_is_a_deterministic_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            assert_eq!(sample_topk(&[0.1, 0.7, 0.2], 1, &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn argmax_ties_break_toward_the_lower_index() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert_eq!(sample_topk(&[0.2, 0.5, 0.5], 1, &mut rng).unwrap(), 1);
    }

    #[test]
    fn one_hot_scores_always_return_that_token() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            assert_eq!(sample_topk(&[0.0, 0.0, 1.0, 0.0], 4, &mut rng).unwrap(), 2);
        }
    }

    #[test]
    fn a_fixed_seed_reproduces_the_sample_sequence() {
        let scores = [0.3, 0.1, 0.25, 0.2, 0.15];
        let seq = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..40)
                .map(|_| sample_topk(&scores, 3, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(seq(123), seq(123));
        assert_ne!(seq(123), seq(124));
    }

    #[test]
    fn negative_scores_shift_the_minimum_retained_score_to_zero() {
        // Retained at k=2: scores 2.0 (index 2) and -1.0 (index 0); the
        // shift gives weights [3, 0], so index 2 is drawn always.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            assert_eq!(sample_topk(&[-1.0, -3.0, 2.0], 2, &mut rng).unwrap(), 2);
        }
    }

    #[test]
    fn all_zero_after_shift_falls_back_to_uniform() {
        let counts = draw_counts(&[-2.0, -2.0, -2.0], 3, 30_000, 5);
        for i in 0..3 {
            let freq = counts[&i] as f64 / 30_000.0;
            assert!((freq - 1.0 / 3.0).abs() < 0.02, "index {i}: {freq}");
        }
    }

    #[test]
    fn oversized_topk_clamps_to_the_vocabulary() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert!(sample_topk(&[0.5, 0.5], 10, &mut rng).is_ok());
    }

    #[test]
    fn empirical_distribution_matches_renormalized_scores_within_two_percent() {
        let scores = [0.1, 0.4, 0.05, 0.3, 0.15];
        let draws = 100_000;
        let counts = draw_counts(&scores, 5, draws, 42);
        let total: f64 = scores.iter().sum();
        let tv: f64 = scores
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let expected = s / total;
                let observed = counts.get(&i).copied().unwrap_or(0) as f64 / draws as f64;
                (expected - observed).abs()
            })
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.02, "total variation {tv}");
    }

    #[test]
    fn zero_topk_and_empty_scores_are_argument_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            sample_topk(&[0.5], 0, &mut rng).unwrap_err(),
            Error::Argument(_)
        ));
        assert!(matches!(
            sample_topk(&[], 3, &mut rng).unwrap_err(),
            Error::Argument(_)
        ));
    }

    #[test]
    fn non_finite_scores_are_a_numeric_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            sample_topk(&[0.5, f64::NAN], 2, &mut rng).unwrap_err(),
            Error::Numeric(_)
        ));
    }
}
