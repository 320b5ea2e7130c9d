//! Top-K classification accuracy.

use crate::data::Scan;
use crate::error::{Error, Result};
use crate::eval::paradigm_groups;
use crate::model::BrainDecoder;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub struct TopKResult {
    pub k: usize,
    /// Fraction of scans whose true word is among the k highest-probability
    /// predictions.
    pub accuracy: f64,
    /// Per-paradigm (accuracy, scan count), keyed by paradigm label.
    pub per_paradigm: BTreeMap<String, (f64, usize)>,
    /// Top-1 confusion counts keyed by (true word, predicted word),
    /// independent of `k`.
    pub confusion: BTreeMap<(usize, usize), usize>,
}

/// Evaluate classification accuracy at `k` over labeled scans.
pub fn topk_accuracy(model: &BrainDecoder, scans: &[&Scan], k: usize) -> Result<TopKResult> {
    if scans.is_empty() {
        return Err(Error::Data("no scans to evaluate".to_string()));
    }
    if k == 0 {
        return Err(Error::Argument("k must be at least 1".to_string()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut hits = vec![false; scans.len()];
    let mut confusion: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (i, scan) in scans.iter().enumerate() {
        let t = scan.word_index.ok_or_else(|| {
            Error::Data(format!(
                "unlabeled scan of subject {} in the evaluation set",
                scan.subject_id
            ))
        })?;
        let ranked = model.predict_topk(scan, k, &mut rng)?;
        hits[i] = ranked.iter().any(|&(w, _)| w == t);
        *confusion.entry((t, ranked[0].0)).or_insert(0) += 1;
    }

    let paradigms: Vec<Option<u8>> = scans.iter().map(|s| s.paradigm).collect();
    let mut per_paradigm = BTreeMap::new();
    for (key, group) in paradigm_groups(&paradigms, false) {
        let correct = group.iter().filter(|&&i| hits[i]).count();
        per_paradigm.insert(key, (correct as f64 / group.len() as f64, group.len()));
    }
    let accuracy = hits.iter().filter(|&&h| h).count() as f64 / scans.len() as f64;
    Ok(TopKResult {
        k,
        accuracy,
        per_paradigm,
        confusion,
    })
}
