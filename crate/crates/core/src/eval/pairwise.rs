//! Pairwise two-alternative decoding accuracy.
//!
//! For every unordered pair of scans with different words (within one
//! paradigm), four Pearson correlations are computed between the two
//! decoded vectors and the two true embedding vectors. The pair counts
//! as a win when the matched assignment beats the swapped one under the
//! sum rule:
//!
//! `corr(d_i, e_i) + corr(d_j, e_j) > corr(d_i, e_j) + corr(d_j, e_i)`
//!
//! Exact equality scores half a win. Paradigm accuracies are averaged
//! with equal weight. Chance level is 0.5.

use crate::error::{Error, Result};
use crate::eval::paradigm_groups;
use crate::nn::pearson;
use crate::tensor::Tensor;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseResult {
    /// Mean of the per-paradigm accuracies.
    pub accuracy: f64,
    /// Total pairs across paradigms.
    pub n_pairs: usize,
    /// Per-paradigm (accuracy, pair count), keyed by paradigm label.
    pub per_paradigm: BTreeMap<String, (f64, usize)>,
    /// Scan indices whose decoded vector was constant; their pairs all
    /// count as losses.
    pub degenerate_scans: Vec<usize>,
}

fn is_constant(row: &[f64]) -> bool {
    row.windows(2).all(|w| w[0] == w[1])
}

/// `decoded` holds one decoded vector per scan (`[n x d]`), `labels[i]`
/// the scan's true word index into `embeddings` (`[v x d]`), and
/// `paradigms[i]` its presentation paradigm. `pool_paradigms` compares
/// across paradigms instead of within.
pub fn pairwise_accuracy(
    decoded: &Tensor,
    labels: &[usize],
    paradigms: &[Option<u8>],
    embeddings: &Tensor,
    pool_paradigms: bool,
) -> Result<PairwiseResult> {
    let (n, d) = decoded.dims2();
    let (v, ed) = embeddings.dims2();
    if d != ed {
        return Err(Error::Dimension {
            op: "pairwise_accuracy",
            left: format!("decoded {}", decoded.shape_string()),
            right: format!("embeddings {}", embeddings.shape_string()),
        });
    }
    if labels.len() != n || paradigms.len() != n {
        return Err(Error::Dimension {
            op: "pairwise_accuracy",
            left: format!("decoded [{n}]"),
            right: format!("labels [{}] / paradigms [{}]", labels.len(), paradigms.len()),
        });
    }
    if let Some(&w) = labels.iter().find(|&&w| w >= v) {
        return Err(Error::Lookup(format!(
            "label word index {w} outside embedding table of {v}"
        )));
    }
    {
        let mut distinct: Vec<usize> = labels.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() < 2 {
            return Err(Error::Data(
                "pairwise accuracy needs scans of at least two distinct words".to_string(),
            ));
        }
    }

    // Correlations of each non-degenerate decoded vector against every
    // word that occurs in the scan set.
    let mut words: Vec<usize> = labels.to_vec();
    words.sort_unstable();
    words.dedup();
    let degenerate_mask: Vec<bool> = (0..n).map(|i| is_constant(decoded.row(i))).collect();
    let degenerate: Vec<usize> = (0..n).filter(|&i| degenerate_mask[i]).collect();
    let mut corr: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    for i in 0..n {
        if degenerate_mask[i] {
            continue;
        }
        for &w in &words {
            corr[i].insert(w, pearson(decoded.row(i), embeddings.row(w))?);
        }
    }

    let mut per_paradigm = BTreeMap::new();
    let mut n_pairs_total = 0usize;
    let mut acc_sum = 0.0;
    let mut groups_counted = 0usize;
    for (key, group) in paradigm_groups(paradigms, pool_paradigms) {
        let mut wins = 0.0f64;
        let mut pairs = 0usize;
        for (a, &i) in group.iter().enumerate() {
            for &j in &group[a + 1..] {
                if labels[i] == labels[j] {
                    continue;
                }
                pairs += 1;
                if degenerate_mask[i] || degenerate_mask[j] {
                    continue; // counted as a loss
                }
                let same = corr[i][&labels[i]] + corr[j][&labels[j]];
                let crossed = corr[i][&labels[j]] + corr[j][&labels[i]];
                if same > crossed {
                    wins += 1.0;
                } else if same == crossed {
                    wins += 0.5;
                }
            }
        }
        if pairs > 0 {
            let accuracy = wins / pairs as f64;
            per_paradigm.insert(key, (accuracy, pairs));
            n_pairs_total += pairs;
            acc_sum += accuracy;
            groups_counted += 1;
        }
    }
    if groups_counted == 0 {
        return Err(Error::Data(
            "no comparable scan pairs (every group has a single word)".to_string(),
        ));
    }

    Ok(PairwiseResult {
        accuracy: acc_sum / groups_counted as f64,
        n_pairs: n_pairs_total,
        per_paradigm,
        degenerate_scans: degenerate,
    })
}
