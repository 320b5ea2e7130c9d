//! Evaluation: pairwise two-alternative decoding accuracy, Top-K
//! classification accuracy, the cumulative ablation ladder, and report
//! files.

mod ablation;
mod pairwise;
mod report;
mod topk;

pub use ablation::{ladder, run_ablation, AblationOutcome, AblationRow, Rung};
pub use pairwise::{pairwise_accuracy, PairwiseResult};
pub use report::{
    ablation_table, metrics_lines, parse_table, render_table, write_lines,
};
pub use topk::{topk_accuracy, TopKResult};

use crate::data::Scan;
use crate::error::{Error, Result};
use crate::model::BrainDecoder;
use crate::nn::Mode;
use crate::tensor::Tensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Decode every scan to its predicted embedding vector (infer mode,
/// regression head), one row per scan.
pub fn decode_regression_vectors(model: &BrainDecoder, scans: &[&Scan]) -> Result<Tensor> {
    if !model.config.heads.regression {
        return Err(Error::Config(
            "decoding embedding vectors needs the regression head".to_string(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let pass = model.forward(scans, Mode::Infer, &mut rng)?;
    pass.activations.regression_out.ok_or_else(|| {
        Error::Contract("regression head produced no output".to_string())
    })
}

/// Group scan indices by paradigm label (or into one pooled group).
/// Within-paradigm grouping is the default: comparing vectors decoded
/// under different stimulus presentations would mix presentation effects
/// into the accuracy.
pub(crate) fn paradigm_groups(
    paradigms: &[Option<u8>],
    pool: bool,
) -> Vec<(String, Vec<usize>)> {
    if pool {
        return vec![("all".to_string(), (0..paradigms.len()).collect())];
    }
    let mut groups: std::collections::BTreeMap<String, Vec<usize>> =
        std::collections::BTreeMap::new();
    for (i, p) in paradigms.iter().enumerate() {
        let key = match p {
            Some(p) => p.to_string(),
            None => "-".to_string(),
        };
        groups.entry(key).or_default().push(i);
    }
    groups.into_iter().collect()
}
