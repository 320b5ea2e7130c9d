//! Per-word mean hidden representations, recomputed at epoch boundaries.

use crate::data::{Scan, Vocabulary};
use crate::error::{Error, Result};
use crate::losses::MeanTracker;
use crate::model::BrainDecoder;
use crate::nn::Mode;
use crate::tensor::Tensor;
use crate::train::TrackedLayer;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Recompute the per-word arithmetic mean of each tracked layer's
/// activations over all training word scans (all subjects and paradigms
/// pooled), in infer mode. `epoch` becomes the tracker's stamp.
pub fn update_mean_tracker(
    model: &BrainDecoder,
    scans: &[&Scan],
    vocabulary: &Vocabulary,
    tracked_layers: &[TrackedLayer],
    epoch: usize,
) -> Result<MeanTracker> {
    if tracked_layers.is_empty() {
        return Err(Error::Config(
            "mean tracker needs at least one tracked layer".to_string(),
        ));
    }
    let v = vocabulary.len();
    let mut counts = vec![0usize; v];
    let mut targets = Vec::with_capacity(scans.len());
    for scan in scans {
        let t = scan.word_index.ok_or_else(|| {
            Error::Data(format!(
                "unlabeled scan of subject {} in the mean-tracker pool",
                scan.subject_id
            ))
        })?;
        if t >= v {
            return Err(Error::Lookup(format!(
                "scan labeled with word index {t} outside vocabulary of {v}"
            )));
        }
        counts[t] += 1;
        targets.push(t);
    }
    if let Some(j) = counts.iter().position(|&c| c == 0) {
        return Err(Error::Tracker(format!(
            "word '{}' has no training scans to average",
            vocabulary.word(j)?
        )));
    }

    // Infer mode draws no randomness; the rng is never advanced.
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let pass = model.forward(scans, Mode::Infer, &mut rng)?;

    let mut layers: BTreeMap<String, Tensor> = BTreeMap::new();
    for layer in tracked_layers {
        let acts = match layer {
            TrackedLayer::RoiConcat => &pass.activations.roi_concat,
            TrackedLayer::Hidden1 => &pass.activations.hidden1,
            TrackedLayer::Latent => &pass.activations.latent,
        };
        let (_, d) = acts.dims2();
        let mut means = Tensor::zeros(&[v, d]);
        for (i, &t) in targets.iter().enumerate() {
            let src = acts.row(i);
            let dst = means.row_mut(t);
            for (m, a) in dst.iter_mut().zip(src) {
                *m += a;
            }
        }
        for (j, &count) in counts.iter().enumerate() {
            let inv = 1.0 / count as f64;
            for m in means.row_mut(j) {
                *m *= inv;
            }
        }
        layers.insert(layer.name().to_string(), means);
    }

    Ok(MeanTracker {
        layers,
        present: vec![true; v],
        stamp: epoch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic_dataset, Dataset, SynthConfig};
    use crate::model::{build_model, HeadFlags, ModelConfig};

    fn tiny_dataset() -> Dataset {
        let mut dataset = generate_synthetic_dataset(&SynthConfig {
            n_subjects: 2,
            n_words: 4,
            n_paradigms: 2,
            total_voxels: 100,
            n_rois: 4,
            concept_dim: 8,
            signal_to_noise: 4.0,
            subject_mixing: 0.2,
            seed: 301,
        })
        .unwrap();
        dataset.standardize().unwrap();
        dataset
    }

    fn tiny_model(dataset: &Dataset) -> BrainDecoder {
        let cfg = ModelConfig {
            hidden1_size: 12,
            latent_size: 4,
            embedding_dim: 8,
            vocab_size: 4,
            dropout_rate: 0.2,
            heads: HeadFlags {
                regression: true,
                classification: true,
            },
            autoencoder: true,
            ..ModelConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        build_model(&cfg, &dataset.atlas, &mut rng).unwrap()
    }

    #[test]
    fn one_scan_per_word_means_equal_activations() {
        let dataset = tiny_dataset();
        let model = tiny_model(&dataset);
        let scans: Vec<_> = dataset
            .word_scans_for("S01")
            .filter(|s| s.paradigm == Some(0))
            .collect();
        assert_eq!(scans.len(), 4);
        let tracker = update_mean_tracker(
            &model,
            &scans,
            &dataset.vocabulary,
            &[TrackedLayer::Hidden1, TrackedLayer::Latent],
            3,
        )
        .unwrap();
        assert_eq!(tracker.stamp, 3);
        assert!(tracker.present.iter().all(|&p| p));

        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pass = model.forward(&scans, Mode::Infer, &mut rng).unwrap();
        for (i, scan) in scans.iter().enumerate() {
            let t = scan.word_index.unwrap();
            assert_eq!(
                tracker.layers["latent"].row(t),
                pass.activations.latent.row(i),
                "latent mean of word {t} must equal its single scan's activation"
            );
            assert_eq!(
                tracker.layers["hidden1"].row(t),
                pass.activations.hidden1.row(i)
            );
        }
    }

    #[test]
    fn duplicated_scans_leave_means_unchanged() {
        let dataset = tiny_dataset();
        let model = tiny_model(&dataset);
        let base: Vec<_> = dataset
            .word_scans_for("S01")
            .filter(|s| s.paradigm == Some(0))
            .collect();
        let doubled: Vec<_> = base.iter().chain(base.iter()).copied().collect();
        let once = update_mean_tracker(
            &model,
            &base,
            &dataset.vocabulary,
            &[TrackedLayer::Latent],
            0,
        )
        .unwrap();
        let twice = update_mean_tracker(
            &model,
            &doubled,
            &dataset.vocabulary,
            &[TrackedLayer::Latent],
            0,
        )
        .unwrap();
        assert_eq!(once.layers["latent"], twice.layers["latent"]);
    }

    #[test]
    fn means_match_hand_averaged_per_scan_activations() {
        // Independent oracle: forward every scan on its own and average
        // the activation rows by hand.
        let dataset = tiny_dataset();
        let model = tiny_model(&dataset);
        let subjects = dataset.subjects();
        let scans: Vec<_> = subjects
            .iter()
            .flat_map(|s| dataset.word_scans_for(s).collect::<Vec<_>>())
            .collect();
        assert_eq!(scans.len(), 16); // 2 subjects x 4 words x 2 paradigms
        let tracker = update_mean_tracker(
            &model,
            &scans,
            &dataset.vocabulary,
            &[TrackedLayer::RoiConcat, TrackedLayer::Hidden1, TrackedLayer::Latent],
            1,
        )
        .unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let v = dataset.vocabulary.len();
        for (layer, dim) in [
            ("roi_concat", model.concat_width()),
            ("hidden1", 12),
            ("latent", 4),
        ] {
            let mut sums = vec![vec![0.0f64; dim]; v];
            let mut counts = vec![0usize; v];
            for scan in &scans {
                let pass = model.forward(&[scan], Mode::Infer, &mut rng).unwrap();
                let acts = match layer {
                    "roi_concat" => pass.activations.roi_concat,
                    "hidden1" => pass.activations.hidden1,
                    _ => pass.activations.latent,
                };
                let t = scan.word_index.unwrap();
                counts[t] += 1;
                for (sum, a) in sums[t].iter_mut().zip(acts.row(0)) {
                    *sum += a;
                }
            }
            for j in 0..v {
                assert_eq!(counts[j], 4);
                for (k, sum) in sums[j].iter().enumerate() {
                    let got = tracker.layers[layer].get2(j, k);
                    assert!(
                        (got - sum / 4.0).abs() < 1e-12,
                        "{layer} word {j} dim {k}: {got} vs {}",
                        sum / 4.0
                    );
                }
            }
        }
    }

    #[test]
    fn word_without_scans_is_a_tracker_error_naming_it() {
        let dataset = tiny_dataset();
        let model = tiny_model(&dataset);
        let missing_word = dataset.vocabulary.word(2).unwrap().to_string();
        let scans: Vec<_> = dataset
            .word_scans_for("S01")
            .filter(|s| s.word_index != Some(2))
            .collect();
        let err = update_mean_tracker(
            &model,
            &scans,
            &dataset.vocabulary,
            &[TrackedLayer::Latent],
            0,
        )
        .unwrap_err();
        match err {
            Error::Tracker(msg) => assert!(msg.contains(&missing_word), "{msg}"),
            other => panic!("expected tracker error, got {other:?}"),
        }
    }

    #[test]
    fn unlabeled_scan_is_a_data_error() {
        let dataset = tiny_dataset();
        let model = tiny_model(&dataset);
        let sentence: Vec<_> = dataset.sentence_scans_for("S01").take(2).collect();
        let err = update_mean_tracker(
            &model,
            &sentence,
            &dataset.vocabulary,
            &[TrackedLayer::Latent],
            0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }
}
