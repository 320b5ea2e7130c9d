//! The cumulative ablation ladder: base model first, then each extension
//! added in turn, every rung trained on all subjects except the
//! validation subject and evaluated on that subject.

use crate::data::{Dataset, Scan};
use crate::error::{Error, Result};
use crate::eval::{decode_regression_vectors, pairwise_accuracy, topk_accuracy};
use crate::losses::LossWeights;
use crate::model::{build_model, ModelConfig};
use crate::train::{pretrain, train_supervised, SupervisedData, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub variant: String,
    pub pairwise: f64,
    pub top1: f64,
    pub top5: f64,
}

#[derive(Debug, Clone, Default)]
pub struct AblationOutcome {
    pub rows: Vec<AblationRow>,
    pub warnings: Vec<String>,
}

/// One rung: what gets switched on relative to the full configuration.
/// `name` labels the report row; `flag` is the stable short form the CLI
/// accepts for its `--variant` flag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rung {
    pub name: &'static str,
    pub flag: &'static str,
    pub roi_layer: bool,
    pub autoencoder: bool,
    pub mean_reg: bool,
    pub pretraining: bool,
}

const LADDER: [Rung; 5] = [
    Rung { name: "base", flag: "base", roi_layer: false, autoencoder: false, mean_reg: false, pretraining: false },
    Rung { name: "+ROI", flag: "roi", roi_layer: true, autoencoder: false, mean_reg: false, pretraining: false },
    Rung { name: "+reconstruction", flag: "rec", roi_layer: true, autoencoder: true, mean_reg: false, pretraining: false },
    Rung { name: "+mean", flag: "mean", roi_layer: true, autoencoder: true, mean_reg: true, pretraining: false },
    Rung { name: "+pretraining", flag: "pretrain", roi_layer: true, autoencoder: true, mean_reg: true, pretraining: true },
];

/// The cumulative ladder, base model first, full model last.
pub fn ladder() -> &'static [Rung] {
    &LADDER
}

impl Rung {
    /// Derive this rung's configuration from the FULL model's: extensions
    /// the rung leaves off are switched off, everything else is kept.
    /// Rungs without pretraining zero `pretrain_epochs` (pretraining
    /// without the autoencoder is a config error, and a pretrained rung
    /// would not isolate the extension under test).
    pub fn configure(
        &self,
        model_cfg: &ModelConfig,
        train_cfg: &TrainConfig,
        weights: &LossWeights,
    ) -> (ModelConfig, TrainConfig, LossWeights) {
        let model = ModelConfig {
            use_roi_layer: self.roi_layer,
            autoencoder: self.autoencoder,
            ..model_cfg.clone()
        };
        let train = TrainConfig {
            pretrain_epochs: if self.pretraining {
                train_cfg.pretrain_epochs
            } else {
                0
            },
            ..train_cfg.clone()
        };
        let rung_weights = LossWeights {
            w_mean: if self.mean_reg { weights.w_mean } else { 0.0 },
            ..weights.clone()
        };
        (model, train, rung_weights)
    }
}

/// Run the five-rung ladder. `model_cfg`, `train_cfg` and `weights`
/// describe the FULL model; earlier rungs switch extensions off. Every
/// rung shares the same seed, training subjects (all but the validation
/// subject) and schedule, so rows differ only in the extension under
/// test. With no sentence scans available the pretraining rung is skipped
/// with a warning, since it would duplicate the previous rung.
pub fn run_ablation(
    dataset: &Dataset,
    validation_subject: &str,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    weights: &LossWeights,
) -> Result<AblationOutcome> {
    model_cfg.validate()?;
    train_cfg.validate()?;
    weights.validate()?;
    if !model_cfg.heads.regression || !model_cfg.heads.classification {
        return Err(Error::Config(
            "the ablation ladder reports pairwise and Top-K metrics; enable both heads".to_string(),
        ));
    }
    let subjects = dataset.subjects();
    if !subjects.iter().any(|s| s == validation_subject) {
        return Err(Error::Lookup(format!(
            "validation subject '{validation_subject}' not in the dataset"
        )));
    }
    let train_subjects: Vec<&String> =
        subjects.iter().filter(|s| *s != validation_subject).collect();
    if train_subjects.is_empty() {
        return Err(Error::Config(
            "the ablation needs at least one training subject besides the validation subject"
                .to_string(),
        ));
    }

    let embeddings = dataset.embeddings.matrix_for(&dataset.vocabulary)?;
    let train_scans: Vec<&Scan> = train_subjects
        .iter()
        .flat_map(|s| dataset.word_scans_for(s).collect::<Vec<_>>())
        .collect();
    let sentence_scans: Vec<&Scan> = train_subjects
        .iter()
        .flat_map(|s| dataset.sentence_scans_for(s).collect::<Vec<_>>())
        .collect();
    let validation_scans: Vec<&Scan> = dataset.word_scans_for(validation_subject).collect();

    let mut outcome = AblationOutcome::default();
    for rung in &LADDER {
        if rung.pretraining && train_cfg.pretrain_epochs > 0 && sentence_scans.is_empty() {
            outcome.warnings.push(
                "no sentence scans available: the pretraining rung was skipped".to_string(),
            );
            continue;
        }

        let (rung_model_cfg, rung_train_cfg, rung_weights) =
            rung.configure(model_cfg, train_cfg, weights);

        let mut rng = ChaCha8Rng::seed_from_u64(train_cfg.seed);
        let mut model = build_model(&rung_model_cfg, &dataset.atlas, &mut rng)?;
        let pretrain_log = pretrain(&mut model, &sentence_scans, &rung_train_cfg, &mut rng)?;
        outcome.warnings.extend(
            pretrain_log
                .warnings
                .iter()
                .map(|w| format!("{}: {w}", rung.name)),
        );
        let data = SupervisedData {
            train: train_scans.clone(),
            validation: validation_scans.clone(),
            embeddings: &embeddings,
            vocabulary: &dataset.vocabulary,
        };
        let trained = train_supervised(model, &data, &rung_train_cfg, &rung_weights, &mut rng)?;

        let decoded = decode_regression_vectors(&trained.model, &validation_scans)?;
        let labels: Vec<usize> = validation_scans
            .iter()
            .map(|s| s.word_index.expect("validated word scans carry labels"))
            .collect();
        let paradigms: Vec<Option<u8>> = validation_scans.iter().map(|s| s.paradigm).collect();
        let pairwise =
            pairwise_accuracy(&decoded, &labels, &paradigms, &embeddings, false)?;
        if !pairwise.degenerate_scans.is_empty() {
            outcome.warnings.push(format!(
                "{}: {} degenerate decoded vector(s) counted as losses",
                rung.name,
                pairwise.degenerate_scans.len()
            ));
        }
        let top1 = topk_accuracy(&trained.model, &validation_scans, 1)?;
        let k5 = 5.min(dataset.vocabulary.len());
        let top5 = topk_accuracy(&trained.model, &validation_scans, k5)?;

        outcome.rows.push(AblationRow {
            variant: rung.name.to_string(),
            pairwise: pairwise.accuracy,
            top1: top1.accuracy,
            top5: top5.accuracy,
        });
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic_dataset, SynthConfig};
    use crate::model::HeadFlags;
    use crate::nn::AdamConfig;
    use crate::train::MonitoredMetric;

    fn tiny_dataset(with_sentences: bool) -> Dataset {
        let mut dataset = generate_synthetic_dataset(&SynthConfig {
            n_subjects: 3,
            n_words: 5,
            n_paradigms: 2,
            total_voxels: 100,
            n_rois: 4,
            concept_dim: 8,
            signal_to_noise: 4.0,
            subject_mixing: 0.2,
            seed: 606,
        })
        .unwrap();
        if !with_sentences {
            dataset.sentence_scans.clear();
        }
        dataset.standardize().unwrap();
        dataset
    }

    fn tiny_model_cfg() -> ModelConfig {
        ModelConfig {
            hidden1_size: 12,
            latent_size: 4,
            embedding_dim: 8,
            vocab_size: 5,
            dropout_rate: 0.2,
            heads: HeadFlags {
                regression: true,
                classification: true,
            },
            autoencoder: true,
            ..ModelConfig::default()
        }
    }

    fn tiny_train_cfg() -> TrainConfig {
        TrainConfig {
            pretrain_epochs: 2,
            batch_size: 8,
            max_epochs: 3,
            saturation_patience: 1,
            early_stop_patience: 2,
            monitored_metric: MonitoredMetric::ValTotalLoss,
            seed: 77,
            optimizer: AdamConfig {
                learning_rate: 3e-3,
                ..AdamConfig::default()
            },
            ..TrainConfig::default()
        }
    }

    #[test]
    fn ladder_produces_five_rows_in_order() {
        let dataset = tiny_dataset(true);
        let outcome = run_ablation(
            &dataset,
            "S03",
            &tiny_model_cfg(),
            &tiny_train_cfg(),
            &LossWeights::default(),
        )
        .unwrap();
        let names: Vec<&str> = outcome.rows.iter().map(|r| r.variant.as_str()).collect();
        assert_eq!(
            names,
            ["base", "+ROI", "+reconstruction", "+mean", "+pretraining"]
        );
        for row in &outcome.rows {
            assert!(row.pairwise >= 0.0 && row.pairwise <= 1.0);
            assert!(row.top1 >= 0.0 && row.top1 <= 1.0);
            assert!(row.top5 >= row.top1 - 1e-12, "{}", row.variant);
        }
    }

    #[test]
    fn missing_sentence_scans_skip_the_pretraining_rung_with_a_warning() {
        let dataset = tiny_dataset(false);
        let outcome = run_ablation(
            &dataset,
            "S03",
            &tiny_model_cfg(),
            &tiny_train_cfg(),
            &LossWeights::default(),
        )
        .unwrap();
        assert_eq!(outcome.rows.len(), 4);
        assert!(outcome
            .warnings
            .iter()
            .any(|w| w.contains("pretraining rung was skipped")));
        assert!(outcome.rows.iter().all(|r| r.variant != "+pretraining"));
    }

    #[test]
    fn regression_only_model_is_rejected() {
        let dataset = tiny_dataset(true);
        let cfg = ModelConfig {
            heads: HeadFlags {
                regression: true,
                classification: false,
            },
            ..tiny_model_cfg()
        };
        assert!(matches!(
            run_ablation(
                &dataset,
                "S03",
                &cfg,
                &tiny_train_cfg(),
                &LossWeights::default()
            )
            .unwrap_err(),
            Error::Config(_)
        ));
    }

    #[test]
    fn unknown_validation_subject_is_a_lookup_error() {
        let dataset = tiny_dataset(true);
        assert!(matches!(
            run_ablation(
                &dataset,
                "S09",
                &tiny_model_cfg(),
                &tiny_train_cfg(),
                &LossWeights::default()
            )
            .unwrap_err(),
            Error::Lookup(_)
        ));
    }
}
