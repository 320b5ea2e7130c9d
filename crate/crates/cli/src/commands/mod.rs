//! One module per subcommand; each takes the fully merged [`RunConfig`],
//! writes its report plus a config echo into the output directory, and
//! prints a human summary to stdout.

pub mod ablate;
pub mod eval;
pub mod generate;
pub mod gradcheck;
pub mod synth;
pub mod train;

use crate::config::RunConfig;
use braindecode::data::{load_dataset, Dataset};
use braindecode::eval::ladder;
use braindecode::losses::LossWeights;
use braindecode::model::ModelConfig;
use braindecode::train::TrainConfig;
use braindecode::{Error, Result};
use std::path::PathBuf;

/// Load the dataset named by `paths.data` and standardize every scan
/// (zero mean, unit variance over the atlas-covered voxels), the same
/// preparation training and evaluation both expect.
fn load_standardized(cfg: &RunConfig) -> Result<Dataset> {
    let mut dataset = load_dataset(&cfg.paths.data)?;
    dataset.standardize()?;
    Ok(dataset)
}

/// Fill the data-derived model dimensions from the dataset.
fn resolve_model_cfg(cfg: &RunConfig, dataset: &Dataset) -> ModelConfig {
    ModelConfig {
        embedding_dim: dataset.embeddings.dimension,
        vocab_size: dataset.vocabulary.len(),
        ..cfg.model.clone()
    }
}

/// Apply `run.variant` (one ablation-ladder rung) to the full
/// configuration; no variant means the full configured model.
fn variant_configs(
    cfg: &RunConfig,
    model_cfg: ModelConfig,
) -> Result<(ModelConfig, TrainConfig, LossWeights)> {
    match &cfg.run.variant {
        None => Ok((model_cfg, cfg.train.clone(), cfg.weights.clone())),
        Some(flag) => {
            let rung = ladder()
                .iter()
                .find(|r| r.flag == flag.as_str())
                .ok_or_else(|| Error::Config(format!("unknown variant '{flag}'")))?;
            Ok(rung.configure(&model_cfg, &cfg.train, &cfg.weights))
        }
    }
}

/// Create the output directory and hand back its path.
fn prepare_out(cfg: &RunConfig) -> Result<PathBuf> {
    std::fs::create_dir_all(&cfg.paths.out)?;
    Ok(cfg.paths.out.clone())
}

fn require_validation_subject(cfg: &RunConfig) -> Result<&str> {
    cfg.run
        .validation_subject
        .as_deref()
        .ok_or_else(|| {
            Error::Config(
                "a validation subject is required (--validation-subject or run.validation_subject)"
                    .to_string(),
            )
        })
}
