//! Flat `key = value` run configuration with dotted sections.
//!
//! One file carries every knob of the pipeline: the synthetic-data
//! generator, the model, the training schedule, loss weights, generation,
//! paths and per-run settings. Command-line flags override file values,
//! and the fully resolved configuration is echoed into every output
//! directory as `config_echo`; feeding the echo back through `--config`
//! reproduces the run bit-for-bit (single-threaded).
//!
//! A bare `seed = N` line sets the master seed: `synth.seed`, `train.seed`
//! and `gen.seed` default to it unless set explicitly in the same file.
//! The `--seed` flag sets all three unconditionally.
//!
//! The model's `embedding_dim` and `vocab_size` are never configuration
//! keys — they are always derived from the dataset the command loads.

use braindecode::data::SynthConfig;
use braindecode::eval::ladder;
use braindecode::gen::GenConfig;
use braindecode::losses::LossWeights;
use braindecode::model::{HeadFlags, ModelConfig};
use braindecode::nn::AdamConfig;
use braindecode::train::{MonitoredMetric, TrackedLayer, TrainConfig};
use braindecode::{Error, Result};
use std::path::{Path, PathBuf};

/// Generation settings beyond the core [`GenConfig`]: the shipped n-gram
/// language model, the anchor set and how many corpus contexts to use.
#[derive(Debug, Clone)]
pub struct GenSettings {
    pub cfg: GenConfig,
    /// n-gram order of the language model trained on the corpus.
    pub order: usize,
    /// Keep only the most frequent corpus tokens (`None` = keep all).
    pub vocab_cap: Option<usize>,
    /// Words the anchored condition steers toward; metrics count each.
    pub anchors: Vec<String>,
    pub anchor_strength: f64,
    /// Bias by cosine distance instead of similarity (repels from anchors).
    pub use_distance: bool,
    /// Number of two-sentence corpus contexts to generate from.
    pub context_count: usize,
}

impl Default for GenSettings {
    fn default() -> Self {
        GenSettings {
            cfg: GenConfig::default(),
            order: 2,
            vocab_cap: None,
            anchors: Vec::new(),
            anchor_strength: 7.0,
            use_distance: false,
            context_count: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PathSettings {
    /// Dataset directory (atlas.txt, vocab.txt, embeddings.txt, scans.bin,
    /// manifest.tsv).
    pub data: PathBuf,
    /// Output directory; every command writes its report and the config
    /// echo here.
    pub out: PathBuf,
    pub corpus: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
}

impl Default for PathSettings {
    fn default() -> Self {
        PathSettings {
            data: PathBuf::from("dataset"),
            out: PathBuf::from("out"),
            corpus: None,
            checkpoint: None,
        }
    }
}

/// Per-run settings that name things inside the dataset.
#[derive(Debug, Clone)]
pub struct RunSettings {
    /// Test subject: `train` holds it out for a single rotation, `eval`
    /// scores its scans.
    pub subject: Option<String>,
    /// Early-stopping subject; never rotates out as a test subject.
    pub validation_subject: Option<String>,
    /// Ablation-ladder variant to train (`base`, `roi`, `rec`, `mean`,
    /// `pretrain`); `None` trains the full configured model.
    pub variant: Option<String>,
    /// Worker threads for full leave-one-out training.
    pub parallel_rotations: usize,
    /// Top-K cutoffs the `eval` command reports.
    pub k: Vec<usize>,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            subject: None,
            validation_subject: None,
            variant: None,
            parallel_rotations: 1,
            k: vec![1, 5],
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub synth: SynthConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub weights: LossWeights,
    pub gen: GenSettings,
    pub paths: PathSettings,
    pub run: RunSettings,
}

impl Default for RunConfig {
    /// Desk-scale defaults sized for the default synthetic dataset
    /// (6 subjects x 20 words x 3 paradigms over 2,000 voxels).
    fn default() -> Self {
        RunConfig {
            synth: SynthConfig::default(),
            model: ModelConfig {
                roi_divisor: 20,
                hidden1_size: 128,
                latent_size: 32,
                dropout_rate: 0.4,
                leaky_alpha: 0.3,
                // Derived from the dataset before use; never config keys.
                embedding_dim: 0,
                vocab_size: 0,
                heads: HeadFlags {
                    regression: true,
                    classification: true,
                },
                autoencoder: true,
                use_roi_layer: true,
            },
            train: TrainConfig {
                pretrain_epochs: 10,
                batch_size: 32,
                max_epochs: 150,
                saturation_patience: 5,
                early_stop_patience: 10,
                monitored_metric: MonitoredMetric::ValTotalLoss,
                tracked_layers: vec![TrackedLayer::Hidden1, TrackedLayer::Latent],
                seed: 42,
                optimizer: AdamConfig::default(),
            },
            weights: LossWeights::default(),
            gen: GenSettings::default(),
            paths: PathSettings::default(),
            run: RunSettings::default(),
        }
    }
}

impl RunConfig {
    /// Set every stream seed at once (the `--seed` flag).
    pub fn set_master_seed(&mut self, seed: u64) {
        self.synth.seed = seed;
        self.train.seed = seed;
        self.gen.cfg.seed = seed;
    }
}

fn bad(origin: &str, line: usize, key: &str, value: &str, want: &str) -> Error {
    Error::Config(format!(
        "{origin} line {line}: key '{key}' wants {want}, got '{value}'"
    ))
}

fn parse_usize(origin: &str, line: usize, key: &str, value: &str) -> Result<usize> {
    value
        .parse()
        .map_err(|_| bad(origin, line, key, value, "an unsigned integer"))
}

fn parse_u64(origin: &str, line: usize, key: &str, value: &str) -> Result<u64> {
    value
        .parse()
        .map_err(|_| bad(origin, line, key, value, "an unsigned integer"))
}

fn parse_f64(origin: &str, line: usize, key: &str, value: &str) -> Result<f64> {
    value
        .parse()
        .map_err(|_| bad(origin, line, key, value, "a number"))
}

fn parse_bool(origin: &str, line: usize, key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(bad(origin, line, key, value, "true or false")),
    }
}

fn parse_usize_list(origin: &str, line: usize, key: &str, value: &str) -> Result<Vec<usize>> {
    let items: Vec<usize> = value
        .split(',')
        .map(|t| t.trim().parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad(origin, line, key, value, "comma-separated unsigned integers"))?;
    if items.is_empty() {
        return Err(bad(origin, line, key, value, "at least one integer"));
    }
    Ok(items)
}

fn parse_word_list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

/// Validate a `--variant`/`run.variant` value against the ladder.
pub fn parse_variant(value: &str) -> Result<String> {
    if ladder().iter().any(|r| r.flag == value) {
        Ok(value.to_string())
    } else {
        let options: Vec<&str> = ladder().iter().map(|r| r.flag).collect();
        Err(Error::Config(format!(
            "unknown variant '{value}' (expected one of: {})",
            options.join(", ")
        )))
    }
}

/// Parse a configuration file's text. `origin` names the source in errors.
pub fn parse_run_config(text: &str, origin: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut master: Option<u64> = None;
    let (mut synth_seed_set, mut train_seed_set, mut gen_seed_set) = (false, false, false);

    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let lineno = idx + 1;
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "{origin} line {lineno}: expected 'key = value', got '{raw}'"
            ))
        })?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "seed" => master = Some(parse_u64(origin, lineno, key, value)?),

            "synth.n_subjects" => cfg.synth.n_subjects = parse_usize(origin, lineno, key, value)?,
            "synth.n_words" => cfg.synth.n_words = parse_usize(origin, lineno, key, value)?,
            "synth.n_paradigms" => cfg.synth.n_paradigms = parse_usize(origin, lineno, key, value)?,
            "synth.total_voxels" => {
                cfg.synth.total_voxels = parse_usize(origin, lineno, key, value)?
            }
            "synth.n_rois" => cfg.synth.n_rois = parse_usize(origin, lineno, key, value)?,
            "synth.concept_dim" => cfg.synth.concept_dim = parse_usize(origin, lineno, key, value)?,
            "synth.signal_to_noise" => {
                cfg.synth.signal_to_noise = parse_f64(origin, lineno, key, value)?
            }
            "synth.subject_mixing" => {
                cfg.synth.subject_mixing = parse_f64(origin, lineno, key, value)?
            }
            "synth.seed" => {
                cfg.synth.seed = parse_u64(origin, lineno, key, value)?;
                synth_seed_set = true;
            }

            "model.roi_divisor" => cfg.model.roi_divisor = parse_usize(origin, lineno, key, value)?,
            "model.hidden1_size" => {
                cfg.model.hidden1_size = parse_usize(origin, lineno, key, value)?
            }
            "model.latent_size" => cfg.model.latent_size = parse_usize(origin, lineno, key, value)?,
            "model.dropout_rate" => cfg.model.dropout_rate = parse_f64(origin, lineno, key, value)?,
            "model.leaky_alpha" => cfg.model.leaky_alpha = parse_f64(origin, lineno, key, value)?,
            "model.regression_head" => {
                cfg.model.heads.regression = parse_bool(origin, lineno, key, value)?
            }
            "model.classification_head" => {
                cfg.model.heads.classification = parse_bool(origin, lineno, key, value)?
            }
            "model.autoencoder" => cfg.model.autoencoder = parse_bool(origin, lineno, key, value)?,
            "model.use_roi_layer" => {
                cfg.model.use_roi_layer = parse_bool(origin, lineno, key, value)?
            }

            "train.pretrain_epochs" => {
                cfg.train.pretrain_epochs = parse_usize(origin, lineno, key, value)?
            }
            "train.batch_size" => cfg.train.batch_size = parse_usize(origin, lineno, key, value)?,
            "train.max_epochs" => cfg.train.max_epochs = parse_usize(origin, lineno, key, value)?,
            "train.saturation_patience" => {
                cfg.train.saturation_patience = parse_usize(origin, lineno, key, value)?
            }
            "train.early_stop_patience" => {
                cfg.train.early_stop_patience = parse_usize(origin, lineno, key, value)?
            }
            "train.monitored_metric" => {
                cfg.train.monitored_metric = MonitoredMetric::parse(value)?
            }
            "train.tracked_layers" => {
                cfg.train.tracked_layers = value
                    .split(',')
                    .map(|t| TrackedLayer::parse(t.trim()))
                    .collect::<Result<_>>()?
            }
            "train.seed" => {
                cfg.train.seed = parse_u64(origin, lineno, key, value)?;
                train_seed_set = true;
            }
            "train.optimizer.learning_rate" => {
                cfg.train.optimizer.learning_rate = parse_f64(origin, lineno, key, value)?
            }
            "train.optimizer.beta1" => {
                cfg.train.optimizer.beta1 = parse_f64(origin, lineno, key, value)?
            }
            "train.optimizer.beta2" => {
                cfg.train.optimizer.beta2 = parse_f64(origin, lineno, key, value)?
            }
            "train.optimizer.epsilon" => {
                cfg.train.optimizer.epsilon = parse_f64(origin, lineno, key, value)?
            }

            "loss.w_reg" => cfg.weights.w_reg = parse_f64(origin, lineno, key, value)?,
            "loss.w_class" => cfg.weights.w_class = parse_f64(origin, lineno, key, value)?,
            "loss.w_rec" => cfg.weights.w_rec = parse_f64(origin, lineno, key, value)?,
            "loss.w_mean" => cfg.weights.w_mean = parse_f64(origin, lineno, key, value)?,
            "loss.neg_term_scale" => {
                cfg.weights.neg_term_scale = parse_f64(origin, lineno, key, value)?
            }

            "gen.tokens_to_generate" => {
                cfg.gen.cfg.tokens_to_generate = parse_usize(origin, lineno, key, value)?
            }
            "gen.topk" => cfg.gen.cfg.topk = parse_usize(origin, lineno, key, value)?,
            "gen.runs_per_scan" => {
                cfg.gen.cfg.runs_per_scan = parse_usize(origin, lineno, key, value)?
            }
            "gen.seed" => {
                cfg.gen.cfg.seed = parse_u64(origin, lineno, key, value)?;
                gen_seed_set = true;
            }
            "gen.order" => cfg.gen.order = parse_usize(origin, lineno, key, value)?,
            "gen.vocab_cap" => {
                cfg.gen.vocab_cap = if value == "none" {
                    None
                } else {
                    Some(parse_usize(origin, lineno, key, value)?)
                }
            }
            "gen.anchors" => cfg.gen.anchors = parse_word_list(value),
            "gen.anchor_strength" => {
                cfg.gen.anchor_strength = parse_f64(origin, lineno, key, value)?
            }
            "gen.use_distance" => cfg.gen.use_distance = parse_bool(origin, lineno, key, value)?,
            "gen.context_count" => {
                cfg.gen.context_count = parse_usize(origin, lineno, key, value)?
            }

            "paths.data" => cfg.paths.data = PathBuf::from(value),
            "paths.out" => cfg.paths.out = PathBuf::from(value),
            "paths.corpus" => cfg.paths.corpus = Some(PathBuf::from(value)),
            "paths.checkpoint" => cfg.paths.checkpoint = Some(PathBuf::from(value)),

            "run.subject" => cfg.run.subject = Some(value.to_string()),
            "run.validation_subject" => cfg.run.validation_subject = Some(value.to_string()),
            "run.variant" => cfg.run.variant = Some(parse_variant(value)?),
            "run.parallel_rotations" => {
                cfg.run.parallel_rotations = parse_usize(origin, lineno, key, value)?
            }
            "run.k" => cfg.run.k = parse_usize_list(origin, lineno, key, value)?,

            _ => {
                return Err(Error::Config(format!(
                    "{origin} line {lineno}: unknown key '{key}'"
                )))
            }
        }
    }

    if let Some(m) = master {
        if !synth_seed_set {
            cfg.synth.seed = m;
        }
        if !train_seed_set {
            cfg.train.seed = m;
        }
        if !gen_seed_set {
            cfg.gen.cfg.seed = m;
        }
    }
    Ok(cfg)
}

pub fn load_run_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_run_config(&text, &path.display().to_string())
}

/// Serialize the effective configuration; the master seed is already
/// resolved into the three stream seeds, so the echo stands alone.
pub fn echo_lines(cfg: &RunConfig) -> Vec<String> {
    let mut out = vec!["# effective configuration; rerun with --config <this file>".to_string()];
    let mut kv = |k: &str, v: String| out.push(format!("{k} = {v}"));

    kv("synth.n_subjects", cfg.synth.n_subjects.to_string());
    kv("synth.n_words", cfg.synth.n_words.to_string());
    kv("synth.n_paradigms", cfg.synth.n_paradigms.to_string());
    kv("synth.total_voxels", cfg.synth.total_voxels.to_string());
    kv("synth.n_rois", cfg.synth.n_rois.to_string());
    kv("synth.concept_dim", cfg.synth.concept_dim.to_string());
    kv("synth.signal_to_noise", cfg.synth.signal_to_noise.to_string());
    kv("synth.subject_mixing", cfg.synth.subject_mixing.to_string());
    kv("synth.seed", cfg.synth.seed.to_string());

    kv("model.roi_divisor", cfg.model.roi_divisor.to_string());
    kv("model.hidden1_size", cfg.model.hidden1_size.to_string());
    kv("model.latent_size", cfg.model.latent_size.to_string());
    kv("model.dropout_rate", cfg.model.dropout_rate.to_string());
    kv("model.leaky_alpha", cfg.model.leaky_alpha.to_string());
    kv("model.regression_head", cfg.model.heads.regression.to_string());
    kv(
        "model.classification_head",
        cfg.model.heads.classification.to_string(),
    );
    kv("model.autoencoder", cfg.model.autoencoder.to_string());
    kv("model.use_roi_layer", cfg.model.use_roi_layer.to_string());

    kv("train.pretrain_epochs", cfg.train.pretrain_epochs.to_string());
    kv("train.batch_size", cfg.train.batch_size.to_string());
    kv("train.max_epochs", cfg.train.max_epochs.to_string());
    kv(
        "train.saturation_patience",
        cfg.train.saturation_patience.to_string(),
    );
    kv(
        "train.early_stop_patience",
        cfg.train.early_stop_patience.to_string(),
    );
    kv(
        "train.monitored_metric",
        cfg.train.monitored_metric.name().to_string(),
    );
    kv(
        "train.tracked_layers",
        cfg.train
            .tracked_layers
            .iter()
            .map(|l| l.name())
            .collect::<Vec<_>>()
            .join(","),
    );
    kv("train.seed", cfg.train.seed.to_string());
    kv(
        "train.optimizer.learning_rate",
        cfg.train.optimizer.learning_rate.to_string(),
    );
    kv("train.optimizer.beta1", cfg.train.optimizer.beta1.to_string());
    kv("train.optimizer.beta2", cfg.train.optimizer.beta2.to_string());
    kv(
        "train.optimizer.epsilon",
        cfg.train.optimizer.epsilon.to_string(),
    );

    kv("loss.w_reg", cfg.weights.w_reg.to_string());
    kv("loss.w_class", cfg.weights.w_class.to_string());
    kv("loss.w_rec", cfg.weights.w_rec.to_string());
    kv("loss.w_mean", cfg.weights.w_mean.to_string());
    kv("loss.neg_term_scale", cfg.weights.neg_term_scale.to_string());

    kv(
        "gen.tokens_to_generate",
        cfg.gen.cfg.tokens_to_generate.to_string(),
    );
    kv("gen.topk", cfg.gen.cfg.topk.to_string());
    kv("gen.runs_per_scan", cfg.gen.cfg.runs_per_scan.to_string());
    kv("gen.seed", cfg.gen.cfg.seed.to_string());
    kv("gen.order", cfg.gen.order.to_string());
    kv(
        "gen.vocab_cap",
        cfg.gen
            .vocab_cap
            .map_or_else(|| "none".to_string(), |c| c.to_string()),
    );
    if !cfg.gen.anchors.is_empty() {
        kv("gen.anchors", cfg.gen.anchors.join(","));
    }
    kv("gen.anchor_strength", cfg.gen.anchor_strength.to_string());
    kv("gen.use_distance", cfg.gen.use_distance.to_string());
    kv("gen.context_count", cfg.gen.context_count.to_string());

    kv("paths.data", cfg.paths.data.display().to_string());
    kv("paths.out", cfg.paths.out.display().to_string());
    if let Some(p) = &cfg.paths.corpus {
        kv("paths.corpus", p.display().to_string());
    }
    if let Some(p) = &cfg.paths.checkpoint {
        kv("paths.checkpoint", p.display().to_string());
    }

    if let Some(s) = &cfg.run.subject {
        kv("run.subject", s.clone());
    }
    if let Some(s) = &cfg.run.validation_subject {
        kv("run.validation_subject", s.clone());
    }
    if let Some(v) = &cfg.run.variant {
        kv("run.variant", v.clone());
    }
    kv(
        "run.parallel_rotations",
        cfg.run.parallel_rotations.to_string(),
    );
    kv(
        "run.k",
        cfg.run
            .k
            .iter()
            .map(|k| k.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );

    out
}

/// Write the echo into `out_dir/config_echo`.
pub fn write_echo(out_dir: &Path, cfg: &RunConfig) -> Result<()> {
    braindecode::eval::write_lines(&out_dir.join("config_echo"), &echo_lines(cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_round_trips_every_field() {
        let mut cfg = RunConfig::default();
        cfg.synth.n_subjects = 4;
        cfg.model.hidden1_size = 77;
        cfg.train.optimizer.learning_rate = 3.25e-3;
        cfg.weights.w_mean = 0.5;
        cfg.gen.anchors = vec!["dog".to_string(), "cat".to_string()];
        cfg.gen.vocab_cap = Some(500);
        cfg.paths.corpus = Some(PathBuf::from("corpus.txt"));
        cfg.run.subject = Some("S03".to_string());
        cfg.run.validation_subject = Some("S01".to_string());
        cfg.run.variant = Some("rec".to_string());
        cfg.run.k = vec![1, 2, 5];

        let text = echo_lines(&cfg).join("\n");
        let back = parse_run_config(&text, "echo").unwrap();
        assert_eq!(echo_lines(&back), echo_lines(&cfg));
    }

    #[test]
    fn master_seed_fills_unset_stream_seeds_only() {
        let cfg = parse_run_config("seed = 9\ntrain.seed = 5\n", "t").unwrap();
        assert_eq!(cfg.synth.seed, 9);
        assert_eq!(cfg.train.seed, 5);
        assert_eq!(cfg.gen.cfg.seed, 9);
    }

    #[test]
    fn master_seed_applies_regardless_of_line_order() {
        let cfg = parse_run_config("train.seed = 5\nseed = 9\n", "t").unwrap();
        assert_eq!(cfg.train.seed, 5);
        assert_eq!(cfg.synth.seed, 9);
    }

    #[test]
    fn unknown_keys_and_malformed_lines_are_config_errors() {
        for text in ["mystery.key = 1", "no equals sign here", "train.batch_size = soon"] {
            let err = parse_run_config(text, "t").unwrap_err();
            assert!(matches!(err, Error::Config(_)), "{text}: {err}");
            assert!(err.to_string().contains("line 1"), "{err}");
        }
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let cfg = parse_run_config("# a comment\n\n  \ntrain.batch_size = 7\n", "t").unwrap();
        assert_eq!(cfg.train.batch_size, 7);
    }

    #[test]
    fn variant_values_are_validated() {
        assert!(parse_run_config("run.variant = rec", "t").is_ok());
        let err = parse_run_config("run.variant = everything", "t").unwrap_err();
        assert!(err.to_string().contains("base, roi, rec, mean, pretrain"));
    }
}
