//! Pretraining and the two-phase supervised loop.

use crate::data::{Scan, Vocabulary};
use crate::error::{Error, Result};
use crate::losses::{
    loss_class, loss_mean, loss_rec, loss_reg, total_loss, LossWeights, MeanTracker, TermOutputs,
};
use crate::model::{ActivationGrads, BrainDecoder};
use crate::nn::Mode;
use crate::nn::Adam;
use crate::tensor::Tensor;
use crate::train::{
    update_mean_tracker, MonitoredMetric, Phase, TrackedLayer, TrainConfig, TrainLog,
    TrainLogEntry,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::time::Instant;

/// Scans and lookup tables for one training rotation. `train` and
/// `validation` hold labeled word scans, already padded and standardized;
/// `embeddings` is the `[v x d]` matrix in vocabulary order.
#[derive(Debug)]
pub struct SupervisedData<'a> {
    pub train: Vec<&'a Scan>,
    pub validation: Vec<&'a Scan>,
    pub embeddings: &'a Tensor,
    pub vocabulary: &'a Vocabulary,
}

impl SupervisedData<'_> {
    fn validate(&self, model: &BrainDecoder, cfg: &TrainConfig) -> Result<()> {
        if self.train.is_empty() {
            return Err(Error::Config("training set is empty".to_string()));
        }
        if self.validation.is_empty() {
            return Err(Error::Config(
                "validation set is empty; early stopping needs validation scans".to_string(),
            ));
        }
        let v = self.vocabulary.len();
        if self.embeddings.dims2().0 != v {
            return Err(Error::Dimension {
                op: "supervised_data",
                left: format!("vocabulary [{v}]"),
                right: format!("embeddings {}", self.embeddings.shape_string()),
            });
        }
        for scan in self.train.iter().chain(self.validation.iter()) {
            match scan.word_index {
                Some(t) if t < v => {}
                Some(t) => {
                    return Err(Error::Lookup(format!(
                        "scan labeled with word index {t} outside vocabulary of {v}"
                    )))
                }
                None => {
                    return Err(Error::Data(format!(
                        "unlabeled scan of subject {} in the supervised pool",
                        scan.subject_id
                    )))
                }
            }
        }
        if cfg.monitored_metric == MonitoredMetric::ValTop1 && !model.config.heads.classification
        {
            return Err(Error::Config(
                "monitoring val_top1 needs the classification head".to_string(),
            ));
        }
        Ok(())
    }
}

/// Result of one supervised run: the checkpoint with the best monitored
/// validation metric, the epoch log, and where the phase switch landed.
/// `best_epoch` 0 means no epoch beat the initial model.
#[derive(Debug)]
pub struct TrainOutcome {
    pub model: BrainDecoder,
    pub log: TrainLog,
    pub best_epoch: usize,
    pub best_metric: f64,
    /// First epoch trained with mean regularization active; None if
    /// saturation was never reached.
    pub phase_switch_epoch: Option<usize>,
}

/// Shuffle `0..n` and cut it into batches. A trailing singleton is folded
/// into the previous batch because train-mode batch statistics need at
/// least two samples.
fn shuffled_batches(n: usize, batch_size: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<usize>>> {
    if n < 2 {
        return Err(Error::Config(format!(
            "need at least 2 scans to form a training batch, got {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut batches: Vec<Vec<usize>> = order.chunks(batch_size).map(<[usize]>::to_vec).collect();
    if batches.len() >= 2 && batches.last().is_some_and(|b| b.len() == 1) {
        let single = batches.pop().unwrap();
        batches.last_mut().unwrap().extend(single);
    }
    Ok(batches)
}

/// Per-epoch sums of the unweighted term values and the weighted total.
struct EpochStats {
    terms: BTreeMap<String, f64>,
    total: f64,
}

/// One pass over `scans` in shuffled batches: forward, loss, backward,
/// optimizer step, batchnorm running-stat update. Terms are computed only
/// when weighted and supported by the model; the tracker gates the mean
/// term.
fn run_epoch(
    model: &mut BrainDecoder,
    optimizer: &mut Adam,
    scans: &[&Scan],
    embeddings: Option<&Tensor>,
    weights: &LossWeights,
    tracker: Option<&MeanTracker>,
    tracked_layers: &[TrackedLayer],
    batch_size: usize,
    rng: &mut ChaCha8Rng,
) -> Result<EpochStats> {
    let use_reg = weights.w_reg > 0.0 && model.config.heads.regression;
    let use_class = weights.w_class > 0.0 && model.config.heads.classification;
    let use_rec = weights.w_rec > 0.0 && model.config.autoencoder;
    let use_mean = weights.w_mean > 0.0 && tracker.is_some();
    let need_targets = use_reg || use_class || use_mean;

    let mut stats = EpochStats {
        terms: BTreeMap::new(),
        total: 0.0,
    };
    for key in ["reg", "class", "rec", "mean"] {
        stats.terms.insert(key.to_string(), 0.0);
    }

    for batch in shuffled_batches(scans.len(), batch_size, rng)? {
        let batch_scans: Vec<&Scan> = batch.iter().map(|&i| scans[i]).collect();
        let targets: Vec<usize> = if need_targets {
            batch_scans
                .iter()
                .map(|s| {
                    s.word_index.ok_or_else(|| {
                        Error::Data(format!(
                            "unlabeled scan of subject {} in a supervised batch",
                            s.subject_id
                        ))
                    })
                })
                .collect::<Result<_>>()?
        } else {
            Vec::new()
        };

        let gathered = model.gather(&batch_scans)?;
        let pass = model.forward_gathered(&gathered, Mode::Train, rng)?;
        let acts = &pass.activations;

        let mut terms = TermOutputs::default();
        if use_reg {
            let emb = embeddings.ok_or_else(|| {
                Error::Contract("regression term active without an embedding matrix".to_string())
            })?;
            let pred = acts.regression_out.as_ref().ok_or_else(|| {
                Error::Contract("regression head produced no output".to_string())
            })?;
            terms.reg = Some(loss_reg(pred, &targets, emb, weights.neg_term_scale)?);
        }
        if use_class {
            let probs = acts.class_probs.as_ref().ok_or_else(|| {
                Error::Contract("classification head produced no output".to_string())
            })?;
            terms.class = Some(loss_class(probs, &targets)?);
        }
        if use_rec {
            let rec = acts.reconstruction.as_ref().ok_or_else(|| {
                Error::Contract("autoencoder produced no reconstruction".to_string())
            })?;
            terms.rec = Some(loss_rec(rec, &gathered)?);
        }
        if use_mean {
            let mut hidden = BTreeMap::new();
            for layer in tracked_layers {
                let acts_l = match layer {
                    TrackedLayer::RoiConcat => &acts.roi_concat,
                    TrackedLayer::Hidden1 => &acts.hidden1,
                    TrackedLayer::Latent => &acts.latent,
                };
                hidden.insert(layer.name().to_string(), acts_l.clone());
            }
            terms.mean = Some(loss_mean(
                &hidden,
                &targets,
                tracker.unwrap(),
                weights.neg_term_scale,
            )?);
        }

        let (report, wgrads) = total_loss(terms, weights)?;
        let mut hidden_grads = wgrads.hidden;
        let act_grads = ActivationGrads {
            regression_out: wgrads.regression_out,
            class_probs: wgrads.class_probs,
            reconstruction: wgrads.reconstruction,
            roi_concat: hidden_grads.remove("roi_concat"),
            hidden1: hidden_grads.remove("hidden1"),
            latent: hidden_grads.remove("latent"),
        };
        if let Some(stray) = hidden_grads.into_keys().next() {
            return Err(Error::Contract(format!(
                "mean gradient for unknown layer '{stray}'"
            )));
        }

        let cache = pass.cache.as_ref().ok_or_else(|| {
            Error::Contract("train-mode forward produced no cache".to_string())
        })?;
        let grads = model.backward(cache, &act_grads)?;
        optimizer.step(model, &grads)?;
        model.apply_running_updates(&pass.running_updates);

        for (key, value) in &report.terms {
            *stats.terms.get_mut(key).unwrap() += value;
        }
        stats.total += report.total;
    }
    Ok(stats)
}

impl EpochStats {
    fn per_scan(mut self, n: usize) -> (BTreeMap<String, f64>, f64) {
        let inv = 1.0 / n as f64;
        for value in self.terms.values_mut() {
            *value *= inv;
        }
        (self.terms, self.total * inv)
    }
}

/// The monitored validation value: mean per-scan total loss over the
/// active non-mean terms (lower is better), or Top-1 accuracy (higher is
/// better). Runs in infer mode and draws no randomness.
pub fn validation_metric(
    model: &BrainDecoder,
    scans: &[&Scan],
    embeddings: &Tensor,
    weights: &LossWeights,
    metric: MonitoredMetric,
) -> Result<f64> {
    if scans.is_empty() {
        return Err(Error::Config("validation set is empty".to_string()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let gathered = model.gather(scans)?;
    let pass = model.forward_gathered(&gathered, Mode::Infer, &mut rng)?;
    let acts = &pass.activations;
    let targets: Vec<usize> = scans
        .iter()
        .map(|s| {
            s.word_index
                .ok_or_else(|| Error::Data("unlabeled validation scan".to_string()))
        })
        .collect::<Result<_>>()?;

    match metric {
        MonitoredMetric::ValTop1 => {
            let probs = acts.class_probs.as_ref().ok_or_else(|| {
                Error::Config("val_top1 needs the classification head".to_string())
            })?;
            let mut hits = 0usize;
            for (i, &t) in targets.iter().enumerate() {
                let row = probs.row(i);
                let best = row
                    .iter()
                    .enumerate()
                    .fold((0usize, f64::NEG_INFINITY), |acc, (j, &p)| {
                        if p > acc.1 {
                            (j, p)
                        } else {
                            acc
                        }
                    });
                if best.0 == t {
                    hits += 1;
                }
            }
            Ok(hits as f64 / scans.len() as f64)
        }
        MonitoredMetric::ValTotalLoss => {
            let mut terms = TermOutputs::default();
            if weights.w_reg > 0.0 && model.config.heads.regression {
                let pred = acts.regression_out.as_ref().ok_or_else(|| {
                    Error::Contract("regression head produced no output".to_string())
                })?;
                terms.reg = Some(loss_reg(pred, &targets, embeddings, weights.neg_term_scale)?);
            }
            if weights.w_class > 0.0 && model.config.heads.classification {
                let probs = acts.class_probs.as_ref().ok_or_else(|| {
                    Error::Contract("classification head produced no output".to_string())
                })?;
                terms.class = Some(loss_class(probs, &targets)?);
            }
            if weights.w_rec > 0.0 && model.config.autoencoder {
                let rec = acts.reconstruction.as_ref().ok_or_else(|| {
                    Error::Contract("autoencoder produced no reconstruction".to_string())
                })?;
                terms.rec = Some(loss_rec(rec, &gathered)?);
            }
            // The mean term is never monitored: phase 1 and phase 2
            // values must stay comparable.
            let no_mean = LossWeights {
                w_mean: 0.0,
                ..weights.clone()
            };
            let (report, _) = total_loss(terms, &no_mean)?;
            Ok(report.total / scans.len() as f64)
        }
    }
}

/// Unsupervised pretraining: exactly `cfg.pretrain_epochs` passes over the
/// sentence scans minimizing the reconstruction loss alone. Head
/// parameters receive no gradient (the reconstruction path does not reach
/// them), though train-mode forwards still refresh every block's batchnorm
/// running statistics. The log opens with an epoch-0 evaluation-only
/// baseline so the improvement from pretraining is visible in one file.
pub fn pretrain(
    model: &mut BrainDecoder,
    sentence_scans: &[&Scan],
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<TrainLog> {
    cfg.validate()?;
    let mut log = TrainLog::default();
    if cfg.pretrain_epochs == 0 {
        return Ok(log);
    }
    if !model.config.autoencoder {
        return Err(Error::Config(
            "pretraining minimizes the reconstruction loss; enable the autoencoder or set pretrain_epochs to 0".to_string(),
        ));
    }
    if sentence_scans.is_empty() {
        log.warnings
            .push("no sentence scans available; pretraining skipped".to_string());
        return Ok(log);
    }

    let rec_only = LossWeights {
        w_reg: 0.0,
        w_class: 0.0,
        w_rec: 1.0,
        w_mean: 0.0,
        neg_term_scale: 0.0,
    };

    // Epoch-0 baseline: infer-mode reconstruction loss before any update.
    let t0 = Instant::now();
    let baseline = {
        let mut probe = ChaCha8Rng::seed_from_u64(0);
        let gathered = model.gather(sentence_scans)?;
        let pass = model.forward_gathered(&gathered, Mode::Infer, &mut probe)?;
        let rec = pass.activations.reconstruction.as_ref().ok_or_else(|| {
            Error::Contract("autoencoder produced no reconstruction".to_string())
        })?;
        loss_rec(rec, &gathered)?.0 / sentence_scans.len() as f64
    };
    let mut terms = BTreeMap::new();
    for key in ["reg", "class", "rec", "mean"] {
        terms.insert(key.to_string(), 0.0);
    }
    terms.insert("rec".to_string(), baseline);
    log.entries.push(TrainLogEntry {
        epoch: 0,
        phase: Phase::Pretrain,
        terms,
        train_total: baseline,
        val_metric: None,
        seconds: t0.elapsed().as_secs_f64(),
    });

    let mut optimizer = Adam::new(cfg.optimizer.clone());
    for epoch in 1..=cfg.pretrain_epochs {
        let start = Instant::now();
        let stats = run_epoch(
            model,
            &mut optimizer,
            sentence_scans,
            None,
            &rec_only,
            None,
            &[],
            cfg.batch_size,
            rng,
        )?;
        let (terms, total) = stats.per_scan(sentence_scans.len());
        log.entries.push(TrainLogEntry {
            epoch,
            phase: Phase::Pretrain,
            terms,
            train_total: total,
            val_metric: None,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok(log)
}

/// Two-phase supervised training. Phase 1 runs with the mean weight
/// forced to zero; once the validation metric stalls for
/// `saturation_patience` epochs the tracker is initialized from the
/// current model, the patience counter resets, and phase 2 trains with
/// mean regularization (tracker refreshed after every epoch) until
/// `early_stop_patience` stale epochs or `max_epochs`. Returns the
/// checkpoint with the best monitored metric seen at any epoch boundary,
/// the initial model included.
pub fn train_supervised(
    model: BrainDecoder,
    data: &SupervisedData,
    cfg: &TrainConfig,
    weights: &LossWeights,
    rng: &mut ChaCha8Rng,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    weights.validate()?;
    data.validate(&model, cfg)?;

    let mut model = model;
    let mut optimizer = Adam::new(cfg.optimizer.clone());
    let phase1_weights = LossWeights {
        w_mean: 0.0,
        ..weights.clone()
    };

    let mut log = TrainLog::default();
    let mut best_metric = validation_metric(
        &model,
        &data.validation,
        data.embeddings,
        &phase1_weights,
        cfg.monitored_metric,
    )?;
    let mut best_model = model.clone();
    let mut best_epoch = 0usize;
    let mut stale = 0usize;
    let mut phase = Phase::Phase1;
    let mut phase_switch_epoch: Option<usize> = None;
    let mut tracker: Option<MeanTracker> = None;

    for epoch in 1..=cfg.max_epochs {
        if phase == Phase::Phase2 && phase_switch_epoch.is_none() {
            phase_switch_epoch = Some(epoch);
        }
        let start = Instant::now();
        let epoch_weights = if phase == Phase::Phase1 {
            &phase1_weights
        } else {
            weights
        };
        let stats = run_epoch(
            &mut model,
            &mut optimizer,
            &data.train,
            Some(data.embeddings),
            epoch_weights,
            tracker.as_ref(),
            &cfg.tracked_layers,
            cfg.batch_size,
            rng,
        )?;
        if phase == Phase::Phase2 && weights.w_mean > 0.0 {
            tracker = Some(update_mean_tracker(
                &model,
                &data.train,
                data.vocabulary,
                &cfg.tracked_layers,
                epoch,
            )?);
        }
        let val = validation_metric(
            &model,
            &data.validation,
            data.embeddings,
            &phase1_weights,
            cfg.monitored_metric,
        )?;
        let (terms, total) = stats.per_scan(data.train.len());
        log.entries.push(TrainLogEntry {
            epoch,
            phase,
            terms,
            train_total: total,
            val_metric: Some(val),
            seconds: start.elapsed().as_secs_f64(),
        });

        if cfg.monitored_metric.improved(val, best_metric) {
            best_metric = val;
            best_epoch = epoch;
            best_model = model.clone();
            stale = 0;
        } else {
            stale += 1;
        }

        match phase {
            Phase::Phase1 => {
                if stale >= cfg.saturation_patience {
                    phase = Phase::Phase2;
                    stale = 0;
                    if weights.w_mean > 0.0 {
                        tracker = Some(update_mean_tracker(
                            &model,
                            &data.train,
                            data.vocabulary,
                            &cfg.tracked_layers,
                            epoch,
                        )?);
                    }
                }
            }
            Phase::Phase2 => {
                if stale >= cfg.early_stop_patience {
                    break;
                }
            }
            Phase::Pretrain => unreachable!("pretraining has its own loop"),
        }
    }

    Ok(TrainOutcome {
        model: best_model,
        log,
        best_epoch,
        best_metric,
        phase_switch_epoch,
    })
}
