//! Training schedule: unsupervised pretraining on sentence scans, then
//! supervised phase 1 (no mean regularization), a phase switch when the
//! validation metric saturates, phase 2 with mean regularization, and
//! early stopping — plus the leave-one-subject-out driver.

mod loo;
mod supervised;
mod tracker;

pub use loo::{run_leave_one_out, run_one_rotation, RotationOutcome};
pub use supervised::{pretrain, train_supervised, validation_metric, SupervisedData, TrainOutcome};
pub use tracker::update_mean_tracker;

pub use crate::losses::MeanTracker;

use crate::error::{Error, Result};
use crate::nn::AdamConfig;
use std::collections::BTreeMap;
use std::fmt;

/// Which decoder activations the mean tracker follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackedLayer {
    RoiConcat,
    Hidden1,
    Latent,
}

impl TrackedLayer {
    pub fn name(self) -> &'static str {
        match self {
            TrackedLayer::RoiConcat => "roi_concat",
            TrackedLayer::Hidden1 => "hidden1",
            TrackedLayer::Latent => "latent",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "roi_concat" => Ok(TrackedLayer::RoiConcat),
            "hidden1" => Ok(TrackedLayer::Hidden1),
            "latent" => Ok(TrackedLayer::Latent),
            other => Err(Error::Config(format!(
                "unknown tracked layer '{other}' (expected roi_concat, hidden1 or latent)"
            ))),
        }
    }
}

/// What early stopping and the phase switch watch on the validation
/// subject. Total loss always excludes the mean term so phase 1 and
/// phase 2 values stay comparable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonitoredMetric {
    ValTotalLoss,
    ValTop1,
}

impl MonitoredMetric {
    /// Is `candidate` strictly better than `incumbent`?
    pub fn improved(self, candidate: f64, incumbent: f64) -> bool {
        match self {
            MonitoredMetric::ValTotalLoss => candidate < incumbent,
            MonitoredMetric::ValTop1 => candidate > incumbent,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MonitoredMetric::ValTotalLoss => "val_total_loss",
            MonitoredMetric::ValTop1 => "val_top1",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "val_total_loss" => Ok(MonitoredMetric::ValTotalLoss),
            "val_top1" => Ok(MonitoredMetric::ValTop1),
            other => Err(Error::Config(format!(
                "unknown monitored metric '{other}' (expected val_total_loss or val_top1)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Pretrain,
    Phase1,
    Phase2,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Pretrain => "pretrain",
            Phase::Phase1 => "phase1",
            Phase::Phase2 => "phase2",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub pretrain_epochs: usize,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Phase 1 ends after this many epochs without validation improvement.
    pub saturation_patience: usize,
    /// Phase 2 (and training) ends after this many epochs without
    /// validation improvement.
    pub early_stop_patience: usize,
    pub monitored_metric: MonitoredMetric,
    pub tracked_layers: Vec<TrackedLayer>,
    pub seed: u64,
    pub optimizer: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            pretrain_epochs: 30,
            batch_size: 32,
            max_epochs: 300,
            saturation_patience: 5,
            early_stop_patience: 10,
            monitored_metric: MonitoredMetric::ValTotalLoss,
            tracked_layers: vec![TrackedLayer::Hidden1, TrackedLayer::Latent],
            seed: 42,
            optimizer: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(Error::Config(format!(
                "batch_size must be at least 2 (batch statistics need two samples), got {}",
                self.batch_size
            )));
        }
        if self.saturation_patience == 0 || self.early_stop_patience == 0 {
            return Err(Error::Config(
                "patience values must be at least 1 epoch".to_string(),
            ));
        }
        if self.tracked_layers.is_empty() {
            return Err(Error::Config(
                "tracked_layers must name at least one layer".to_string(),
            ));
        }
        for (i, layer) in self.tracked_layers.iter().enumerate() {
            if self.tracked_layers[..i].contains(layer) {
                return Err(Error::Config(format!(
                    "tracked layer '{}' listed twice",
                    layer.name()
                )));
            }
        }
        Ok(())
    }
}

/// One logged epoch. `terms` holds the unweighted per-term training
/// losses as per-scan means; `train_total` is the weighted total, also
/// per scan. `val_metric` is absent for pretraining epochs.
#[derive(Debug, Clone)]
pub struct TrainLogEntry {
    pub epoch: usize,
    pub phase: Phase,
    pub terms: BTreeMap<String, f64>,
    pub train_total: f64,
    pub val_metric: Option<f64>,
    pub seconds: f64,
}

impl TrainLogEntry {
    /// One-line structured rendering, fixed field order.
    pub fn to_line(&self) -> String {
        let val = match self.val_metric {
            Some(v) => format!("{v}"),
            None => "-".to_string(),
        };
        format!(
            "epoch={} phase={} total={} reg={} class={} rec={} mean={} val={} seconds={:.3}",
            self.epoch,
            self.phase,
            self.train_total,
            self.terms.get("reg").copied().unwrap_or(0.0),
            self.terms.get("class").copied().unwrap_or(0.0),
            self.terms.get("rec").copied().unwrap_or(0.0),
            self.terms.get("mean").copied().unwrap_or(0.0),
            val,
            self.seconds,
        )
    }
}

#[derive(Debug, Clone, Default)]
pub struct TrainLog {
    pub entries: Vec<TrainLogEntry>,
    pub warnings: Vec<String>,
}

impl TrainLog {
    /// Render warnings (as `#`-prefixed comments) followed by one line
    /// per entry.
    pub fn lines(&self) -> Vec<String> {
        self.warnings
            .iter()
            .map(|w| format!("# warning: {w}"))
            .chain(self.entries.iter().map(TrainLogEntry::to_line))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        TrainConfig::default().validate().unwrap();
    }

    #[test]
    fn tiny_batch_size_is_rejected() {
        let cfg = TrainConfig {
            batch_size: 1,
            ..TrainConfig::default()
        };
        assert!(matches!(cfg.validate().unwrap_err(), Error::Config(_)));
    }

    #[test]
    fn duplicate_tracked_layer_is_rejected() {
        let cfg = TrainConfig {
            tracked_layers: vec![TrackedLayer::Latent, TrackedLayer::Latent],
            ..TrainConfig::default()
        };
        assert!(matches!(cfg.validate().unwrap_err(), Error::Config(_)));
    }

    #[test]
    fn zero_patience_is_rejected() {
        let cfg = TrainConfig {
            early_stop_patience: 0,
            ..TrainConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn metric_direction() {
        assert!(MonitoredMetric::ValTotalLoss.improved(0.9, 1.0));
        assert!(!MonitoredMetric::ValTotalLoss.improved(1.0, 1.0));
        assert!(MonitoredMetric::ValTop1.improved(0.6, 0.5));
        assert!(!MonitoredMetric::ValTop1.improved(0.5, 0.5));
    }

    #[test]
    fn tracked_layer_names_round_trip() {
        for layer in [TrackedLayer::RoiConcat, TrackedLayer::Hidden1, TrackedLayer::Latent] {
            assert_eq!(TrackedLayer::parse(layer.name()).unwrap(), layer);
        }
        assert!(TrackedLayer::parse("output").is_err());
    }

    #[test]
    fn log_entry_renders_fixed_field_order() {
        let mut terms = BTreeMap::new();
        terms.insert("rec".to_string(), 0.5);
        let entry = TrainLogEntry {
            epoch: 3,
            phase: Phase::Pretrain,
            terms,
            train_total: 0.5,
            val_metric: None,
            seconds: 0.1234,
        };
        assert_eq!(
            entry.to_line(),
            "epoch=3 phase=pretrain total=0.5 reg=0 class=0 rec=0.5 mean=0 val=- seconds=0.123"
        );
    }
}
