//! The ROI-partitioned decoder-encoder network.
//!
//! Decoder path: per-ROI dense layers over the atlas gather -> concat ->
//! non-linear block to `hidden1_size` -> non-linear block to `latent_size`
//! -> heads (linear regression to embedding space and/or a non-linear
//! block + linear + softmax classification over the vocabulary).
//! Encoder path (autoencoder): latent -> `hidden1_size` block ->
//! concat-width block -> per-ROI linear layers back to voxel counts.

pub mod blocks;
pub mod checkpoint;
pub mod decoder;

pub use blocks::{BlockCache, BlockGrads, BlockOutput, NonLinearBlock};
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use decoder::{
    build_model, ActivationGrads, BrainDecoder, ForwardActivations, ForwardCache, ForwardPass,
};

use crate::error::{Error, Result};

/// Batchnorm hyperparameters used by every block in the network.
pub const BN_MOMENTUM: f64 = 0.9;
pub const BN_EPSILON: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeadFlags {
    pub regression: bool,
    pub classification: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Per-ROI layer width is `max(floor(|ROI| / roi_divisor), 1)`.
    pub roi_divisor: usize,
    pub hidden1_size: usize,
    pub latent_size: usize,
    pub dropout_rate: f64,
    pub leaky_alpha: f64,
    pub embedding_dim: usize,
    pub vocab_size: usize,
    pub heads: HeadFlags,
    pub autoencoder: bool,
    /// When false, the per-ROI layer is skipped and the first non-linear
    /// block consumes all ROI-covered voxels directly (the two-layer base
    /// model).
    pub use_roi_layer: bool,
}

impl Default for ModelConfig {
    /// Full-scale defaults: 2000/200 trunk, 300-dim embeddings, 180 words.
    fn default() -> Self {
        ModelConfig {
            roi_divisor: 20,
            hidden1_size: 2_000,
            latent_size: 200,
            dropout_rate: 0.4,
            leaky_alpha: 0.3,
            embedding_dim: 300,
            vocab_size: 180,
            heads: HeadFlags {
                regression: true,
                classification: false,
            },
            autoencoder: true,
            use_roi_layer: true,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.roi_divisor == 0
            || self.hidden1_size == 0
            || self.latent_size == 0
            || self.embedding_dim == 0
            || self.vocab_size == 0
        {
            return Err(Error::Config("all model sizes must be >= 1".to_string()));
        }
        if !self.heads.regression && !self.heads.classification {
            return Err(Error::Config("at least one head must be enabled".to_string()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!(
                "dropout_rate must be in [0,1), got {}",
                self.dropout_rate
            )));
        }
        if self.leaky_alpha < 0.0 {
            return Err(Error::Config(format!(
                "leaky_alpha must be nonnegative, got {}",
                self.leaky_alpha
            )));
        }
        Ok(())
    }
}
