//! The non-linear layer used throughout the decoder and encoder:
//! dropout -> dense -> batchnorm -> leaky ReLU.
//!
//! The component list is fixed; this ordering is a reproducibility
//! decision documented in the repo docs.

use crate::error::Result;
use crate::nn::{
    batch_norm_backward, batch_norm_forward, dense_backward, dense_forward, dropout_backward,
    dropout_forward, leaky_relu, leaky_relu_backward, BatchNormCache, BatchNormParams,
    DenseParams, DropoutMask, Mode, RunningUpdate,
};
use crate::tensor::Tensor;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct NonLinearBlock {
    pub dense: DenseParams,
    pub bn: BatchNormParams,
}

#[derive(Debug)]
pub struct BlockCache {
    pub mask: Option<DropoutMask>,
    /// Block input after dropout (what the dense layer saw).
    pub dropped: Tensor,
    pub bn_cache: BatchNormCache,
    /// Batchnorm output, i.e. the activation input.
    pub pre_act: Tensor,
}

#[derive(Debug)]
pub struct BlockOutput {
    pub output: Tensor,
    pub cache: Option<BlockCache>,
    pub running_update: Option<RunningUpdate>,
}

#[derive(Debug)]
pub struct BlockGrads {
    pub d_weights: Tensor,
    pub d_bias: Tensor,
    pub d_gain: Tensor,
    pub d_shift: Tensor,
}

impl NonLinearBlock {
    pub fn init(
        in_dim: usize,
        out_dim: usize,
        bn_momentum: f64,
        bn_epsilon: f64,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        NonLinearBlock {
            dense: DenseParams::init(in_dim, out_dim, rng),
            bn: BatchNormParams::init(out_dim, bn_momentum, bn_epsilon),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.dense.in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.dense.out_dim()
    }

    pub fn forward(
        &self,
        input: &Tensor,
        dropout_rate: f64,
        alpha: f64,
        mode: Mode,
        rng: &mut ChaCha8Rng,
    ) -> Result<BlockOutput> {
        let (dropped, mask) = dropout_forward(input, dropout_rate, mode, rng);
        let dense_out = dense_forward(&self.dense, &dropped)?;
        let (pre_act, bn_cache, running_update) = batch_norm_forward(&self.bn, &dense_out, mode)?;
        let output = leaky_relu(&pre_act, alpha);
        let cache = bn_cache.map(|bn_cache| BlockCache {
            mask,
            dropped,
            bn_cache,
            pre_act: pre_act.clone(),
        });
        Ok(BlockOutput {
            output,
            cache,
            running_update,
        })
    }

    /// Train-mode backward. Returns the gradient w.r.t. the block input
    /// and the parameter gradients.
    pub fn backward(
        &self,
        cache: &BlockCache,
        alpha: f64,
        grad_out: &Tensor,
    ) -> (Tensor, BlockGrads) {
        let d_pre_act = leaky_relu_backward(&cache.pre_act, alpha, grad_out);
        let (d_dense_out, d_gain, d_shift) =
            batch_norm_backward(&self.bn, &cache.bn_cache, &d_pre_act);
        let (d_dropped, d_weights, d_bias) =
            dense_backward(&self.dense, &cache.dropped, &d_dense_out);
        let d_input = match &cache.mask {
            Some(mask) => dropout_backward(mask, &d_dropped),
            None => d_dropped,
        };
        (
            d_input,
            BlockGrads {
                d_weights,
                d_bias,
                d_gain,
                d_shift,
            },
        )
    }

    /// Resolve a field path like `dense.weight` or `bn.gain` to a tensor.
    pub fn field(&self, path: &str) -> Option<&Tensor> {
        match path {
            "dense.weight" => Some(&self.dense.weights),
            "dense.bias" => Some(&self.dense.bias),
            "bn.gain" => Some(&self.bn.gain),
            "bn.shift" => Some(&self.bn.shift),
            _ => None,
        }
    }

    pub fn field_mut(&mut self, path: &str) -> Option<&mut Tensor> {
        match path {
            "dense.weight" => Some(&mut self.dense.weights),
            "dense.bias" => Some(&mut self.dense.bias),
            "bn.gain" => Some(&mut self.bn.gain),
            "bn.shift" => Some(&mut self.bn.shift),
            _ => None,
        }
    }

    /// Non-trainable state (batchnorm running statistics).
    pub fn state_field(&self, path: &str) -> Option<&Tensor> {
        match path {
            "bn.running_mean" => Some(&self.bn.running_mean),
            "bn.running_var" => Some(&self.bn.running_var),
            _ => None,
        }
    }

    pub fn state_field_mut(&mut self, path: &str) -> Option<&mut Tensor> {
        match path {
            "bn.running_mean" => Some(&mut self.bn.running_mean),
            "bn.running_var" => Some(&mut self.bn.running_var),
            _ => None,
        }
    }

    /// Trainable field suffixes, in canonical order.
    pub const FIELDS: [&'static str; 4] = ["dense.weight", "dense.bias", "bn.gain", "bn.shift"];
    /// Non-trainable state suffixes, in canonical order.
    pub const STATE_FIELDS: [&'static str; 2] = ["bn.running_mean", "bn.running_var"];
}
