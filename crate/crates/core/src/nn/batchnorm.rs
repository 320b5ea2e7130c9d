//! Batch normalization over the batch dimension of a `[batch x d]` tensor.
//!
//! Train mode normalizes each column by its batch mean and (biased) batch
//! variance, then applies gain/shift, and reports an exponential-moving-
//! average update of the running statistics:
//!
//! `running <- momentum * running + (1 - momentum) * batch_stat`
//!
//! Infer mode normalizes with the stored running statistics only, so a
//! single scan is well defined at inference. The update is returned to the
//! caller instead of applied here; the training loop applies it after each
//! forward pass.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone)]
pub struct BatchNormParams {
    pub gain: Tensor,
    pub shift: Tensor,
    pub running_mean: Tensor,
    pub running_var: Tensor,
    pub momentum: f64,
    pub epsilon: f64,
}

impl BatchNormParams {
    /// Gain 1, shift 0, running mean 0, running var 1.
    pub fn init(d: usize, momentum: f64, epsilon: f64) -> Self {
        assert!(momentum > 0.0 && momentum < 1.0, "momentum must be in (0,1)");
        assert!(epsilon > 0.0, "epsilon must be positive");
        BatchNormParams {
            gain: Tensor::filled(&[d], 1.0),
            shift: Tensor::zeros(&[d]),
            running_mean: Tensor::zeros(&[d]),
            running_var: Tensor::filled(&[d], 1.0),
            momentum,
            epsilon,
        }
    }

    pub fn dim(&self) -> usize {
        self.gain.len()
    }
}

/// Per-column batch statistics the backward pass needs.
#[derive(Debug, Clone)]
pub struct BatchNormCache {
    pub normalized: Tensor,
    pub inv_std: Vec<f64>,
}

/// New running statistics computed from one training batch.
#[derive(Debug, Clone)]
pub struct RunningUpdate {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

pub fn apply_running_update(params: &mut BatchNormParams, update: &RunningUpdate) {
    params.running_mean.values_mut().copy_from_slice(&update.mean);
    params.running_var.values_mut().copy_from_slice(&update.var);
}

use super::Mode;

pub fn batch_norm_forward(
    params: &BatchNormParams,
    input: &Tensor,
    mode: Mode,
) -> Result<(Tensor, Option<BatchNormCache>, Option<RunningUpdate>)> {
    let (batch, d) = input.dims2();
    if d != params.dim() {
        return Err(Error::Dimension {
            op: "batch_norm_forward",
            left: format!("params [{}]", params.dim()),
            right: format!("input {}", input.shape_string()),
        });
    }

    match mode {
        Mode::Infer => {
            let mut out = Tensor::zeros(&[batch, d]);
            for b in 0..batch {
                for j in 0..d {
                    let inv = 1.0
                        / (params.running_var.values()[j] + params.epsilon).sqrt();
                    let xhat = (input.get2(b, j) - params.running_mean.values()[j]) * inv;
                    out.set2(b, j, params.gain.values()[j] * xhat + params.shift.values()[j]);
                }
            }
            Ok((out, None, None))
        }
        Mode::Train => {
            if batch < 2 {
                return Err(Error::Contract(format!(
                    "batch_norm train mode needs batch >= 2, got {batch}"
                )));
            }
            let mut mean = vec![0.0; d];
            let mut var = vec![0.0; d];
            for b in 0..batch {
                for j in 0..d {
                    mean[j] += input.get2(b, j);
                }
            }
            for m in &mut mean {
                *m /= batch as f64;
            }
            for b in 0..batch {
                for j in 0..d {
                    let c = input.get2(b, j) - mean[j];
                    var[j] += c * c;
                }
            }
            for v in &mut var {
                *v /= batch as f64;
            }

            let inv_std: Vec<f64> =
                var.iter().map(|&v| 1.0 / (v + params.epsilon).sqrt()).collect();
            let mut normalized = Tensor::zeros(&[batch, d]);
            let mut out = Tensor::zeros(&[batch, d]);
            for b in 0..batch {
                for j in 0..d {
                    let xhat = (input.get2(b, j) - mean[j]) * inv_std[j];
                    normalized.set2(b, j, xhat);
                    out.set2(b, j, params.gain.values()[j] * xhat + params.shift.values()[j]);
                }
            }

            let m = params.momentum;
            let update = RunningUpdate {
                mean: params
                    .running_mean
                    .values()
                    .iter()
                    .zip(&mean)
                    .map(|(&r, &b)| m * r + (1.0 - m) * b)
                    .collect(),
                var: params
                    .running_var
                    .values()
                    .iter()
                    .zip(&var)
                    .map(|(&r, &b)| m * r + (1.0 - m) * b)
                    .collect(),
            };

            Ok((out, Some(BatchNormCache { normalized, inv_std }), Some(update)))
        }
    }
}

/// Train-mode backward. Returns `(d_input, d_gain, d_shift)`.
pub fn batch_norm_backward(
    params: &BatchNormParams,
    cache: &BatchNormCache,
    grad_out: &Tensor,
) -> (Tensor, Tensor, Tensor) {
    let (batch, d) = grad_out.dims2();
    let n = batch as f64;
    let xhat = &cache.normalized;

    let mut d_gain = vec![0.0; d];
    let mut d_shift = vec![0.0; d];
    let mut sum_dy = vec![0.0; d];
    let mut sum_dy_xhat = vec![0.0; d];
    for b in 0..batch {
        for j in 0..d {
            let dy = grad_out.get2(b, j);
            let xh = xhat.get2(b, j);
            d_shift[j] += dy;
            d_gain[j] += dy * xh;
            sum_dy[j] += dy;
            sum_dy_xhat[j] += dy * xh;
        }
    }

    let mut d_input = Tensor::zeros(&[batch, d]);
    for b in 0..batch {
        for j in 0..d {
            let dy = grad_out.get2(b, j);
            let xh = xhat.get2(b, j);
            let g = params.gain.values()[j] * cache.inv_std[j]
                * (dy - sum_dy[j] / n - xh * sum_dy_xhat[j] / n);
            d_input.set2(b, j, g);
        }
    }

    (
        d_input,
        Tensor::new(vec![d], d_gain),
        Tensor::new(vec![d], d_shift),
    )
}
