//! Dense (fully connected) layer.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Weights `[out x in]` and bias `[out]` of one dense layer.
#[derive(Debug, Clone)]
pub struct DenseParams {
    pub weights: Tensor,
    pub bias: Tensor,
}

impl DenseParams {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        DenseParams {
            weights: Tensor::zeros(&[out_dim, in_dim]),
            bias: Tensor::zeros(&[out_dim]),
        }
    }

    /// Uniform init in +-sqrt(6 / (fan_in + fan_out)), bias zero.
    pub fn init(in_dim: usize, out_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let mut weights = Tensor::zeros(&[out_dim, in_dim]);
        for w in weights.values_mut() {
            *w = rng.random_range(-limit..limit);
        }
        DenseParams {
            weights,
            bias: Tensor::zeros(&[out_dim]),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn out_dim(&self) -> usize {
        self.weights.shape()[0]
    }
}

/// `output[b] = weights . input[b] + bias` for a `[batch x in]` input.
///
/// A rank-1 input is treated as a single sample and returns a rank-1 output.
pub fn dense_forward(params: &DenseParams, input: &Tensor) -> Result<Tensor> {
    let (out_dim, in_dim) = params.weights.dims2();
    let single = input.rank() == 1;
    let (batch, width) = if single {
        (1, input.len())
    } else {
        input.dims2()
    };
    if width != in_dim {
        return Err(Error::Dimension {
            op: "dense_forward",
            left: format!("weights [{out_dim} x {in_dim}]"),
            right: format!("input {}", input.shape_string()),
        });
    }

    let mut out = vec![0.0; batch * out_dim];
    let w = params.weights.values();
    let b = params.bias.values();
    let x = input.values();
    for bi in 0..batch {
        let xrow = &x[bi * in_dim..(bi + 1) * in_dim];
        let orow = &mut out[bi * out_dim..(bi + 1) * out_dim];
        for (o, orow_o) in orow.iter_mut().enumerate() {
            let wrow = &w[o * in_dim..(o + 1) * in_dim];
            let mut acc = 0.0;
            for i in 0..in_dim {
                acc += wrow[i] * xrow[i];
            }
            *orow_o = acc + b[o];
        }
    }
    Ok(if single {
        Tensor::vector(out)
    } else {
        Tensor::new(vec![batch, out_dim], out)
    })
}

/// Backward pass given the forward input and the gradient at the output.
///
/// Returns `(d_input, d_weights, d_bias)`.
pub fn dense_backward(
    params: &DenseParams,
    input: &Tensor,
    grad_out: &Tensor,
) -> (Tensor, Tensor, Tensor) {
    let (out_dim, in_dim) = params.weights.dims2();
    let (batch, _) = input.dims2();
    assert_eq!(grad_out.dims2(), (batch, out_dim), "dense_backward shapes");

    let w = params.weights.values();
    let x = input.values();
    let dy = grad_out.values();

    let mut dw = vec![0.0; out_dim * in_dim];
    let mut db = vec![0.0; out_dim];
    let mut dx = vec![0.0; batch * in_dim];

    for bi in 0..batch {
        let xrow = &x[bi * in_dim..(bi + 1) * in_dim];
        let dyrow = &dy[bi * out_dim..(bi + 1) * out_dim];
        let dxrow = &mut dx[bi * in_dim..(bi + 1) * in_dim];
        for o in 0..out_dim {
            let g = dyrow[o];
            if g == 0.0 {
                continue;
            }
            db[o] += g;
            let wrow = &w[o * in_dim..(o + 1) * in_dim];
            let dwrow = &mut dw[o * in_dim..(o + 1) * in_dim];
            for i in 0..in_dim {
                dwrow[i] += g * xrow[i];
                dxrow[i] += g * wrow[i];
            }
        }
    }

    (
        Tensor::new(vec![batch, in_dim], dx),
        Tensor::new(vec![out_dim, in_dim], dw),
        Tensor::new(vec![out_dim], db),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_weights_zero_bias() {
        let params = DenseParams {
            weights: Tensor::new(vec![3, 3], vec![1., 0., 0., 0., 1., 0., 0., 0., 1.]),
            bias: Tensor::zeros(&[3]),
        };
        let out = dense_forward(&params, &Tensor::vector(vec![1.0, 2.0, 3.0])).unwrap();
        assert_eq!(out.values(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn one_dimensional_affine() {
        let params = DenseParams {
            weights: Tensor::new(vec![1, 1], vec![2.0]),
            bias: Tensor::vector(vec![1.0]),
        };
        let out = dense_forward(&params, &Tensor::vector(vec![3.0])).unwrap();
        assert_eq!(out.values(), &[7.0]);
    }

    #[test]
    fn shape_mismatch_names_both_shapes() {
        let params = DenseParams::zeros(3, 2);
        let err = dense_forward(&params, &Tensor::vector(vec![1.0, 2.0])).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[2 x 3]"), "{msg}");
        assert!(msg.contains("[2]"), "{msg}");
    }

    #[test]
    fn batch_matches_per_row() {
        let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(5);
        let params = DenseParams::init(4, 3, &mut rng);
        let batch = Tensor::new(vec![2, 4], (0..8).map(|i| i as f64 * 0.3 - 1.0).collect());
        let out = dense_forward(&params, &batch).unwrap();
        for r in 0..2 {
            let single = dense_forward(&params, &Tensor::vector(batch.row(r).to_vec())).unwrap();
            assert_eq!(single.values(), out.row(r));
        }
    }
}
