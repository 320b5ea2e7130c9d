//! Leaky ReLU activation.

use crate::tensor::Tensor;

/// Elementwise `x if x >= 0 else alpha * x`.
pub fn leaky_relu(input: &Tensor, alpha: f64) -> Tensor {
    debug_assert!(alpha >= 0.0, "leaky_relu alpha must be nonnegative");
    let values = input
        .values()
        .iter()
        .map(|&x| if x >= 0.0 { x } else { alpha * x })
        .collect();
    Tensor::new(input.shape().to_vec(), values)
}

/// Gradient w.r.t. the pre-activation input. The slope at exactly zero is 1.
pub fn leaky_relu_backward(pre_activation: &Tensor, alpha: f64, grad_out: &Tensor) -> Tensor {
    assert_eq!(pre_activation.shape(), grad_out.shape());
    let values = pre_activation
        .values()
        .iter()
        .zip(grad_out.values())
        .map(|(&x, &g)| if x >= 0.0 { g } else { alpha * g })
        .collect();
    Tensor::new(grad_out.shape().to_vec(), values)
}
