//! Minimal dense-network engine with hand-derived backward passes.
//!
//! Layers are plain parameter structs plus free `*_forward` / `*_backward`
//! functions. Forward passes are pure: anything a backward pass or a
//! training loop needs (dropout masks, batch statistics, running-stat
//! updates) is returned explicitly instead of being mutated in place, so
//! the finite-difference checker can re-evaluate losses without side
//! effects.

pub mod activation;
pub mod adam;
pub mod batchnorm;
pub mod dense;
pub mod dropout;
pub mod gradcheck;
pub mod params;
pub mod similarity;
pub mod softmax;

pub use activation::{leaky_relu, leaky_relu_backward};
pub use adam::{Adam, AdamConfig};
pub use batchnorm::{
    apply_running_update, batch_norm_backward, batch_norm_forward, BatchNormCache,
    BatchNormParams, RunningUpdate,
};
pub use dense::{dense_backward, dense_forward, DenseParams};
pub use dropout::{dropout_backward, dropout_forward, DropoutMask};
pub use gradcheck::{
    finite_difference_check, GradCheckBlock, GradCheckReport, GradCheckSettings,
};
pub use params::{accumulate_grad, GradMap, Parameterized, TensorParam};
pub use similarity::{cosine_distance, cosine_distance_grad, cosine_similarity, pearson};
pub use softmax::{softmax, softmax_backward};

/// Whether a forward pass uses batch statistics and dropout (training) or
/// running statistics with dropout disabled (inference).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}
