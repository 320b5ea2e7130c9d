//! fMRI-to-word decoding pipeline.
//!
//! The crate decodes single-word fMRI scans from subjects never seen during
//! training. A dense decoder network partitions the scan by brain-atlas ROI,
//! compresses it through a 2000/200-wide trunk and predicts the stimulus word
//! either as an embedding vector (regression head) or as a probability
//! distribution over a fixed vocabulary (classification head). An encoder
//! mirror turns the decoder into an autoencoder for reconstruction loss and
//! unsupervised pretraining on unlabeled sentence scans; a mean-regularization
//! term pulls hidden representations of the same word together across
//! subjects. Decoded words can then steer an autoregressive language model by
//! biasing next-token scores toward the decoded anchor words.
//!
//! Everything runs at desk scale on seeded synthetic data: see [`data::synth`]
//! for the generator and the `braindecode` CLI for the end-to-end pipeline.

pub mod data;
pub mod error;
pub mod eval;
pub mod gen;
pub mod losses;
pub mod model;
pub mod nn;
pub mod tensor;
pub mod train;
pub mod verify;

pub use error::{Error, Result};
pub use tensor::Tensor;
