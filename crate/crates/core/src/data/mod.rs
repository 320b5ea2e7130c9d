//! Data model: atlas, scans, vocabulary, embeddings, dataset directories,
//! the synthetic generator, and leave-one-out splits.

pub mod atlas;
pub mod dataset;
pub mod embeddings;
pub mod scan;
pub mod splits;
pub mod store;
pub mod synth;
pub mod vocab;

pub use atlas::{load_atlas, parse_atlas, save_atlas, Atlas, Roi};
pub use dataset::{load_dataset, save_dataset, Dataset};
pub use embeddings::{load_embeddings, save_embeddings, EmbeddingTable};
pub use scan::{pad_scan, standardize_scan, Scan};
pub use splits::{leave_one_out_splits, Rotation, SplitPlan};
pub use store::{load_scans, save_scans};
pub use synth::{generate_synthetic_dataset, SynthConfig};
pub use vocab::{load_vocabulary, save_vocabulary, Vocabulary};
