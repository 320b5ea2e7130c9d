//! Seeded synthetic dataset generator.
//!
//! Each word gets a unit-norm concept vector c_w. Each subject gets a
//! linear map M_s from concept space into the ROI-covered voxels, blended
//! between a shared map and a private one:
//!
//! `M_s = (1 - subject_mixing) * M_shared + subject_mixing * M_private(s)`
//!
//! A word scan is `M_s * c_w + paradigm_offset + noise / signal_to_noise`,
//! with independent unit Gaussian noise on every voxel (uncovered voxels
//! carry noise only). Sentence scans push a normalized mixture of three
//! concepts through M_s with no paradigm offset. The embedding table holds
//! `normalize(c_w + 0.25 * eta)` per word, so embeddings correlate with —
//! but do not equal — the concept vectors the scans encode.
//!
//! Everything is drawn from one ChaCha stream in a fixed documented order,
//! so a config (including its seed) maps to exactly one dataset.

use crate::error::{Error, Result};
use crate::tensor::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::atlas::{Atlas, Roi};
use super::dataset::Dataset;
use super::embeddings::EmbeddingTable;
use super::scan::Scan;
use super::vocab::Vocabulary;

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub n_subjects: usize,
    pub n_words: usize,
    pub n_paradigms: usize,
    pub total_voxels: usize,
    pub n_rois: usize,
    pub concept_dim: usize,
    pub signal_to_noise: f64,
    pub subject_mixing: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    /// Desk-scale default: 6 subjects x 20 words x 3 paradigms over 2,000
    /// voxels in 20 ROIs.
    fn default() -> Self {
        SynthConfig {
            n_subjects: 6,
            n_words: 20,
            n_paradigms: 3,
            total_voxels: 2_000,
            n_rois: 20,
            concept_dim: 16,
            signal_to_noise: 2.0,
            subject_mixing: 0.3,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_subjects == 0 || self.n_words == 0 || self.n_rois == 0 {
            return Err(Error::Config(
                "subjects, words, and ROIs must all be nonzero".to_string(),
            ));
        }
        if !(1..=3).contains(&self.n_paradigms) {
            return Err(Error::Config(format!(
                "n_paradigms must be 1..=3, got {}",
                self.n_paradigms
            )));
        }
        if self.n_rois > self.total_voxels {
            return Err(Error::Config(format!(
                "{} ROIs cannot partition {} voxels",
                self.n_rois, self.total_voxels
            )));
        }
        if !(self.signal_to_noise > 0.0) {
            return Err(Error::Config(format!(
                "signal_to_noise must be positive, got {}",
                self.signal_to_noise
            )));
        }
        if !(0.0..=1.0).contains(&self.subject_mixing) {
            return Err(Error::Config(format!(
                "subject_mixing must be in [0,1], got {}",
                self.subject_mixing
            )));
        }
        if self.concept_dim == 0 {
            return Err(Error::Config("concept_dim must be nonzero".to_string()));
        }
        let atlas = synth_atlas(self);
        if atlas.covered_count() < self.n_rois {
            return Err(Error::Config(format!(
                "{} covered voxels cannot host {} ROIs",
                atlas.covered_count(),
                self.n_rois
            )));
        }
        if self.concept_dim > atlas.min_roi_size() * self.n_rois {
            return Err(Error::Config(format!(
                "concept_dim {} exceeds min ROI size {} x {} ROIs",
                self.concept_dim,
                atlas.min_roi_size(),
                self.n_rois
            )));
        }
        Ok(())
    }
}

/// ROI partition used by the generator: ~5% of voxels stay uncovered (a
/// trailing run), the rest split into contiguous near-equal ROIs.
fn synth_atlas(cfg: &SynthConfig) -> Atlas {
    let uncovered = (cfg.total_voxels / 20).min(cfg.total_voxels - cfg.n_rois);
    let covered = cfg.total_voxels - uncovered;
    let base = covered / cfg.n_rois;
    let extra = covered % cfg.n_rois;
    let mut rois = Vec::with_capacity(cfg.n_rois);
    let mut next = 0usize;
    for r in 0..cfg.n_rois {
        let size = base + usize::from(r < extra);
        rois.push(Roi {
            name: format!("roi_{r:03}"),
            voxel_indices: (next..next + size).collect(),
        });
        next += size;
    }
    Atlas {
        rois,
        total_voxels: cfg.total_voxels,
    }
}

const WORD_STOCK: &[&str] = &[
    "apple", "bear", "car", "door", "eagle", "fork", "glass", "horse", "island",
    "jacket", "kite", "lamp", "mirror", "needle", "ocean", "piano", "queen", "river",
    "spoon", "table", "umbrella", "violin", "wheel", "yarn", "zebra", "anchor",
    "bridge", "candle", "drum", "engine", "feather", "garden", "hammer", "igloo",
    "jungle", "kettle", "ladder", "magnet", "nest", "orchard", "pencil", "quill",
    "rocket", "saddle", "tunnel", "urn", "valley", "window", "xylophone", "yacht",
    "acorn", "basket", "cloud", "desert", "ember", "flute", "goblet", "harbor",
    "iron", "jewel",
];

fn synth_words(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| {
            let stem = WORD_STOCK[i % WORD_STOCK.len()];
            let round = i / WORD_STOCK.len();
            if round == 0 {
                stem.to_string()
            } else {
                format!("{stem}{}", round + 1)
            }
        })
        .collect()
}

fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 1e-12 {
        for x in &mut v {
            *x /= norm;
        }
    }
    v
}

pub fn generate_synthetic_dataset(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let atlas = synth_atlas(cfg);
    let covered = atlas.covered_indices();
    let n_cov = covered.len();
    let d = cfg.concept_dim;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // Draw order is part of the format: concepts, paradigm offsets, shared
    // map, private maps, embedding noise, word-scan noise, sentence scans.
    let concepts: Vec<Vec<f64>> = (0..cfg.n_words)
        .map(|_| normalize(normal_vec(&mut rng, d)))
        .collect();

    let offsets: Vec<Vec<f64>> = (0..cfg.n_paradigms)
        .map(|_| normal_vec(&mut rng, n_cov).into_iter().map(|x| 0.5 * x).collect())
        .collect();

    let shared = normal_vec(&mut rng, n_cov * d);
    let mix = cfg.subject_mixing;
    let maps: Vec<Vec<f64>> = (0..cfg.n_subjects)
        .map(|_| {
            let private = normal_vec(&mut rng, n_cov * d);
            shared
                .iter()
                .zip(&private)
                .map(|(&sh, &pr)| (1.0 - mix) * sh + mix * pr)
                .collect()
        })
        .collect();

    let vocabulary = Vocabulary::new(synth_words(cfg.n_words))?;
    let mut embeddings = EmbeddingTable::new(d);
    for (w, word) in vocabulary.words().iter().enumerate() {
        let eta = normal_vec(&mut rng, d);
        let vec = normalize(
            concepts[w]
                .iter()
                .zip(&eta)
                .map(|(&c, &e)| c + 0.25 * e)
                .collect(),
        );
        embeddings.insert(word, vec)?;
    }

    let noise_scale = 1.0 / cfg.signal_to_noise;
    let subject_ids: Vec<String> =
        (0..cfg.n_subjects).map(|s| format!("S{:02}", s + 1)).collect();

    let project = |map: &[f64], concept: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; n_cov];
        for (i, o) in out.iter_mut().enumerate() {
            let row = &map[i * d..(i + 1) * d];
            *o = row.iter().zip(concept).map(|(m, c)| m * c).sum();
        }
        out
    };

    let mut word_scans = Vec::with_capacity(cfg.n_subjects * cfg.n_words * cfg.n_paradigms);
    for (s, sid) in subject_ids.iter().enumerate() {
        for (w, concept) in concepts.iter().enumerate() {
            let signal = project(&maps[s], concept);
            for p in 0..cfg.n_paradigms {
                let mut voxels = vec![0.0; cfg.total_voxels];
                for v in voxels.iter_mut() {
                    let n: f64 = StandardNormal.sample(&mut rng);
                    *v = n * noise_scale;
                }
                for (j, &vi) in covered.iter().enumerate() {
                    voxels[vi] += signal[j] + offsets[p][j];
                }
                word_scans.push(Scan::word_scan(
                    Tensor::vector(voxels),
                    sid,
                    w,
                    p as u8,
                ));
            }
        }
    }

    // One sentence scan per (subject, word-count slot): n_words per subject.
    let mut sentence_scans = Vec::with_capacity(cfg.n_subjects * cfg.n_words);
    for (s, sid) in subject_ids.iter().enumerate() {
        for _ in 0..cfg.n_words {
            let picks = 3.min(cfg.n_words);
            let mut mixture = vec![0.0; d];
            for _ in 0..picks {
                let w = rng.random_range(0..cfg.n_words);
                for (m, c) in mixture.iter_mut().zip(&concepts[w]) {
                    *m += c;
                }
            }
            let mixture = normalize(mixture);
            let signal = project(&maps[s], &mixture);
            let mut voxels = vec![0.0; cfg.total_voxels];
            for v in voxels.iter_mut() {
                let n: f64 = StandardNormal.sample(&mut rng);
                *v = n * noise_scale;
            }
            for (j, &vi) in covered.iter().enumerate() {
                voxels[vi] += signal[j];
            }
            sentence_scans.push(Scan::sentence_scan(Tensor::vector(voxels), sid));
        }
    }

    let dataset = Dataset {
        atlas,
        vocabulary,
        embeddings,
        word_scans,
        sentence_scans,
    };
    dataset.validate()?;
    Ok(dataset)
}
