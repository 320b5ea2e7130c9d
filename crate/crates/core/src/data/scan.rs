//! A single fMRI scan: a full-length voxel vector plus labels.
//!
//! Word-labeled scans carry the stimulus word index and the presentation
//! paradigm; sentence scans carry neither. Scans shorter than the atlas
//! are padded with trailing zeros to `total_voxels` so one fixed-width
//! layout serves the whole pipeline.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

use super::atlas::Atlas;

#[derive(Debug, Clone, PartialEq)]
pub struct Scan {
    pub voxels: Tensor,
    pub subject_id: String,
    /// Index into the run's vocabulary; `None` for sentence scans.
    pub word_index: Option<usize>,
    /// Presentation paradigm in {0,1,2}; `None` for sentence scans.
    pub paradigm: Option<u8>,
}

impl Scan {
    pub fn word_scan(
        voxels: Tensor,
        subject_id: &str,
        word_index: usize,
        paradigm: u8,
    ) -> Self {
        Scan {
            voxels,
            subject_id: subject_id.to_string(),
            word_index: Some(word_index),
            paradigm: Some(paradigm),
        }
    }

    pub fn sentence_scan(voxels: Tensor, subject_id: &str) -> Self {
        Scan {
            voxels,
            subject_id: subject_id.to_string(),
            word_index: None,
            paradigm: None,
        }
    }

    pub fn is_word_scan(&self) -> bool {
        self.word_index.is_some()
    }

    pub fn validate(&self, atlas: &Atlas) -> Result<()> {
        if self.voxels.len() != atlas.total_voxels {
            return Err(Error::Data(format!(
                "scan for '{}' has {} voxels, atlas expects {}",
                self.subject_id,
                self.voxels.len(),
                atlas.total_voxels
            )));
        }
        if self.word_index.is_some() && self.paradigm.is_none() {
            return Err(Error::Data(format!(
                "word-labeled scan for '{}' is missing its paradigm",
                self.subject_id
            )));
        }
        Ok(())
    }
}

/// Copy `raw` into a `total_voxels`-length vector, zero-padding the tail.
pub fn pad_scan(raw: &Tensor, total_voxels: usize) -> Result<Tensor> {
    if raw.len() > total_voxels {
        return Err(Error::Data(format!(
            "raw scan has {} voxels, more than the atlas total {}",
            raw.len(),
            total_voxels
        )));
    }
    let mut out = Tensor::zeros(&[total_voxels]);
    out.values_mut()[..raw.len()].copy_from_slice(raw.values());
    Ok(out)
}

/// Standardize the ROI-covered voxels of a scan to zero mean and unit
/// variance (population variance). Uncovered voxels — including padding —
/// are left untouched, so padding stays zero. Returns an error if the
/// covered voxels are constant.
pub fn standardize_scan(scan: &mut Scan, atlas: &Atlas) -> Result<()> {
    let covered = atlas.covered_indices();
    if covered.is_empty() {
        return Err(Error::Degenerate("standardize over an empty atlas"));
    }
    let n = covered.len() as f64;
    let vals = scan.voxels.values_mut();
    let mean: f64 = covered.iter().map(|&i| vals[i]).sum::<f64>() / n;
    let var: f64 = covered
        .iter()
        .map(|&i| (vals[i] - mean) * (vals[i] - mean))
        .sum::<f64>()
        / n;
    if var == 0.0 {
        return Err(Error::Degenerate("standardize of a constant scan"));
    }
    let sd = var.sqrt();
    for &i in &covered {
        vals[i] = (vals[i] - mean) / sd;
    }
    Ok(())
}
