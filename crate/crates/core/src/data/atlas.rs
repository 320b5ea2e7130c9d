//! Brain atlas: an ordered list of named ROIs, each owning a disjoint set
//! of voxel indices. The list order is the canonical ROI order everywhere
//! else in the pipeline (model input layout, checkpoints, reports).
//!
//! File format (structured text, `#` comments and blank lines ignored):
//!
//! ```text
//! total_voxels 2000
//! roi roi_000 0 1 2 3
//! roi roi_001 4 5 6
//! ```
//!
//! `total_voxels` must appear before the first `roi` line. Voxels not
//! listed under any ROI are legal; they are stored with scans but never
//! consumed by the model.

use crate::error::{Error, Result};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Roi {
    pub name: String,
    pub voxel_indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atlas {
    pub rois: Vec<Roi>,
    pub total_voxels: usize,
}

impl Atlas {
    /// Validate disjointness, bounds, and non-emptiness. `origin` names the
    /// source in error messages (a path or "synthetic").
    pub fn validate(&self, origin: &str) -> Result<()> {
        let mut owner: Vec<Option<usize>> = vec![None; self.total_voxels];
        for (r, roi) in self.rois.iter().enumerate() {
            if roi.voxel_indices.is_empty() {
                return Err(Error::Format {
                    path: origin.to_string(),
                    msg: format!("ROI '{}' has no voxels", roi.name),
                });
            }
            for &v in &roi.voxel_indices {
                if v >= self.total_voxels {
                    return Err(Error::Format {
                        path: origin.to_string(),
                        msg: format!(
                            "ROI '{}' lists voxel {} but total_voxels is {}",
                            roi.name, v, self.total_voxels
                        ),
                    });
                }
                if let Some(prev) = owner[v] {
                    return Err(Error::Format {
                        path: origin.to_string(),
                        msg: format!(
                            "voxel {} claimed by both '{}' and '{}'",
                            v, self.rois[prev].name, roi.name
                        ),
                    });
                }
                owner[v] = Some(r);
            }
        }
        Ok(())
    }

    pub fn n_rois(&self) -> usize {
        self.rois.len()
    }

    /// All ROI-covered voxel indices, concatenated in canonical ROI order.
    /// This is the exact gather order the model input layer uses.
    pub fn covered_indices(&self) -> Vec<usize> {
        self.rois
            .iter()
            .flat_map(|r| r.voxel_indices.iter().copied())
            .collect()
    }

    pub fn covered_count(&self) -> usize {
        self.rois.iter().map(|r| r.voxel_indices.len()).sum()
    }

    pub fn min_roi_size(&self) -> usize {
        self.rois
            .iter()
            .map(|r| r.voxel_indices.len())
            .min()
            .unwrap_or(0)
    }
}

pub fn load_atlas(path: &Path) -> Result<Atlas> {
    let text = std::fs::read_to_string(path)?;
    parse_atlas(&text, &path.display().to_string())
}

pub fn parse_atlas(text: &str, origin: &str) -> Result<Atlas> {
    let mut total_voxels: Option<usize> = None;
    let mut rois = Vec::new();

    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let key = parts.next().unwrap();
        match key {
            "total_voxels" => {
                let v = parts
                    .next()
                    .ok_or_else(|| fmt_err(origin, lineno, "total_voxels needs a value"))?;
                total_voxels = Some(v.parse().map_err(|_| {
                    fmt_err(origin, lineno, &format!("bad total_voxels '{v}'"))
                })?);
            }
            "roi" => {
                if total_voxels.is_none() {
                    return Err(fmt_err(origin, lineno, "roi line before total_voxels"));
                }
                let name = parts
                    .next()
                    .ok_or_else(|| fmt_err(origin, lineno, "roi line needs a name"))?
                    .to_string();
                let mut voxel_indices = Vec::new();
                for tok in parts {
                    voxel_indices.push(tok.parse().map_err(|_| {
                        fmt_err(origin, lineno, &format!("bad voxel index '{tok}'"))
                    })?);
                }
                rois.push(Roi { name, voxel_indices });
            }
            other => {
                return Err(fmt_err(origin, lineno, &format!("unknown key '{other}'")));
            }
        }
    }

    let total_voxels =
        total_voxels.ok_or_else(|| fmt_err(origin, 0, "missing total_voxels line"))?;
    let atlas = Atlas { rois, total_voxels };
    atlas.validate(origin)?;
    Ok(atlas)
}

pub fn save_atlas(path: &Path, atlas: &Atlas) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("total_voxels {}\n", atlas.total_voxels));
    for roi in &atlas.rois {
        out.push_str("roi ");
        out.push_str(&roi.name);
        for v in &roi.voxel_indices {
            out.push(' ');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn fmt_err(origin: &str, lineno: usize, msg: &str) -> Error {
    Error::Format {
        path: origin.to_string(),
        msg: format!("line {}: {}", lineno + 1, msg),
    }
}
