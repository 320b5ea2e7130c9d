//! A complete dataset: atlas + vocabulary + embeddings + scans, with
//! directory-level save/load.
//!
//! Directory layout:
//!
//! ```text
//! atlas.txt        structured text (see data::atlas)
//! vocab.txt        one word per line
//! embeddings.txt   word v1 ... vd per line
//! scans.bin        little-endian float32 voxel blocks
//! manifest.tsv     one record per scan (see data::store)
//! ```
//!
//! Loading does not standardize; standardization is an explicit pipeline
//! step (`standardize`) so the store stays a lossless round-trip.

use crate::error::{Error, Result};
use std::collections::BTreeSet;
use std::path::Path;

use super::atlas::{load_atlas, save_atlas, Atlas};
use super::embeddings::{load_embeddings, save_embeddings, EmbeddingTable};
use super::scan::{standardize_scan, Scan};
use super::store::{load_scans, save_scans};
use super::vocab::{load_vocabulary, save_vocabulary, Vocabulary};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub atlas: Atlas,
    pub vocabulary: Vocabulary,
    pub embeddings: EmbeddingTable,
    pub word_scans: Vec<Scan>,
    pub sentence_scans: Vec<Scan>,
}

impl Dataset {
    pub fn validate(&self) -> Result<()> {
        self.atlas.validate("dataset")?;
        self.embeddings.check_covers(&self.vocabulary)?;

        let mut seen: BTreeSet<(String, usize, u8)> = BTreeSet::new();
        for scan in &self.word_scans {
            scan.validate(&self.atlas)?;
            let w = scan.word_index.ok_or_else(|| {
                Error::Data(format!("unlabeled scan in word_scans for '{}'", scan.subject_id))
            })?;
            let p = scan.paradigm.unwrap();
            if w >= self.vocabulary.len() {
                return Err(Error::Data(format!(
                    "scan references word index {} but vocabulary has {} words",
                    w,
                    self.vocabulary.len()
                )));
            }
            if p > 2 {
                return Err(Error::Data(format!("paradigm {p} outside {{0,1,2}}")));
            }
            if !seen.insert((scan.subject_id.clone(), w, p)) {
                return Err(Error::Data(format!(
                    "duplicate scan for subject '{}', word {}, paradigm {}",
                    scan.subject_id, w, p
                )));
            }
        }
        for scan in &self.sentence_scans {
            scan.validate(&self.atlas)?;
            if scan.word_index.is_some() || scan.paradigm.is_some() {
                return Err(Error::Data(format!(
                    "labeled scan in sentence_scans for '{}'",
                    scan.subject_id
                )));
            }
        }
        Ok(())
    }

    /// Sorted, de-duplicated subject ids over all scans.
    pub fn subjects(&self) -> Vec<String> {
        let mut ids: BTreeSet<String> = BTreeSet::new();
        for s in self.word_scans.iter().chain(&self.sentence_scans) {
            ids.insert(s.subject_id.clone());
        }
        ids.into_iter().collect()
    }

    pub fn word_scans_for<'a>(&'a self, subject: &'a str) -> impl Iterator<Item = &'a Scan> {
        self.word_scans.iter().filter(move |s| s.subject_id == subject)
    }

    pub fn sentence_scans_for<'a>(
        &'a self,
        subject: &'a str,
    ) -> impl Iterator<Item = &'a Scan> {
        self.sentence_scans
            .iter()
            .filter(move |s| s.subject_id == subject)
    }

    /// Standardize every scan over ROI-covered voxels, in place.
    pub fn standardize(&mut self) -> Result<()> {
        for scan in self.word_scans.iter_mut().chain(self.sentence_scans.iter_mut()) {
            standardize_scan(scan, &self.atlas)?;
        }
        Ok(())
    }
}

pub fn save_dataset(dir: &Path, dataset: &Dataset) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    save_atlas(&dir.join("atlas.txt"), &dataset.atlas)?;
    save_vocabulary(&dir.join("vocab.txt"), &dataset.vocabulary)?;
    save_embeddings(&dir.join("embeddings.txt"), &dataset.embeddings)?;
    let all: Vec<Scan> = dataset
        .word_scans
        .iter()
        .chain(&dataset.sentence_scans)
        .cloned()
        .collect();
    save_scans(
        &dir.join("scans.bin"),
        &dir.join("manifest.tsv"),
        &all,
        &dataset.vocabulary,
    )
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let atlas = load_atlas(&dir.join("atlas.txt"))?;
    let vocabulary = load_vocabulary(&dir.join("vocab.txt"))?;
    let embeddings = load_embeddings(&dir.join("embeddings.txt"), &vocabulary)?;
    let all = load_scans(&dir.join("scans.bin"), &dir.join("manifest.tsv"), &vocabulary)?;
    let (word_scans, sentence_scans): (Vec<Scan>, Vec<Scan>) =
        all.into_iter().partition(Scan::is_word_scan);
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
