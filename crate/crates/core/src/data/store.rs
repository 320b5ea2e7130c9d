//! Binary scan store: `scans.bin` + `manifest.tsv`.
//!
//! `scans.bin` is nothing but little-endian IEEE-754 float32 values, each
//! scan's voxels stored contiguously. `manifest.tsv` has one tab-separated
//! record per scan:
//!
//! ```text
//! subject_id <TAB> word-or-dash <TAB> paradigm-or-dash <TAB> offset <TAB> length
//! ```
//!
//! `offset` and `length` count float32 elements, not bytes. Word scans
//! store the word string (the vocabulary maps it back to an index);
//! sentence scans store `-` for both word and paradigm. The round-trip is
//! lossless at 32-bit precision.

use crate::error::{Error, Result};
use crate::tensor::Tensor;
use std::path::Path;

use super::scan::Scan;
use super::vocab::Vocabulary;

pub fn save_scans(
    bin_path: &Path,
    manifest_path: &Path,
    scans: &[Scan],
    vocab: &Vocabulary,
) -> Result<()> {
    let mut blob: Vec<u8> = Vec::new();
    let mut manifest = String::new();
    let mut offset: usize = 0;

    for scan in scans {
        let word = match scan.word_index {
            Some(w) => vocab.word(w)?.to_string(),
            None => "-".to_string(),
        };
        let paradigm = match scan.paradigm {
            Some(p) => p.to_string(),
            None => "-".to_string(),
        };
        let len = scan.voxels.len();
        manifest.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            scan.subject_id, word, paradigm, offset, len
        ));
        for &v in scan.voxels.values() {
            blob.extend_from_slice(&(v as f32).to_le_bytes());
        }
        offset += len;
    }

    std::fs::write(bin_path, blob)?;
    std::fs::write(manifest_path, manifest)?;
    Ok(())
}

pub fn load_scans(
    bin_path: &Path,
    manifest_path: &Path,
    vocab: &Vocabulary,
) -> Result<Vec<Scan>> {
    let blob = std::fs::read(bin_path)?;
    if blob.len() % 4 != 0 {
        return Err(Error::Corrupt(format!(
            "{}: length {} is not a multiple of 4",
            bin_path.display(),
            blob.len()
        )));
    }
    let n_floats = blob.len() / 4;
    let manifest = std::fs::read_to_string(manifest_path)?;
    let origin = manifest_path.display().to_string();

    let mut scans = Vec::new();
    for (lineno, line) in manifest.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(Error::Format {
                path: origin.clone(),
                msg: format!("line {}: expected 5 fields, got {}", lineno + 1, fields.len()),
            });
        }
        let subject_id = fields[0].to_string();
        let word_index = match fields[1] {
            "-" => None,
            w => Some(vocab.index_of(w).map_err(|_| {
                Error::Corrupt(format!(
                    "{}: line {} references word '{}' not in vocabulary",
                    origin,
                    lineno + 1,
                    w
                ))
            })?),
        };
        let paradigm = match fields[2] {
            "-" => None,
            p => Some(p.parse::<u8>().map_err(|_| Error::Format {
                path: origin.clone(),
                msg: format!("line {}: bad paradigm '{}'", lineno + 1, p),
            })?),
        };
        let offset: usize = fields[3].parse().map_err(|_| Error::Format {
            path: origin.clone(),
            msg: format!("line {}: bad offset '{}'", lineno + 1, fields[3]),
        })?;
        let length: usize = fields[4].parse().map_err(|_| Error::Format {
            path: origin.clone(),
            msg: format!("line {}: bad length '{}'", lineno + 1, fields[4]),
        })?;

        if offset + length > n_floats {
            return Err(Error::Corrupt(format!(
                "{}: line {} wants elements {}..{} but the blob has {}",
                origin,
                lineno + 1,
                offset,
                offset + length,
                n_floats
            )));
        }

        let mut values = Vec::with_capacity(length);
        for i in 0..length {
            let at = (offset + i) * 4;
            let bytes: [u8; 4] = blob[at..at + 4].try_into().unwrap();
            values.push(f32::from_le_bytes(bytes) as f64);
        }
        scans.push(Scan {
            voxels: Tensor::vector(values),
            subject_id,
            word_index,
            paradigm,
        });
    }
    Ok(scans)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> Vocabulary {
        Vocabulary::new(vec!["apple".into(), "bear".into()]).unwrap()
    }

    fn sample_scans() -> Vec<Scan> {
        vec![
            Scan::word_scan(Tensor::vector(vec![1.5, -2.25, 0.0]), "S01", 0, 1),
            Scan::word_scan(Tensor::vector(vec![0.5, 0.5, 0.5]), "S01", 1, 0),
            Scan::sentence_scan(Tensor::vector(vec![3.0, -1.0, 7.5]), "S02"),
        ]
    }

    #[test]
    fn round_trip_preserves_labels_and_f32_voxels() {
        let dir = tempfile::tempdir().unwrap();
        let bin = dir.path().join("scans.bin");
        let man = dir.path().join("manifest.tsv");
        let scans = sample_scans();
        save_scans(&bin, &man, &scans, &vocab()).unwrap();
        let back = load_scans(&bin, &man, &vocab()).unwrap();
        assert_eq!(scans, back); // sample values are all exactly representable in f32
    }

    #[test]
    fn empty_store_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let bin = dir.path().join("scans.bin");
        let man = dir.path().join("manifest.tsv");
        save_scans(&bin, &man, &[], &vocab()).unwrap();
        assert_eq!(std::fs::metadata(&bin).unwrap().len(), 0);
        assert_eq!(load_scans(&bin, &man, &vocab()).unwrap(), vec![]);
    }

    #[test]
    fn truncated_blob_is_a_corruption_error() {
        let dir = tempfile::tempdir().unwrap();
        let bin = dir.path().join("scans.bin");
        let man = dir.path().join("manifest.tsv");
        save_scans(&bin, &man, &sample_scans(), &vocab()).unwrap();
        let blob = std::fs::read(&bin).unwrap();
        std::fs::write(&bin, &blob[..blob.len() - 4]).unwrap();
        let err = load_scans(&bin, &man, &vocab()).unwrap_err();
        assert!(matches!(err, Error::Corrupt(_)), "{err}");
    }

    #[test]
    fn misaligned_blob_is_a_corruption_error() {
        let dir = tempfile::tempdir().unwrap();
        let bin = dir.path().join("scans.bin");
        let man = dir.path().join("manifest.tsv");
        save_scans(&bin, &man, &sample_scans(), &vocab()).unwrap();
        let mut blob = std::fs::read(&bin).unwrap();
        blob.pop();
        std::fs::write(&bin, &blob).unwrap();
        let err = load_scans(&bin, &man, &vocab()).unwrap_err();
        assert!(matches!(err, Error::Corrupt(_)));
    }

    #[test]
    fn unknown_manifest_word_is_a_corruption_error() {
        let dir = tempfile::tempdir().unwrap();
        let bin = dir.path().join("scans.bin");
        let man = dir.path().join("manifest.tsv");
        save_scans(&bin, &man, &sample_scans(), &vocab()).unwrap();
        let text = std::fs::read_to_string(&man).unwrap().replace("apple", "orange");
        std::fs::write(&man, text).unwrap();
        let err = load_scans(&bin, &man, &vocab()).unwrap_err();
        assert!(err.to_string().contains("'orange'"));
    }

    #[test]
    fn values_are_quantized_to_f32() {
        let dir = tempfile::tempdir().unwrap();
        let bin = dir.path().join("scans.bin");
        let man = dir.path().join("manifest.tsv");
        let precise = 0.123456789012345_f64;
        let scans = vec![Scan::sentence_scan(Tensor::vector(vec![precise]), "S01")];
        save_scans(&bin, &man, &scans, &vocab()).unwrap();
        let back = load_scans(&bin, &man, &vocab()).unwrap();
        assert_eq!(back[0].voxels.values()[0], precise as f32 as f64);
        assert_ne!(back[0].voxels.values()[0], precise);
    }
}
