//! Model checkpoints: one binary file holding a text header (config echo,
//! ROI sizes, parameter-block manifest) followed by little-endian float64
//! blocks in manifest order.
//!
//! ```text
//! braindecode-checkpoint v1
//! config roi_divisor 20
//! ...
//! roi_sizes 95 95 ...
//! block hidden1.bn.gain 1 32
//! block hidden1.dense.weight 2 32 80
//! ...
//! end-header
//! <raw f64 little-endian data>
//! ```
//!
//! Loading requires the same atlas the model was built on and rejects any
//! shape drift between the stored manifest and the rebuilt model.

use crate::data::atlas::Atlas;
use crate::error::{Error, Result};
use crate::nn::Parameterized;
use crate::tensor::Tensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;

use super::decoder::{build_model, BrainDecoder};
use super::{HeadFlags, ModelConfig};

const MAGIC: &str = "braindecode-checkpoint v1";

pub fn save_checkpoint(path: &Path, model: &BrainDecoder) -> Result<()> {
    let cfg = &model.config;
    let mut header = String::new();
    header.push_str(MAGIC);
    header.push('\n');
    header.push_str(&format!("config roi_divisor {}\n", cfg.roi_divisor));
    header.push_str(&format!("config hidden1_size {}\n", cfg.hidden1_size));
    header.push_str(&format!("config latent_size {}\n", cfg.latent_size));
    header.push_str(&format!("config dropout_rate {}\n", cfg.dropout_rate));
    header.push_str(&format!("config leaky_alpha {}\n", cfg.leaky_alpha));
    header.push_str(&format!("config embedding_dim {}\n", cfg.embedding_dim));
    header.push_str(&format!("config vocab_size {}\n", cfg.vocab_size));
    header.push_str(&format!("config regression {}\n", cfg.heads.regression));
    header.push_str(&format!("config classification {}\n", cfg.heads.classification));
    header.push_str(&format!("config autoencoder {}\n", cfg.autoencoder));
    header.push_str(&format!("config use_roi_layer {}\n", cfg.use_roi_layer));
    header.push_str("roi_sizes");
    for s in &model.roi_sizes {
        header.push_str(&format!(" {s}"));
    }
    header.push('\n');

    let block_names = checkpoint_blocks(model);
    let mut data: Vec<u8> = Vec::new();
    for name in &block_names {
        let tensor = block(model, name).ok_or_else(|| {
            Error::Contract(format!("checkpoint block '{name}' not found on model"))
        })?;
        header.push_str(&format!("block {} {}", name, tensor.rank()));
        for d in tensor.shape() {
            header.push_str(&format!(" {d}"));
        }
        header.push('\n');
        for v in tensor.values() {
            data.extend_from_slice(&v.to_le_bytes());
        }
    }
    header.push_str("end-header\n");

    let mut bytes = header.into_bytes();
    bytes.extend_from_slice(&data);
    std::fs::write(path, bytes)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path, atlas: &Atlas) -> Result<BrainDecoder> {
    let bytes = std::fs::read(path)?;
    let origin = path.display().to_string();
    let marker = b"end-header\n";
    let split = find(&bytes, marker).ok_or_else(|| Error::Format {
        path: origin.clone(),
        msg: "missing end-header marker".to_string(),
    })?;
    let header = std::str::from_utf8(&bytes[..split]).map_err(|_| Error::Format {
        path: origin.clone(),
        msg: "header is not UTF-8".to_string(),
    })?;
    let data = &bytes[split + marker.len()..];

    let mut lines = header.lines();
    if lines.next() != Some(MAGIC) {
        return Err(Error::Format {
            path: origin.clone(),
            msg: format!("bad magic line, expected '{MAGIC}'"),
        });
    }

    let mut config_kv = std::collections::BTreeMap::new();
    let mut roi_sizes: Option<Vec<usize>> = None;
    let mut manifest: Vec<(String, Vec<usize>)> = Vec::new();
    for line in lines {
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("config") => {
                let k = parts.next().unwrap_or_default().to_string();
                let v = parts.next().unwrap_or_default().to_string();
                config_kv.insert(k, v);
            }
            Some("roi_sizes") => {
                roi_sizes = Some(
                    parts
                        .map(|t| {
                            t.parse().map_err(|_| Error::Format {
                                path: origin.clone(),
                                msg: format!("bad roi size '{t}'"),
                            })
                        })
                        .collect::<Result<_>>()?,
                );
            }
            Some("block") => {
                let name = parts.next().unwrap_or_default().to_string();
                let rank: usize = parts
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| Error::Format {
                        path: origin.clone(),
                        msg: format!("bad block line for '{name}'"),
                    })?;
                let dims: Vec<usize> = parts
                    .map(|t| {
                        t.parse().map_err(|_| Error::Format {
                            path: origin.clone(),
                            msg: format!("bad dimension '{t}' in block '{name}'"),
                        })
                    })
                    .collect::<Result<_>>()?;
                if dims.len() != rank {
                    return Err(Error::Format {
                        path: origin.clone(),
                        msg: format!("block '{name}' declares rank {rank} with {} dims", dims.len()),
                    });
                }
                manifest.push((name, dims));
            }
            Some(other) => {
                return Err(Error::Format {
                    path: origin.clone(),
                    msg: format!("unknown header key '{other}'"),
                });
            }
            None => {}
        }
    }

    let cfg = config_from(&config_kv, &origin)?;
    let stored_sizes = roi_sizes.ok_or_else(|| Error::Format {
        path: origin.clone(),
        msg: "missing roi_sizes line".to_string(),
    })?;
    let atlas_sizes: Vec<usize> = atlas.rois.iter().map(|r| r.voxel_indices.len()).collect();
    if stored_sizes != atlas_sizes {
        return Err(Error::Format {
            path: origin.clone(),
            msg: format!(
                "checkpoint was built on a different atlas: roi sizes {:?} vs {:?}",
                stored_sizes, atlas_sizes
            ),
        });
    }

    // Parameter values are about to be overwritten; the init seed is moot.
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut model = build_model(&cfg, atlas, &mut rng)?;

    let expected = checkpoint_blocks(&model);
    let listed: Vec<&String> = manifest.iter().map(|(n, _)| n).collect();
    if listed != expected.iter().collect::<Vec<_>>() {
        return Err(Error::Format {
            path: origin.clone(),
            msg: "checkpoint block list does not match the rebuilt model".to_string(),
        });
    }

    let mut at = 0usize;
    for (name, dims) in &manifest {
        let tensor = block_mut(&mut model, name).unwrap();
        if tensor.shape() != dims.as_slice() {
            return Err(Error::Format {
                path: origin.clone(),
                msg: format!(
                    "shape drift in block '{}': stored {:?}, model wants {:?}",
                    name,
                    dims,
                    tensor.shape()
                ),
            });
        }
        let n = tensor.len();
        let need = n * 8;
        if at + need > data.len() {
            return Err(Error::Corrupt(format!(
                "{origin}: data section ends inside block '{name}'"
            )));
        }
        for i in 0..n {
            let b: [u8; 8] = data[at + i * 8..at + (i + 1) * 8].try_into().unwrap();
            tensor.values_mut()[i] = f64::from_le_bytes(b);
        }
        at += need;
    }
    if at != data.len() {
        return Err(Error::Corrupt(format!(
            "{origin}: {} trailing bytes after the last block",
            data.len() - at
        )));
    }
    Ok(model)
}

/// Canonical block order: trainable parameters, then batchnorm state.
fn checkpoint_blocks(model: &BrainDecoder) -> Vec<String> {
    let mut names = model.param_names();
    names.extend(model.state_names());
    names
}

fn block<'a>(model: &'a BrainDecoder, name: &str) -> Option<&'a Tensor> {
    model.param(name).or_else(|| model.state(name))
}

fn block_mut<'a>(model: &'a mut BrainDecoder, name: &str) -> Option<&'a mut Tensor> {
    if model.param(name).is_some() {
        model.param_mut(name)
    } else {
        model.state_mut(name)
    }
}

fn config_from(
    kv: &std::collections::BTreeMap<String, String>,
    origin: &str,
) -> Result<ModelConfig> {
    fn get<'a>(
        kv: &'a std::collections::BTreeMap<String, String>,
        key: &str,
        origin: &str,
    ) -> Result<&'a str> {
        kv.get(key).map(String::as_str).ok_or_else(|| Error::Format {
            path: origin.to_string(),
            msg: format!("missing config key '{key}'"),
        })
    }
    fn parse<T: std::str::FromStr>(s: &str, key: &str, origin: &str) -> Result<T> {
        s.parse().map_err(|_| Error::Format {
            path: origin.to_string(),
            msg: format!("bad value '{s}' for config key '{key}'"),
        })
    }
    Ok(ModelConfig {
        roi_divisor: parse(get(kv, "roi_divisor", origin)?, "roi_divisor", origin)?,
        hidden1_size: parse(get(kv, "hidden1_size", origin)?, "hidden1_size", origin)?,
        latent_size: parse(get(kv, "latent_size", origin)?, "latent_size", origin)?,
        dropout_rate: parse(get(kv, "dropout_rate", origin)?, "dropout_rate", origin)?,
        leaky_alpha: parse(get(kv, "leaky_alpha", origin)?, "leaky_alpha", origin)?,
        embedding_dim: parse(get(kv, "embedding_dim", origin)?, "embedding_dim", origin)?,
        vocab_size: parse(get(kv, "vocab_size", origin)?, "vocab_size", origin)?,
        heads: HeadFlags {
            regression: parse(get(kv, "regression", origin)?, "regression", origin)?,
            classification: parse(
                get(kv, "classification", origin)?,
                "classification",
                origin,
            )?,
        },
        autoencoder: parse(get(kv, "autoencoder", origin)?, "autoencoder", origin)?,
        use_roi_layer: parse(get(kv, "use_roi_layer", origin)?, "use_roi_layer", origin)?,
    })
}

fn find(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack
        .windows(needle.len())
        .position(|w| w == needle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth::{generate_synthetic_dataset, SynthConfig};
    use crate::nn::Mode;

    fn setup() -> (crate::data::dataset::Dataset, BrainDecoder) {
        let ds = generate_synthetic_dataset(&SynthConfig {
            n_subjects: 2,
            n_words: 4,
            n_paradigms: 1,
            total_voxels: 100,
            n_rois: 4,
            concept_dim: 5,
            seed: 3,
            ..SynthConfig::default()
        })
        .unwrap();
        let cfg = ModelConfig {
            hidden1_size: 16,
            latent_size: 6,
            embedding_dim: 5,
            vocab_size: 4,
            heads: HeadFlags {
                regression: true,
                classification: true,
            },
            ..ModelConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let model = build_model(&cfg, &ds.atlas, &mut rng).unwrap();
        (ds, model)
    }

    #[test]
    fn round_trip_is_bitwise_and_behavior_preserving() {
        let (ds, mut model) = setup();
        // make running stats nontrivial so state blocks are exercised
        model.hidden1.bn.running_mean.values_mut()[0] = 0.25;
        model.latent.bn.running_var.values_mut()[1] = 2.5;

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save_checkpoint(&path, &model).unwrap();
        let loaded = load_checkpoint(&path, &ds.atlas).unwrap();

        for name in model.param_names() {
            assert_eq!(
                model.param(&name).unwrap().values(),
                loaded.param(&name).unwrap().values(),
                "param {name}"
            );
        }
        for name in model.state_names() {
            assert_eq!(
                model.state(&name).unwrap().values(),
                loaded.state(&name).unwrap().values(),
                "state {name}"
            );
        }

        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let scan = &ds.word_scans[0];
        let a = model.forward(&[scan], Mode::Infer, &mut rng).unwrap();
        let b = loaded.forward(&[scan], Mode::Infer, &mut rng).unwrap();
        assert_eq!(
            a.activations.regression_out.unwrap().values(),
            b.activations.regression_out.unwrap().values()
        );
    }

    #[test]
    fn different_atlas_is_rejected() {
        let (ds, model) = setup();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save_checkpoint(&path, &model).unwrap();

        let other = generate_synthetic_dataset(&SynthConfig {
            n_subjects: 2,
            n_words: 4,
            n_paradigms: 1,
            total_voxels: 120,
            n_rois: 4,
            concept_dim: 5,
            seed: 3,
            ..SynthConfig::default()
        })
        .unwrap();
        assert_ne!(other.atlas, ds.atlas);
        let err = load_checkpoint(&path, &other.atlas).unwrap_err();
        assert!(err.to_string().contains("different atlas"), "{err}");
    }

    #[test]
    fn truncated_data_is_a_corruption_error() {
        let (ds, model) = setup();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save_checkpoint(&path, &model).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 16]).unwrap();
        let err = load_checkpoint(&path, &ds.atlas).unwrap_err();
        assert!(matches!(err, Error::Corrupt(_)), "{err}");
    }

    #[test]
    fn garbage_file_is_a_format_error() {
        let (ds, _) = setup();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        std::fs::write(&path, b"not a checkpoint").unwrap();
        let err = load_checkpoint(&path, &ds.atlas).unwrap_err();
        assert!(matches!(err, Error::Format { .. }));
    }
}
