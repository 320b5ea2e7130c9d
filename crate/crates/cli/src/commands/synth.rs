//! `synth`: generate a seeded synthetic dataset and write it, raw and
//! unstandardized, to the output directory.

use super::prepare_out;
use crate::config::{write_echo, RunConfig};
use braindecode::data::{generate_synthetic_dataset, save_dataset};
use braindecode::Result;

pub fn run(cfg: &RunConfig) -> Result<()> {
    let out = prepare_out(cfg)?;
    let dataset = generate_synthetic_dataset(&cfg.synth)?;
    save_dataset(&out, &dataset)?;
    write_echo(&out, cfg)?;
    println!(
        "wrote dataset: {} subjects x {} words x {} paradigms, {} voxels in {} ROIs, \
         {} word scans + {} sentence scans -> {}",
        cfg.synth.n_subjects,
        cfg.synth.n_words,
        cfg.synth.n_paradigms,
        cfg.synth.total_voxels,
        cfg.synth.n_rois,
        dataset.word_scans.len(),
        dataset.sentence_scans.len(),
        out.display()
    );
    Ok(())
}
