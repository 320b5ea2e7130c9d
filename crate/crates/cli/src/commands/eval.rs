//! `eval`: score a saved checkpoint on one subject's word scans —
//! pairwise 2AFC accuracy for the regression head, Top-K accuracy at
//! every requested cutoff for the classification head.

use super::{load_standardized, prepare_out};
use crate::config::{write_echo, RunConfig};
use braindecode::data::Scan;
use braindecode::eval::{
    decode_regression_vectors, metrics_lines, pairwise_accuracy, topk_accuracy, write_lines,
};
use braindecode::model::load_checkpoint;
use braindecode::{Error, Result};

pub fn run(cfg: &RunConfig) -> Result<()> {
    let checkpoint_path = cfg.paths.checkpoint.as_ref().ok_or_else(|| {
        Error::Config("eval needs a checkpoint (--checkpoint or paths.checkpoint)".to_string())
    })?;
    let subject = cfg.run.subject.as_deref().ok_or_else(|| {
        Error::Config("eval needs a subject to score (--subject or run.subject)".to_string())
    })?;

    let dataset = load_standardized(cfg)?;
    let model = load_checkpoint(checkpoint_path, &dataset.atlas)?;
    let scans: Vec<&Scan> = dataset.word_scans_for(subject).collect();
    if scans.is_empty() {
        return Err(Error::Lookup(format!(
            "subject '{subject}' has no word scans in {}",
            cfg.paths.data.display()
        )));
    }

    let mut metrics: Vec<(String, f64)> = Vec::new();
    if model.config.heads.regression {
        let decoded = decode_regression_vectors(&model, &scans)?;
        let labels: Vec<usize> = scans
            .iter()
            .map(|s| s.word_index.expect("word scans carry labels"))
            .collect();
        let paradigms: Vec<Option<u8>> = scans.iter().map(|s| s.paradigm).collect();
        let embeddings = dataset.embeddings.matrix_for(&dataset.vocabulary)?;
        let pairwise = pairwise_accuracy(&decoded, &labels, &paradigms, &embeddings, false)?;
        metrics.push(("pairwise".to_string(), pairwise.accuracy));
        if !pairwise.degenerate_scans.is_empty() {
            eprintln!(
                "warning: {} degenerate decoded vector(s) counted as losses",
                pairwise.degenerate_scans.len()
            );
        }
    }
    if model.config.heads.classification {
        for &k in &cfg.run.k {
            let result = topk_accuracy(&model, &scans, k)?;
            metrics.push((format!("top{k}"), result.accuracy));
        }
    }
    if metrics.is_empty() {
        return Err(Error::Config(
            "the checkpoint has neither head enabled; nothing to evaluate".to_string(),
        ));
    }

    let out = prepare_out(cfg)?;
    let lines = metrics_lines(&metrics);
    write_lines(&out.join("metrics.tsv"), &lines)?;
    write_echo(&out, cfg)?;
    println!("subject {subject}, {} scans:", scans.len());
    for line in &lines {
        println!("{line}");
    }
    Ok(())
}
