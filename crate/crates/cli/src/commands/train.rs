//! `train`: one rotation (`--subject`) or the full leave-one-out. Each
//! rotation saves a checkpoint and its training log; a summary table
//! scores every rotation's checkpoint on its held-out subject.

use super::{
    load_standardized, prepare_out, require_validation_subject, resolve_model_cfg, variant_configs,
};
use crate::config::{write_echo, RunConfig};
use braindecode::data::{Dataset, Scan};
use braindecode::eval::{
    decode_regression_vectors, pairwise_accuracy, render_table, topk_accuracy, write_lines,
};
use braindecode::model::save_checkpoint;
use braindecode::train::{run_leave_one_out, run_one_rotation, RotationOutcome};
use braindecode::{Result, Tensor};
use std::path::Path;

pub fn run(cfg: &RunConfig) -> Result<()> {
    let dataset = load_standardized(cfg)?;
    let validation_subject = require_validation_subject(cfg)?;
    let model_cfg = resolve_model_cfg(cfg, &dataset);
    let (model_cfg, train_cfg, weights) = variant_configs(cfg, model_cfg)?;
    let out = prepare_out(cfg)?;

    let outcomes = match &cfg.run.subject {
        Some(test_subject) => vec![run_one_rotation(
            &dataset,
            validation_subject,
            test_subject,
            &model_cfg,
            &train_cfg,
            &weights,
        )?],
        None => run_leave_one_out(
            &dataset,
            validation_subject,
            &model_cfg,
            &train_cfg,
            &weights,
            cfg.run.parallel_rotations,
        )?,
    };

    let embeddings = dataset.embeddings.matrix_for(&dataset.vocabulary)?;
    let mut columns = Vec::new();
    if model_cfg.heads.regression {
        columns.push("pairwise");
    }
    if model_cfg.heads.classification {
        columns.push("top1");
        columns.push("top5");
    }

    let mut rows = Vec::new();
    for outcome in &outcomes {
        save_and_log(&out, outcome)?;
        let metrics = test_metrics(&dataset, outcome, &embeddings, &model_cfg.heads)?;
        println!(
            "rotation {}: {} (best epoch {}, {} epochs trained)",
            outcome.test_subject,
            columns
                .iter()
                .zip(&metrics)
                .map(|(name, value)| format!("{name}={value:.4}"))
                .collect::<Vec<_>>()
                .join(" "),
            outcome.outcome.best_epoch,
            outcome.outcome.log.entries.len(),
        );
        for warning in outcome
            .pretrain_log
            .warnings
            .iter()
            .chain(&outcome.outcome.log.warnings)
        {
            eprintln!("warning: {}: {warning}", outcome.test_subject);
        }
        rows.push((outcome.test_subject.clone(), metrics));
    }

    let table = render_table(&columns, &rows);
    std::fs::write(out.join("summary.tsv"), &table)?;
    write_echo(&out, cfg)?;
    println!("wrote {} rotation(s) -> {}", outcomes.len(), out.display());
    Ok(())
}

fn save_and_log(out: &Path, outcome: &RotationOutcome) -> Result<()> {
    save_checkpoint(
        &out.join(format!("checkpoint_{}.txt", outcome.test_subject)),
        &outcome.outcome.model,
    )?;
    let mut lines = outcome.pretrain_log.lines();
    lines.extend(outcome.outcome.log.lines());
    write_lines(
        &out.join(format!("train_log_{}.tsv", outcome.test_subject)),
        &lines,
    )
}

/// Score a rotation's best checkpoint on its held-out subject.
fn test_metrics(
    dataset: &Dataset,
    outcome: &RotationOutcome,
    embeddings: &Tensor,
    heads: &braindecode::model::HeadFlags,
) -> Result<Vec<f64>> {
    let scans: Vec<&Scan> = dataset.word_scans_for(&outcome.test_subject).collect();
    let mut metrics = Vec::new();
    if heads.regression {
        let decoded = decode_regression_vectors(&outcome.outcome.model, &scans)?;
        let labels: Vec<usize> = scans
            .iter()
            .map(|s| s.word_index.expect("word scans carry labels"))
            .collect();
        let paradigms: Vec<Option<u8>> = scans.iter().map(|s| s.paradigm).collect();
        let pairwise = pairwise_accuracy(&decoded, &labels, &paradigms, embeddings, false)?;
        metrics.push(pairwise.accuracy);
    }
    if heads.classification {
        metrics.push(topk_accuracy(&outcome.outcome.model, &scans, 1)?.accuracy);
        let k5 = 5.min(dataset.vocabulary.len());
        metrics.push(topk_accuracy(&outcome.outcome.model, &scans, k5)?.accuracy);
    }
    Ok(metrics)
}
