//! `ablate`: run the five-rung cumulative ladder (base, +ROI,
//! +reconstruction, +mean, +pretraining) against the validation subject
//! and write the comparison table.

use super::{load_standardized, prepare_out, require_validation_subject, resolve_model_cfg};
use crate::config::{write_echo, RunConfig};
use braindecode::eval::{ablation_table, run_ablation};
use braindecode::Result;

pub fn run(cfg: &RunConfig) -> Result<()> {
    let dataset = load_standardized(cfg)?;
    let validation_subject = require_validation_subject(cfg)?;
    let model_cfg = resolve_model_cfg(cfg, &dataset);

    let outcome = run_ablation(
        &dataset,
        validation_subject,
        &model_cfg,
        &cfg.train,
        &cfg.weights,
    )?;
    for warning in &outcome.warnings {
        eprintln!("warning: {warning}");
    }

    let table = ablation_table(&outcome);
    let out = prepare_out(cfg)?;
    std::fs::write(out.join("ablation.tsv"), &table)?;
    write_echo(&out, cfg)?;
    print!("{table}");
    Ok(())
}
