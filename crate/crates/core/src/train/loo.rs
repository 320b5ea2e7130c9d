//! Leave-one-subject-out driver: one full pretrain + supervised run per
//! test rotation, each from a fresh seed-derived initialization.

use crate::data::{leave_one_out_splits, Dataset, Scan};
use crate::error::{Error, Result};
use crate::losses::LossWeights;
use crate::model::{build_model, ModelConfig};
use crate::train::{pretrain, train_supervised, SupervisedData, TrainConfig, TrainLog, TrainOutcome};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One completed rotation: who was held out, who trained, and the run's
/// artifacts. The test subject's scans never reach a parameter update or
/// a batchnorm statistic — they are not in `train_subjects`.
#[derive(Debug)]
pub struct RotationOutcome {
    pub test_subject: String,
    pub train_subjects: Vec<String>,
    /// The rotation's derived seed (config seed XOR rotation index).
    pub seed: u64,
    pub pretrain_log: TrainLog,
    pub outcome: TrainOutcome,
}

fn run_rotation(
    dataset: &Dataset,
    validation_subject: &str,
    test_subject: &str,
    train_subjects: &[String],
    embeddings: &crate::tensor::Tensor,
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
    weights: &LossWeights,
    seed: u64,
) -> Result<RotationOutcome> {
    if train_subjects.iter().any(|s| s == test_subject) {
        return Err(Error::Contract(format!(
            "rotation for {test_subject} lists the test subject among its training subjects"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = build_model(model_cfg, &dataset.atlas, &mut rng)?;

    let sentence_scans: Vec<&Scan> = train_subjects
        .iter()
        .flat_map(|s| dataset.sentence_scans_for(s).collect::<Vec<_>>())
        .collect();
    // pretrain() is a fast no-op when pretrain_epochs is 0 and errors
    // when pretraining is requested without the autoencoder.
    let pretrain_log = pretrain(&mut model, &sentence_scans, cfg, &mut rng)?;

    let train: Vec<&Scan> = train_subjects
        .iter()
        .flat_map(|s| dataset.word_scans_for(s).collect::<Vec<_>>())
        .collect();
    let validation: Vec<&Scan> = dataset.word_scans_for(validation_subject).collect();
    let data = SupervisedData {
        train,
        validation,
        embeddings,
        vocabulary: &dataset.vocabulary,
    };
    let outcome = train_supervised(model, &data, cfg, weights, &mut rng)?;
    Ok(RotationOutcome {
        test_subject: test_subject.to_string(),
        train_subjects: train_subjects.to_vec(),
        seed,
        pretrain_log,
        outcome,
    })
}

/// Train the single rotation that holds out `test_subject`. The rotation
/// index and derived seed come from the same split plan as
/// [`run_leave_one_out`], so the result is bitwise identical to that
/// rotation inside a full leave-one-out run.
pub fn run_one_rotation(
    dataset: &Dataset,
    validation_subject: &str,
    test_subject: &str,
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
    weights: &LossWeights,
) -> Result<RotationOutcome> {
    cfg.validate()?;
    model_cfg.validate()?;
    weights.validate()?;
    let plan = leave_one_out_splits(dataset, validation_subject)?;
    let embeddings = dataset.embeddings.matrix_for(&dataset.vocabulary)?;
    let (index, rotation) = plan
        .rotations
        .iter()
        .enumerate()
        .find(|(_, r)| r.test_subject == test_subject)
        .ok_or_else(|| {
            Error::Lookup(format!(
                "no rotation holds out '{test_subject}' (the validation subject never rotates out)"
            ))
        })?;
    run_rotation(
        dataset,
        &plan.validation_subject,
        &rotation.test_subject,
        &rotation.train_subjects,
        &embeddings,
        model_cfg,
        cfg,
        weights,
        cfg.seed ^ index as u64,
    )
}

/// Train one model per held-out subject. Every rotation trains on all
/// other subjects (the validation subject included, whose word scans also
/// drive early stopping) and never sees the test subject. Rotation r uses
/// seed `cfg.seed XOR r`, so each starts from a fresh deterministic
/// initialization; results are bitwise independent of `threads`.
pub fn run_leave_one_out(
    dataset: &Dataset,
    validation_subject: &str,
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
    weights: &LossWeights,
    threads: usize,
) -> Result<Vec<RotationOutcome>> {
    cfg.validate()?;
    model_cfg.validate()?;
    weights.validate()?;
    let plan = leave_one_out_splits(dataset, validation_subject)?;
    let embeddings = dataset.embeddings.matrix_for(&dataset.vocabulary)?;

    let jobs: Vec<(usize, &crate::data::Rotation)> =
        plan.rotations.iter().enumerate().collect();
    let worker = |(index, rotation): &(usize, &crate::data::Rotation)| {
        run_rotation(
            dataset,
            &plan.validation_subject,
            &rotation.test_subject,
            &rotation.train_subjects,
            &embeddings,
            model_cfg,
            cfg,
            weights,
            cfg.seed ^ *index as u64,
        )
    };

    let mut results: Vec<Option<Result<RotationOutcome>>> = Vec::new();
    results.resize_with(jobs.len(), || None);
    let workers = threads.max(1).min(jobs.len().max(1));
    if workers <= 1 {
        for job in &jobs {
            results[job.0] = Some(worker(job));
        }
    } else {
        // Static round-robin partition: worker w takes jobs w, w+T, ...
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for w in 0..workers {
                let jobs = &jobs;
                let worker = &worker;
                handles.push(scope.spawn(move || {
                    jobs.iter()
                        .skip(w)
                        .step_by(workers)
                        .map(|job| (job.0, worker(job)))
                        .collect::<Vec<_>>()
                }));
            }
            for handle in handles {
                for (index, result) in handle.join().expect("rotation worker panicked") {
                    results[index] = Some(result);
                }
            }
        });
    }

    // Propagate the lowest-index error for determinism.
    let mut outcomes = Vec::with_capacity(results.len());
    for slot in results {
        match slot.expect("every rotation must have been scheduled") {
            Ok(outcome) => outcomes.push(outcome),
            Err(e) => return Err(e),
        }
    }
    Ok(outcomes)
}
