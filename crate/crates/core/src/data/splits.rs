//! Leave-one-out evaluation splits.
//!
//! One subject is reserved for validation (early stopping, never tested).
//! Every other subject takes one turn as the held-out test subject while
//! all remaining subjects — the validation subject included — form the
//! training set.

use crate::error::{Error, Result};

use super::dataset::Dataset;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rotation {
    pub test_subject: String,
    /// Every subject except the test subject (validation included).
    pub train_subjects: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub validation_subject: String,
    pub rotations: Vec<Rotation>,
}

pub fn leave_one_out_splits(dataset: &Dataset, validation_subject: &str) -> Result<SplitPlan> {
    let subjects = dataset.subjects();
    if !subjects.iter().any(|s| s == validation_subject) {
        return Err(Error::Lookup(format!(
            "validation subject '{validation_subject}' not in dataset (subjects: {})",
            subjects.join(", ")
        )));
    }
    if subjects.len() < 2 {
        return Err(Error::Data(
            "leave-one-out needs at least two subjects".to_string(),
        ));
    }

    let rotations = subjects
        .iter()
        .filter(|s| s.as_str() != validation_subject)
        .map(|test| Rotation {
            test_subject: test.clone(),
            train_subjects: subjects
                .iter()
                .filter(|s| s != &test)
                .cloned()
                .collect(),
        })
        .collect();

    Ok(SplitPlan {
        validation_subject: validation_subject.to_string(),
        rotations,
    })
}
