//! Finite-difference gradient verification.
//!
//! For each parameter entry the checker perturbs the value by +/-epsilon,
//! re-evaluates the scalar loss, and compares the central difference
//! `(f(x+e) - f(x-e)) / 2e` against the analytic gradient. The loss closure
//! must be deterministic: anything stochastic inside (dropout masks) has to
//! re-seed its own RNG on every call so both probes see the same mask.
//!
//! The error measure is `|a - n| / max(|a|, |n|, 1)`: relative where the
//! gradient is large, absolute where it is near zero, so a tolerance of
//! 1e-4 is meaningful across the whole range.

use crate::error::{Error, Result};
use crate::nn::params::{GradMap, Parameterized};

#[derive(Debug, Clone)]
pub struct GradCheckSettings {
    pub epsilon: f64,
    pub tolerance: f64,
    /// Check at most this many entries per parameter block, evenly spaced.
    /// `None` checks every entry.
    pub max_per_block: Option<usize>,
}

impl Default for GradCheckSettings {
    fn default() -> Self {
        GradCheckSettings {
            epsilon: 1e-3,
            tolerance: 1e-4,
            max_per_block: None,
        }
    }
}

/// Result for one named parameter block.
#[derive(Debug, Clone)]
pub struct GradCheckBlock {
    pub name: String,
    pub entries_checked: usize,
    pub max_error: f64,
    pub worst_index: usize,
    pub worst_analytic: f64,
    pub worst_numeric: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub blocks: Vec<GradCheckBlock>,
    pub epsilon: f64,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn pass(&self) -> bool {
        self.blocks.iter().all(|b| b.pass)
    }

    pub fn max_error(&self) -> f64 {
        self.blocks.iter().map(|b| b.max_error).fold(0.0, f64::max)
    }

    /// One line per block, suitable for terminal output.
    pub fn summary_lines(&self) -> Vec<String> {
        self.blocks
            .iter()
            .map(|b| {
                format!(
                    "{} {} checked={} max_err={:.3e} (analytic {:+.6e}, numeric {:+.6e} at [{}])",
                    if b.pass { "ok  " } else { "FAIL" },
                    b.name,
                    b.entries_checked,
                    b.max_error,
                    b.worst_analytic,
                    b.worst_numeric,
                    b.worst_index,
                )
            })
            .collect()
    }
}

/// Compare `analytic` against central finite differences of `loss`.
///
/// Every parameter named in `analytic` must exist on the model with the
/// same shape. The model is restored to its original values afterwards.
pub fn finite_difference_check<M, F>(
    model: &mut M,
    analytic: &GradMap,
    settings: &GradCheckSettings,
    mut loss: F,
) -> Result<GradCheckReport>
where
    M: Parameterized,
    F: FnMut(&M) -> Result<f64>,
{
    let eps = settings.epsilon;
    let mut blocks = Vec::new();

    for (name, grad) in analytic {
        let len = {
            let param = model.param(name).ok_or_else(|| {
                Error::Contract(format!("gradient for unknown parameter '{name}'"))
            })?;
            if param.shape() != grad.shape() {
                return Err(Error::Dimension {
                    op: "finite_difference_check",
                    left: format!("param '{}' {}", name, param.shape_string()),
                    right: format!("grad {}", grad.shape_string()),
                });
            }
            param.len()
        };

        let indices = select_indices(len, settings.max_per_block);
        let mut block = GradCheckBlock {
            name: name.clone(),
            entries_checked: indices.len(),
            max_error: 0.0,
            worst_index: 0,
            worst_analytic: 0.0,
            worst_numeric: 0.0,
            pass: true,
        };

        for i in indices {
            let original = model.param(name).unwrap().values()[i];

            model.param_mut(name).unwrap().values_mut()[i] = original + eps;
            let plus = loss(model)?;
            model.param_mut(name).unwrap().values_mut()[i] = original - eps;
            let minus = loss(model)?;
            model.param_mut(name).unwrap().values_mut()[i] = original;

            let numeric = (plus - minus) / (2.0 * eps);
            let a = grad.values()[i];
            let denom = a.abs().max(numeric.abs()).max(1.0);
            let err = (a - numeric).abs() / denom;
            if err > block.max_error {
                block.max_error = err;
                block.worst_index = i;
                block.worst_analytic = a;
                block.worst_numeric = numeric;
            }
        }

        block.pass = block.max_error <= settings.tolerance;
        blocks.push(block);
    }

    Ok(GradCheckReport {
        blocks,
        epsilon: eps,
        tolerance: settings.tolerance,
    })
}

fn select_indices(len: usize, cap: Option<usize>) -> Vec<usize> {
    match cap {
        Some(cap) if cap < len && cap > 0 => {
            // Evenly spaced, always including index 0.
            (0..cap).map(|k| k * len / cap).collect()
        }
        _ => (0..len).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    /// f(w) = sum(w^2) + 3 w[0]; df/dw_i = 2 w_i (+3 for i=0).
    struct Quadratic {
        w: Tensor,
    }

    impl Parameterized for Quadratic {
        fn param_names(&self) -> Vec<String> {
            vec!["w".to_string()]
        }
        fn param(&self, name: &str) -> Option<&Tensor> {
            (name == "w").then_some(&self.w)
        }
        fn param_mut(&mut self, name: &str) -> Option<&mut Tensor> {
            (name == "w").then_some(&mut self.w)
        }
    }

    fn quad_loss(m: &Quadratic) -> crate::error::Result<f64> {
        let w = m.w.values();
        Ok(w.iter().map(|v| v * v).sum::<f64>() + 3.0 * w[0])
    }

    fn quad_grads(m: &Quadratic) -> GradMap {
        let mut g: Vec<f64> = m.w.values().iter().map(|v| 2.0 * v).collect();
        g[0] += 3.0;
        let mut grads = GradMap::new();
        grads.insert("w".to_string(), Tensor::vector(g));
        grads
    }

    #[test]
    fn correct_gradient_passes() {
        let mut model = Quadratic {
            w: Tensor::vector(vec![0.5, -1.2, 2.0]),
        };
        let grads = quad_grads(&model);
        let report = finite_difference_check(
            &mut model,
            &grads,
            &GradCheckSettings::default(),
            quad_loss,
        )
        .unwrap();
        assert!(report.pass(), "{:?}", report.blocks);
        // model restored
        assert_eq!(model.w.values(), &[0.5, -1.2, 2.0]);
    }

    #[test]
    fn corrupted_gradient_is_detected() {
        let mut model = Quadratic {
            w: Tensor::vector(vec![0.5, -1.2, 2.0]),
        };
        let mut grads = quad_grads(&model);
        grads.get_mut("w").unwrap().values_mut()[1] += 0.05;
        let report = finite_difference_check(
            &mut model,
            &grads,
            &GradCheckSettings::default(),
            quad_loss,
        )
        .unwrap();
        assert!(!report.pass());
        assert_eq!(report.blocks[0].worst_index, 1);
    }

    #[test]
    fn sign_flip_is_detected() {
        let mut model = Quadratic {
            w: Tensor::vector(vec![1.0]),
        };
        let mut grads = GradMap::new();
        // true gradient is 2*1 + 3 = 5; hand it -5
        grads.insert("w".to_string(), Tensor::vector(vec![-5.0]));
        let report = finite_difference_check(
            &mut model,
            &grads,
            &GradCheckSettings::default(),
            quad_loss,
        )
        .unwrap();
        assert!(!report.pass());
    }

    #[test]
    fn capped_blocks_check_evenly_spaced_subset() {
        assert_eq!(select_indices(10, Some(3)), vec![0, 3, 6]);
        assert_eq!(select_indices(4, Some(8)), vec![0, 1, 2, 3]);
        assert_eq!(select_indices(4, None), vec![0, 1, 2, 3]);
    }

    #[test]
    fn unknown_gradient_name_is_a_contract_error() {
        let mut model = Quadratic {
            w: Tensor::vector(vec![1.0]),
        };
        let mut grads = GradMap::new();
        grads.insert("missing".to_string(), Tensor::vector(vec![0.0]));
        let err = finite_difference_check(
            &mut model,
            &grads,
            &GradCheckSettings::default(),
            quad_loss,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }
}
