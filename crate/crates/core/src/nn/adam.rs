//! Adam optimizer with per-parameter first/second moment estimates and
//! bias correction:
//!
//! `m <- b1 m + (1-b1) g`, `v <- b2 v + (1-b2) g^2`,
//! `theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)`.

use crate::error::{Error, Result};
use crate::tensor::Tensor;
use std::collections::BTreeMap;

use super::params::{GradMap, Parameterized};

#[derive(Debug, Clone)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug)]
pub struct Adam {
    config: AdamConfig,
    step: u64,
    first: BTreeMap<String, Tensor>,
    second: BTreeMap<String, Tensor>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Adam {
            config,
            step: 0,
            first: BTreeMap::new(),
            second: BTreeMap::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Apply one update from `grads` to every matching parameter of `model`.
    /// Parameters without a gradient entry are left untouched.
    pub fn step<M: Parameterized>(&mut self, model: &mut M, grads: &GradMap) -> Result<()> {
        self.step += 1;
        let b1 = self.config.beta1;
        let b2 = self.config.beta2;
        let bias1 = 1.0 - b1.powi(self.step as i32);
        let bias2 = 1.0 - b2.powi(self.step as i32);

        for (name, grad) in grads {
            let param = model.param_mut(name).ok_or_else(|| {
                Error::Contract(format!("gradient for unknown parameter '{name}'"))
            })?;
            if param.shape() != grad.shape() {
                return Err(Error::Dimension {
                    op: "adam_step",
                    left: format!("param '{}' {}", name, param.shape_string()),
                    right: format!("grad {}", grad.shape_string()),
                });
            }
            let m = self
                .first
                .entry(name.clone())
                .or_insert_with(|| Tensor::zeros(grad.shape()));
            let v = self
                .second
                .entry(name.clone())
                .or_insert_with(|| Tensor::zeros(grad.shape()));
            for i in 0..grad.len() {
                let g = grad.values()[i];
                let mi = b1 * m.values()[i] + (1.0 - b1) * g;
                let vi = b2 * v.values()[i] + (1.0 - b2) * g * g;
                m.values_mut()[i] = mi;
                v.values_mut()[i] = vi;
                let m_hat = mi / bias1;
                let v_hat = vi / bias2;
                param.values_mut()[i] -=
                    self.config.learning_rate * m_hat / (v_hat.sqrt() + self.config.epsilon);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    struct OneParam {
        w: Tensor,
    }

    impl Parameterized for OneParam {
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

    #[test]
    fn first_step_moves_by_learning_rate() {
        // After bias correction the first update is lr * g / (|g| + eps),
        // i.e. lr * sign(g), for any nonzero gradient.
        let mut model = OneParam {
            w: Tensor::vector(vec![1.0, -2.0]),
        };
        let mut opt = Adam::new(AdamConfig {
            learning_rate: 0.1,
            ..AdamConfig::default()
        });
        let mut grads = GradMap::new();
        grads.insert("w".to_string(), Tensor::vector(vec![3.0, -0.5]));
        opt.step(&mut model, &grads).unwrap();
        assert_relative_eq!(model.w.values()[0], 1.0 - 0.1, epsilon = 1e-6);
        assert_relative_eq!(model.w.values()[1], -2.0 + 0.1, epsilon = 1e-6);
    }

    #[test]
    fn repeated_steps_descend_a_quadratic() {
        // minimize f(w) = w^2 from w=5; gradient 2w.
        let mut model = OneParam {
            w: Tensor::vector(vec![5.0]),
        };
        let mut opt = Adam::new(AdamConfig {
            learning_rate: 0.05,
            ..AdamConfig::default()
        });
        for _ in 0..500 {
            let g = 2.0 * model.w.values()[0];
            let mut grads = GradMap::new();
            grads.insert("w".to_string(), Tensor::vector(vec![g]));
            opt.step(&mut model, &grads).unwrap();
        }
        assert!(model.w.values()[0].abs() < 0.1, "w = {}", model.w.values()[0]);
    }

    #[test]
    fn unknown_parameter_name_is_a_contract_error() {
        let mut model = OneParam {
            w: Tensor::vector(vec![0.0]),
        };
        let mut opt = Adam::new(AdamConfig::default());
        let mut grads = GradMap::new();
        grads.insert("nope".to_string(), Tensor::vector(vec![1.0]));
        let err = opt.step(&mut model, &grads).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut model = OneParam {
            w: Tensor::vector(vec![0.0, 0.0]),
        };
        let mut opt = Adam::new(AdamConfig::default());
        let mut grads = GradMap::new();
        grads.insert("w".to_string(), Tensor::vector(vec![1.0]));
        let err = opt.step(&mut model, &grads).unwrap_err();
        assert!(matches!(err, Error::Dimension { .. }));
    }
}
