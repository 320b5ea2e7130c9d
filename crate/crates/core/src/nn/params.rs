//! Named parameter access shared by the optimizer and the gradient checker.
//!
//! A model exposes its trainable tensors under stable string names
//! (e.g. `hidden1.dense.weight`). Gradients travel in a [`GradMap`] keyed
//! by the same names; BTreeMap keeps iteration order deterministic.

use crate::tensor::Tensor;
use std::collections::BTreeMap;

/// Gradients keyed by parameter name.
pub type GradMap = BTreeMap<String, Tensor>;

/// Add `grad` into the entry for `name`, creating it if absent.
pub fn accumulate_grad(grads: &mut GradMap, name: &str, grad: Tensor) {
    match grads.get_mut(name) {
        Some(existing) => existing.add_assign(&grad),
        None => {
            grads.insert(name.to_string(), grad);
        }
    }
}

/// A model whose parameters can be enumerated and mutated by name.
pub trait Parameterized {
    /// Stable, sorted-by-construction list of parameter names.
    fn param_names(&self) -> Vec<String>;
    fn param(&self, name: &str) -> Option<&Tensor>;
    fn param_mut(&mut self, name: &str) -> Option<&mut Tensor>;

    fn param_count(&self) -> usize {
        self.param_names()
            .iter()
            .map(|n| self.param(n).map(Tensor::len).unwrap_or(0))
            .sum()
    }
}

/// A single named tensor exposed as a [`Parameterized`] model: the adapter
/// used to finite-difference-check a gradient with respect to a function
/// *input* rather than a layer parameter.
#[derive(Debug, Clone)]
pub struct TensorParam {
    pub name: String,
    pub value: Tensor,
}

impl TensorParam {
    pub fn new(name: &str, value: Tensor) -> Self {
        TensorParam {
            name: name.to_string(),
            value,
        }
    }
}

impl Parameterized for TensorParam {
    fn param_names(&self) -> Vec<String> {
        vec![self.name.clone()]
    }
    fn param(&self, name: &str) -> Option<&Tensor> {
        (name == self.name).then_some(&self.value)
    }
    fn param_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        (name == self.name).then_some(&mut self.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_param_exposes_one_block() {
        let p = TensorParam::new("x", Tensor::vector(vec![1.0, 2.0]));
        assert_eq!(p.param_names(), vec!["x".to_string()]);
        assert!(p.param("x").is_some());
        assert!(p.param("y").is_none());
        assert_eq!(p.param_count(), 2);
    }

    #[test]
    fn accumulate_adds_into_existing_entries() {
        let mut grads = GradMap::new();
        accumulate_grad(&mut grads, "w", Tensor::vector(vec![1.0, 2.0]));
        accumulate_grad(&mut grads, "w", Tensor::vector(vec![0.5, -1.0]));
        assert_eq!(grads["w"].values(), &[1.5, 1.0]);
    }

    #[test]
    fn iteration_order_is_sorted_by_name() {
        let mut grads = GradMap::new();
        accumulate_grad(&mut grads, "b", Tensor::vector(vec![1.0]));
        accumulate_grad(&mut grads, "a", Tensor::vector(vec![1.0]));
        accumulate_grad(&mut grads, "c", Tensor::vector(vec![1.0]));
        let names: Vec<&str> = grads.keys().map(String::as_str).collect();
        assert_eq!(names, ["a", "b", "c"]);
    }
}
