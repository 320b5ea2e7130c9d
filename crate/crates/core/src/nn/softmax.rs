//! Numerically stable softmax over the last axis, with its exact Jacobian
//! product for the backward pass:
//!
//! `dx_i = y_i * (dy_i - sum_j dy_j * y_j)`

use crate::tensor::Tensor;

/// Row-wise softmax. Rank-1 input is treated as a single row.
pub fn softmax(input: &Tensor) -> Tensor {
    let mut out = input.clone();
    for row in out.values_mut().chunks_mut(row_width(input)) {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// Backward through softmax. `output` is the forward result.
pub fn softmax_backward(output: &Tensor, grad_out: &Tensor) -> Tensor {
    assert_eq!(output.shape(), grad_out.shape(), "softmax shape mismatch");
    let width = row_width(output);
    let mut grad_in = Tensor::zeros(output.shape());
    let y = output.values();
    let dy = grad_out.values();
    let dx = grad_in.values_mut();
    for start in (0..y.len()).step_by(width) {
        let mut dot = 0.0;
        for i in start..start + width {
            dot += dy[i] * y[i];
        }
        for i in start..start + width {
            dx[i] = y[i] * (dy[i] - dot);
        }
    }
    grad_in
}

fn row_width(t: &Tensor) -> usize {
    *t.shape().last().expect("softmax of empty tensor")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn logits_zero_ln2_give_one_third_two_thirds() {
        let input = Tensor::vector(vec![0.0, std::f64::consts::LN_2]);
        let out = softmax(&input);
        assert_relative_eq!(out.values()[0], 1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(out.values()[1], 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn uniform_logits_give_uniform_probabilities() {
        let input = Tensor::vector(vec![5.0; 4]);
        let out = softmax(&input);
        for &p in out.values() {
            assert_relative_eq!(p, 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn large_logits_do_not_overflow() {
        let input = Tensor::vector(vec![1000.0, 1001.0]);
        let out = softmax(&input);
        assert!(out.all_finite());
        assert_relative_eq!(out.values()[0] + out.values()[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn backward_matches_jacobian_on_a_small_case() {
        // y = softmax([0, ln 2]) = [1/3, 2/3]; dy = [1, 0].
        // dot = 1/3; dx = [1/3*(1 - 1/3), 2/3*(0 - 1/3)] = [2/9, -2/9].
        let y = softmax(&Tensor::vector(vec![0.0, std::f64::consts::LN_2]));
        let dy = Tensor::vector(vec![1.0, 0.0]);
        let dx = softmax_backward(&y, &dy);
        assert_relative_eq!(dx.values()[0], 2.0 / 9.0, epsilon = 1e-12);
        assert_relative_eq!(dx.values()[1], -2.0 / 9.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn rows_sum_to_one(vals in proptest::collection::vec(-30.0f64..30.0, 6)) {
            let t = Tensor::new(vec![2, 3], vals);
            let out = softmax(&t);
            for b in 0..2 {
                let sum: f64 = (0..3).map(|j| out.get2(b, j)).sum();
                prop_assert!((sum - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn shift_invariance(vals in proptest::collection::vec(-20.0f64..20.0, 5), c in -10.0f64..10.0) {
            let a = Tensor::vector(vals.clone());
            let b = Tensor::vector(vals.iter().map(|v| v + c).collect());
            let pa = softmax(&a);
            let pb = softmax(&b);
            for i in 0..5 {
                prop_assert!((pa.values()[i] - pb.values()[i]).abs() < 1e-9);
            }
        }
    }
}
