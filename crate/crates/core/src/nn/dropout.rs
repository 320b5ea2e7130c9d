//! Inverted dropout.
//!
//! Train mode zeroes each element with probability `rate` and scales the
//! survivors by `1 / (1 - rate)`, so the expected activation is unchanged
//! and inference needs no correction. The forward pass takes an explicit
//! RNG; replaying the same seeded RNG replays the same mask, which is what
//! the finite-difference checker relies on.

use crate::tensor::Tensor;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::Mode;

/// Per-element multipliers: 0 where dropped, `1/(1-rate)` where kept.
#[derive(Debug, Clone)]
pub struct DropoutMask {
    pub factors: Tensor,
}

pub fn dropout_forward(
    input: &Tensor,
    rate: f64,
    mode: Mode,
    rng: &mut ChaCha8Rng,
) -> (Tensor, Option<DropoutMask>) {
    assert!((0.0..1.0).contains(&rate), "dropout rate must be in [0,1)");
    match mode {
        Mode::Infer => (input.clone(), None),
        Mode::Train => {
            if rate == 0.0 {
                let factors = Tensor::filled(input.shape(), 1.0);
                return (input.clone(), Some(DropoutMask { factors }));
            }
            let keep = 1.0 - rate;
            let mut factors = Tensor::zeros(input.shape());
            let mut out = Tensor::zeros(input.shape());
            for i in 0..input.len() {
                let f = if rng.random::<f64>() < rate { 0.0 } else { 1.0 / keep };
                factors.values_mut()[i] = f;
                out.values_mut()[i] = input.values()[i] * f;
            }
            (out, Some(DropoutMask { factors }))
        }
    }
}

pub fn dropout_backward(mask: &DropoutMask, grad_out: &Tensor) -> Tensor {
    assert_eq!(mask.factors.shape(), grad_out.shape(), "dropout mask shape mismatch");
    let mut out = Tensor::zeros(grad_out.shape());
    for i in 0..grad_out.len() {
        out.values_mut()[i] = grad_out.values()[i] * mask.factors.values()[i];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn infer_mode_is_identity_with_no_mask() {
        let input = Tensor::new(vec![2, 2], vec![1.0, -2.0, 3.0, 0.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (out, mask) = dropout_forward(&input, 0.4, Mode::Infer, &mut rng);
        assert_eq!(out.values(), input.values());
        assert!(mask.is_none());
    }

    #[test]
    fn same_seed_reproduces_the_mask() {
        let input = Tensor::filled(&[4, 8], 1.0);
        let mut a = ChaCha8Rng::seed_from_u64(99);
        let mut b = ChaCha8Rng::seed_from_u64(99);
        let (out_a, _) = dropout_forward(&input, 0.4, Mode::Train, &mut a);
        let (out_b, _) = dropout_forward(&input, 0.4, Mode::Train, &mut b);
        assert_eq!(out_a.values(), out_b.values());
    }

    #[test]
    fn surviving_elements_are_scaled_by_inverse_keep() {
        let input = Tensor::filled(&[10, 10], 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (out, mask) = dropout_forward(&input, 0.4, Mode::Train, &mut rng);
        let mask = mask.unwrap();
        for i in 0..out.len() {
            let f = mask.factors.values()[i];
            assert!(f == 0.0 || (f - 1.0 / 0.6).abs() < 1e-12);
            assert_eq!(out.values()[i], f);
        }
    }

    #[test]
    fn drop_fraction_is_near_rate_over_many_draws() {
        // 100k elements at rate 0.4: observed drop fraction within [0.39, 0.41].
        let input = Tensor::filled(&[1000, 100], 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let (_, mask) = dropout_forward(&input, 0.4, Mode::Train, &mut rng);
        let mask = mask.unwrap();
        let dropped = mask.factors.values().iter().filter(|&&f| f == 0.0).count();
        let frac = dropped as f64 / mask.factors.len() as f64;
        assert!((0.39..=0.41).contains(&frac), "drop fraction {frac}");
    }

    #[test]
    fn expectation_is_preserved_within_one_percent() {
        let input = Tensor::filled(&[1000, 100], 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (out, _) = dropout_forward(&input, 0.4, Mode::Train, &mut rng);
        let mean: f64 = out.values().iter().sum::<f64>() / out.len() as f64;
        assert!((mean - 2.0).abs() / 2.0 < 0.01, "mean {mean}");
    }

    #[test]
    fn backward_applies_the_same_mask() {
        let input = Tensor::filled(&[3, 4], 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (_, mask) = dropout_forward(&input, 0.5, Mode::Train, &mut rng);
        let mask = mask.unwrap();
        let grad = Tensor::filled(&[3, 4], 1.0);
        let back = dropout_backward(&mask, &grad);
        assert_eq!(back.values(), mask.factors.values());
    }
}
