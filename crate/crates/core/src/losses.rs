//! The four loss terms and their weighted combination.
//!
//! Three of the four are triplet-style sums of cosine distances. With
//! `cd(a,b) = 1 - cos(a,b)` and repulsion scale `s`:
//!
//! * regression: `Σ_i [ cd(pred_i, e_t(i)) - s Σ_{j≠t(i)} cd(pred_i, e_j) ]`
//! * classification: `-Σ_i log p_i[t(i)]` (probabilities clamped at 1e-12)
//! * reconstruction: `Σ_i cd(rec_i, x_i)`
//! * mean: `Σ_l Σ_i [ cd(h_i^l, m^l_t(i)) - s Σ_{j≠t(i)} cd(h_i^l, m^l_j) ]`
//!
//! where `m^l_j` is the tracked cross-subject mean representation of word
//! j at layer l. The means are constants: no gradient flows into the
//! tracker. All sums run in scan order (sequential reduction) so results
//! are bit-reproducible.

use crate::error::{Error, Result};
use crate::nn::similarity::{cosine_distance, cosine_distance_grad};
use crate::tensor::Tensor;
use std::collections::BTreeMap;

/// Floor applied to probabilities before `log`.
pub const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LossWeights {
    pub w_reg: f64,
    pub w_class: f64,
    pub w_rec: f64,
    pub w_mean: f64,
    /// Scale on the `Σ_{j≠target}` repulsion sums of the regression and
    /// mean terms. 1.0 reproduces the written formulas; `1/(v-1)` keeps
    /// the repulsion from growing with vocabulary size.
    pub neg_term_scale: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            w_reg: 1.0,
            w_class: 1.0,
            w_rec: 1.0,
            w_mean: 1.0,
            neg_term_scale: 1.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [
            ("w_reg", self.w_reg),
            ("w_class", self.w_class),
            ("w_rec", self.w_rec),
            ("w_mean", self.w_mean),
        ] {
            if !(w >= 0.0) {
                return Err(Error::Config(format!("{name} must be nonnegative, got {w}")));
            }
        }
        if self.neg_term_scale < 0.0 {
            return Err(Error::Config(format!(
                "neg_term_scale must be nonnegative, got {}",
                self.neg_term_scale
            )));
        }
        Ok(())
    }
}

/// Per-term (unweighted) values plus the weighted total.
#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    pub total: f64,
    pub terms: BTreeMap<String, f64>,
}

impl LossReport {
    pub fn term(&self, name: &str) -> f64 {
        self.terms.get(name).copied().unwrap_or(0.0)
    }
}

/// Cross-subject mean hidden representation per (layer, word).
///
/// `layers[l]` is a `[v x d_l]` matrix whose row j is the mean for word j;
/// `present[j]` says whether word j's mean has been computed yet; `stamp`
/// is the epoch after which the means were last recomputed. The means are
/// constants for the loss: gradients flow into the activations only.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanTracker {
    pub layers: BTreeMap<String, Tensor>,
    pub present: Vec<bool>,
    pub stamp: usize,
}

impl MeanTracker {
    pub fn layer_names(&self) -> Vec<&str> {
        self.layers.keys().map(String::as_str).collect()
    }

    pub fn require_complete(&self) -> Result<()> {
        if let Some(j) = self.present.iter().position(|p| !p) {
            return Err(Error::Tracker(format!("no mean recorded for word {j}")));
        }
        if self.layers.is_empty() {
            return Err(Error::Tracker("tracker has no layers".to_string()));
        }
        Ok(())
    }
}

fn check_targets(n: usize, targets: &[usize], v: usize) -> Result<()> {
    if targets.len() != n {
        return Err(Error::Dimension {
            op: "loss_targets",
            left: format!("batch [{n}]"),
            right: format!("targets [{}]", targets.len()),
        });
    }
    if let Some(&t) = targets.iter().find(|&&t| t >= v) {
        return Err(Error::Lookup(format!(
            "target word index {t} outside vocabulary of {v}"
        )));
    }
    Ok(())
}

/// Triplet-style embedding regression loss. `embeddings` is the `[v x d]`
/// matrix in vocabulary order. Returns the loss and its gradient w.r.t.
/// `predictions`.
pub fn loss_reg(
    predictions: &Tensor,
    targets: &[usize],
    embeddings: &Tensor,
    neg_term_scale: f64,
) -> Result<(f64, Tensor)> {
    let (n, d) = predictions.dims2();
    let (v, ed) = embeddings.dims2();
    if d != ed {
        return Err(Error::Dimension {
            op: "loss_reg",
            left: format!("predictions {}", predictions.shape_string()),
            right: format!("embeddings {}", embeddings.shape_string()),
        });
    }
    check_targets(n, targets, v)?;

    let mut total = 0.0;
    let mut grad = Tensor::zeros(&[n, d]);
    for i in 0..n {
        let pred = predictions.row(i);
        let t = targets[i];
        for j in 0..v {
            let e = embeddings.row(j);
            let sign = if j == t { 1.0 } else { -neg_term_scale };
            if sign == 0.0 {
                continue;
            }
            total += sign * cosine_distance(pred, e)?;
            let (gp, _) = cosine_distance_grad(pred, e)?;
            for (k, g) in gp.iter().enumerate() {
                grad.values_mut()[i * d + k] += sign * g;
            }
        }
    }
    Ok((total, grad))
}

/// Categorical cross-entropy over class probabilities. Returns the loss
/// and its gradient w.r.t. the probabilities (not the logits).
pub fn loss_class(class_probs: &Tensor, targets: &[usize]) -> Result<(f64, Tensor)> {
    let (n, v) = class_probs.dims2();
    check_targets(n, targets, v)?;
    let mut total = 0.0;
    let mut grad = Tensor::zeros(&[n, v]);
    for i in 0..n {
        let p = class_probs.get2(i, targets[i]);
        if p > PROB_CLAMP {
            total -= p.ln();
            grad.set2(i, targets[i], -1.0 / p);
        } else {
            // clamped region: constant loss, zero slope
            total -= PROB_CLAMP.ln();
        }
    }
    Ok((total, grad))
}

/// Cosine reconstruction loss between reconstruction rows and the
/// ROI-covered input rows. Returns the loss and its gradient w.r.t. the
/// reconstruction.
pub fn loss_rec(reconstruction: &Tensor, inputs: &Tensor) -> Result<(f64, Tensor)> {
    if reconstruction.shape() != inputs.shape() {
        return Err(Error::Dimension {
            op: "loss_rec",
            left: format!("reconstruction {}", reconstruction.shape_string()),
            right: format!("inputs {}", inputs.shape_string()),
        });
    }
    let (n, m) = reconstruction.dims2();
    let mut total = 0.0;
    let mut grad = Tensor::zeros(&[n, m]);
    for i in 0..n {
        let rec = reconstruction.row(i);
        let x = inputs.row(i);
        total += cosine_distance(rec, x)?;
        let (g, _) = cosine_distance_grad(rec, x)?;
        grad.row_mut(i).copy_from_slice(&g);
    }
    Ok((total, grad))
}

/// Mean regularization across tracked layers. `hidden` maps layer name to
/// the `[n x d_l]` batch activations at that layer; the tracker supplies
/// the `[v x d_l]` constant means. Returns the loss and per-layer
/// gradients w.r.t. the activations.
pub fn loss_mean(
    hidden: &BTreeMap<String, Tensor>,
    targets: &[usize],
    tracker: &MeanTracker,
    neg_term_scale: f64,
) -> Result<(f64, BTreeMap<String, Tensor>)> {
    tracker.require_complete()?;
    let v = tracker.present.len();

    let mut total = 0.0;
    let mut grads: BTreeMap<String, Tensor> = BTreeMap::new();
    for (layer, acts) in hidden {
        let means = tracker.layers.get(layer).ok_or_else(|| {
            Error::Tracker(format!("tracker has no layer '{layer}'"))
        })?;
        let (n, d) = acts.dims2();
        let (mv, md) = means.dims2();
        if md != d || mv != v {
            return Err(Error::Dimension {
                op: "loss_mean",
                left: format!("activations {}", acts.shape_string()),
                right: format!("means {}", means.shape_string()),
            });
        }
        check_targets(n, targets, v)?;

        let mut grad = Tensor::zeros(&[n, d]);
        for i in 0..n {
            let h = acts.row(i);
            let t = targets[i];
            for j in 0..v {
                let m = means.row(j);
                let sign = if j == t { 1.0 } else { -neg_term_scale };
                if sign == 0.0 {
                    continue;
                }
                total += sign * cosine_distance(h, m)?;
                let (gh, _) = cosine_distance_grad(h, m)?;
                for (k, g) in gh.iter().enumerate() {
                    grad.values_mut()[i * d + k] += sign * g;
                }
            }
        }
        grads.insert(layer.clone(), grad);
    }
    Ok((total, grads))
}

/// One computed term: its unweighted value and gradient tensor(s).
#[derive(Debug, Default)]
pub struct TermOutputs {
    pub reg: Option<(f64, Tensor)>,
    pub class: Option<(f64, Tensor)>,
    pub rec: Option<(f64, Tensor)>,
    pub mean: Option<(f64, BTreeMap<String, Tensor>)>,
}

/// Weight-scaled gradients ready to feed the model's backward pass.
#[derive(Debug, Default)]
pub struct WeightedGrads {
    pub regression_out: Option<Tensor>,
    pub class_probs: Option<Tensor>,
    pub reconstruction: Option<Tensor>,
    pub hidden: BTreeMap<String, Tensor>,
}

/// Combine computed terms into a weighted total. A term is active when it
/// was computed and its weight is positive; inactive terms are reported as
/// 0 and contribute nothing.
pub fn total_loss(terms: TermOutputs, weights: &LossWeights) -> Result<(LossReport, WeightedGrads)> {
    weights.validate()?;
    let mut report_terms: BTreeMap<String, f64> = BTreeMap::new();
    for key in ["reg", "class", "rec", "mean"] {
        report_terms.insert(key.to_string(), 0.0);
    }
    let mut total = 0.0;
    let mut grads = WeightedGrads::default();
    let mut any_active = false;

    if let Some((value, grad)) = terms.reg {
        report_terms.insert("reg".to_string(), value);
        if weights.w_reg > 0.0 {
            total += weights.w_reg * value;
            let mut g = grad;
            g.scale(weights.w_reg);
            grads.regression_out = Some(g);
            any_active = true;
        }
    }
    if let Some((value, grad)) = terms.class {
        report_terms.insert("class".to_string(), value);
        if weights.w_class > 0.0 {
            total += weights.w_class * value;
            let mut g = grad;
            g.scale(weights.w_class);
            grads.class_probs = Some(g);
            any_active = true;
        }
    }
    if let Some((value, grad)) = terms.rec {
        report_terms.insert("rec".to_string(), value);
        if weights.w_rec > 0.0 {
            total += weights.w_rec * value;
            let mut g = grad;
            g.scale(weights.w_rec);
            grads.reconstruction = Some(g);
            any_active = true;
        }
    }
    if let Some((value, layer_grads)) = terms.mean {
        report_terms.insert("mean".to_string(), value);
        if weights.w_mean > 0.0 {
            total += weights.w_mean * value;
            for (layer, mut g) in layer_grads {
                g.scale(weights.w_mean);
                grads.hidden.insert(layer, g);
            }
            any_active = true;
        }
    }

    if !any_active {
        return Err(Error::Config(
            "no active loss term: every computed term has weight zero".to_string(),
        ));
    }

    Ok((
        LossReport {
            total,
            terms: report_terms,
        },
        grads,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{
        finite_difference_check, softmax, softmax_backward, Adam, AdamConfig, GradCheckSettings,
        GradMap, TensorParam,
    };
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fd_settings() -> GradCheckSettings {
        GradCheckSettings::default() // eps 1e-3, tol 1e-4
    }

    // ---- loss_reg ----

    #[test]
    fn reg_perfect_prediction_with_orthogonal_distractor_is_minus_one() {
        // prediction == target embedding -> attraction 0; one orthogonal
        // distractor -> repulsion 1; total 0 - 1 = -1.
        let pred = Tensor::new(vec![1, 2], vec![1.0, 0.0]);
        let emb = Tensor::new(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]);
        let (loss, _) = loss_reg(&pred, &[0], &emb, 1.0).unwrap();
        assert_relative_eq!(loss, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn reg_attraction_term_vanishes_on_exact_match() {
        let pred = Tensor::new(vec![1, 3], vec![0.3, -0.4, 0.5]);
        let emb = Tensor::new(vec![1, 3], vec![0.3, -0.4, 0.5]);
        let (loss, _) = loss_reg(&pred, &[0], &emb, 1.0).unwrap();
        assert_relative_eq!(loss, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn reg_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pred = Tensor::new(
            vec![2, 4],
            (0..8).map(|_| rng.random_range(-1.0..1.0)).collect(),
        );
        let emb = Tensor::new(
            vec![3, 4],
            (0..12).map(|_| rng.random_range(-1.0..1.0)).collect(),
        );
        let targets = [2usize, 0];
        let (_, grad) = loss_reg(&pred, &targets, &emb, 1.0).unwrap();
        let mut model = TensorParam::new("pred", pred);
        let mut grads = GradMap::new();
        grads.insert("pred".to_string(), grad);
        let report = finite_difference_check(&mut model, &grads, &fd_settings(), |m| {
            Ok(loss_reg(&m.value, &targets, &emb, 1.0)?.0)
        })
        .unwrap();
        assert!(report.pass(), "{:?}", report.summary_lines());
    }

    #[test]
    fn reg_zero_prediction_is_degenerate() {
        let pred = Tensor::new(vec![1, 2], vec![0.0, 0.0]);
        let emb = Tensor::new(vec![1, 2], vec![1.0, 0.0]);
        assert!(matches!(
            loss_reg(&pred, &[0], &emb, 1.0).unwrap_err(),
            Error::Degenerate(_)
        ));
    }

    #[test]
    fn reg_lower_bound_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let n = 3;
            let v = 4;
            let pred = Tensor::new(
                vec![n, 3],
                (0..n * 3).map(|_| rng.random_range(-2.0..2.0)).collect(),
            );
            let emb = Tensor::new(
                vec![v, 3],
                (0..v * 3).map(|_| rng.random_range(-2.0..2.0)).collect(),
            );
            let targets = vec![0usize, 3, 1];
            let s = 1.0;
            if let Ok((loss, _)) = loss_reg(&pred, &targets, &emb, s) {
                let bound = -s * (v as f64 - 1.0) * 2.0 * n as f64;
                assert!(loss >= bound, "loss {loss} below bound {bound}");
            }
        }
    }

    #[test]
    fn minimizing_reg_pulls_prediction_toward_target() {
        // Free prediction vector, fixed orthonormal embeddings. The
        // repulsion term means the optimum is not exactly e_target, but
        // cosdist(pred, e_target) must fall well below its starting value
        // (for v=2 the optimum is 1 - 1/sqrt(2) ~ 0.293).
        let emb = Tensor::new(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]);
        let mut model = TensorParam::new("pred", Tensor::new(vec![1, 2], vec![-0.4, 0.9]));
        let start =
            cosine_distance(model.value.row(0), emb.row(0)).unwrap();
        let mut opt = Adam::new(AdamConfig {
            learning_rate: 0.05,
            ..AdamConfig::default()
        });
        for _ in 0..200 {
            let (_, grad) = loss_reg(&model.value, &[0], &emb, 1.0).unwrap();
            let mut grads = GradMap::new();
            grads.insert("pred".to_string(), grad);
            opt.step(&mut model, &grads).unwrap();
        }
        let end = cosine_distance(model.value.row(0), emb.row(0)).unwrap();
        assert!(end < start, "distance went {start} -> {end}");
        assert!(end < 0.35, "distance {end} did not approach the optimum");
    }

    // ---- loss_class ----

    #[test]
    fn class_certain_prediction_is_zero() {
        let probs = Tensor::new(vec![1, 3], vec![0.0, 1.0, 0.0]);
        let (loss, _) = loss_class(&probs, &[1]).unwrap();
        assert_relative_eq!(loss, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn class_uniform_over_180_words_is_ln_180() {
        let v = 180;
        let probs = Tensor::new(vec![1, v], vec![1.0 / v as f64; v]);
        let (loss, _) = loss_class(&probs, &[17]).unwrap();
        assert_relative_eq!(loss, (180.0f64).ln(), epsilon = 1e-12);
        assert_relative_eq!(loss, 5.1929568508902104, epsilon = 1e-12);
    }

    #[test]
    fn class_is_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let logits = Tensor::new(
                vec![2, 5],
                (0..10).map(|_| rng.random_range(-4.0..4.0)).collect(),
            );
            let probs = softmax(&logits);
            let (loss, _) = loss_class(&probs, &[3, 0]).unwrap();
            assert!(loss >= 0.0);
        }
    }

    #[test]
    fn class_gradient_through_softmax_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let logits = Tensor::new(
            vec![2, 4],
            (0..8).map(|_| rng.random_range(-2.0..2.0)).collect(),
        );
        let targets = [1usize, 3];
        let probs = softmax(&logits);
        let (_, d_probs) = loss_class(&probs, &targets).unwrap();
        let d_logits = softmax_backward(&probs, &d_probs);

        let mut model = TensorParam::new("logits", logits);
        let mut grads = GradMap::new();
        grads.insert("logits".to_string(), d_logits);
        let report = finite_difference_check(&mut model, &grads, &fd_settings(), |m| {
            Ok(loss_class(&softmax(&m.value), &targets)?.0)
        })
        .unwrap();
        assert!(report.pass(), "{:?}", report.summary_lines());
    }

    #[test]
    fn class_clamps_zero_probability() {
        let probs = Tensor::new(vec![1, 2], vec![1.0, 0.0]);
        let (loss, grad) = loss_class(&probs, &[1]).unwrap();
        assert_relative_eq!(loss, -(PROB_CLAMP.ln()), epsilon = 1e-6);
        assert!(loss.is_finite());
        assert_eq!(grad.get2(0, 1), 0.0); // constant in the clamped region
    }

    // ---- loss_rec ----

    #[test]
    fn rec_perfect_and_scaled_reconstructions_cost_zero() {
        let x = Tensor::new(vec![2, 3], vec![1.0, -2.0, 0.5, 0.3, 0.3, -0.9]);
        let (loss, _) = loss_rec(&x, &x).unwrap();
        assert_relative_eq!(loss, 0.0, epsilon = 1e-12);

        let mut doubled = x.clone();
        doubled.scale(2.0);
        let (loss, _) = loss_rec(&doubled, &x).unwrap();
        assert_relative_eq!(loss, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rec_orthogonal_rows_cost_one_each() {
        let rec = Tensor::new(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]);
        let x = Tensor::new(vec![2, 2], vec![0.0, 1.0, 1.0, 0.0]);
        let (loss, _) = loss_rec(&rec, &x).unwrap();
        assert_relative_eq!(loss, 2.0, epsilon = 1e-12); // n x 1
    }

    #[test]
    fn rec_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rec = Tensor::new(
            vec![2, 5],
            (0..10).map(|_| rng.random_range(-1.0..1.0)).collect(),
        );
        let x = Tensor::new(
            vec![2, 5],
            (0..10).map(|_| rng.random_range(-1.0..1.0)).collect(),
        );
        let (_, grad) = loss_rec(&rec, &x).unwrap();
        let mut model = TensorParam::new("rec", rec);
        let mut grads = GradMap::new();
        grads.insert("rec".to_string(), grad);
        let report = finite_difference_check(&mut model, &grads, &fd_settings(), |m| {
            Ok(loss_rec(&m.value, &x)?.0)
        })
        .unwrap();
        assert!(report.pass(), "{:?}", report.summary_lines());
    }

    proptest! {
        #[test]
        fn rec_is_bounded_by_twice_the_rows(
            vals in proptest::collection::vec(0.1f64..2.0, 12),
            signs in proptest::collection::vec(prop::bool::ANY, 12),
        ) {
            let signed: Vec<f64> = vals
                .iter()
                .zip(&signs)
                .map(|(v, s)| if *s { *v } else { -*v })
                .collect();
            let rec = Tensor::new(vec![2, 3], signed[..6].to_vec());
            let x = Tensor::new(vec![2, 3], signed[6..].to_vec());
            let (loss, _) = loss_rec(&rec, &x).unwrap();
            prop_assert!(loss >= -1e-12);
            prop_assert!(loss <= 2.0 * 2.0 + 1e-12);
        }
    }

    // ---- loss_mean ----

    fn toy_tracker() -> MeanTracker {
        let mut layers = BTreeMap::new();
        layers.insert(
            "latent".to_string(),
            Tensor::new(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]),
        );
        MeanTracker {
            layers,
            present: vec![true, true],
            stamp: 0,
        }
    }

    #[test]
    fn mean_on_its_own_mean_with_orthogonal_other_is_minus_one() {
        let mut hidden = BTreeMap::new();
        hidden.insert("latent".to_string(), Tensor::new(vec![1, 2], vec![1.0, 0.0]));
        let (loss, _) = loss_mean(&hidden, &[0], &toy_tracker(), 1.0).unwrap();
        assert_relative_eq!(loss, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn mean_with_identical_means_ignores_labels() {
        let mut layers = BTreeMap::new();
        layers.insert(
            "latent".to_string(),
            Tensor::new(vec![2, 2], vec![0.6, 0.8, 0.6, 0.8]),
        );
        let tracker = MeanTracker {
            layers,
            present: vec![true, true],
            stamp: 0,
        };
        let mut hidden = BTreeMap::new();
        hidden.insert("latent".to_string(), Tensor::new(vec![1, 2], vec![0.2, -0.4]));
        let (a, _) = loss_mean(&hidden, &[0], &tracker, 1.0).unwrap();
        let (b, _) = loss_mean(&hidden, &[1], &tracker, 1.0).unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-12);
    }

    #[test]
    fn mean_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut layers = BTreeMap::new();
        layers.insert(
            "latent".to_string(),
            Tensor::new(vec![2, 4], (0..8).map(|_| rng.random_range(-1.0..1.0)).collect()),
        );
        let tracker = MeanTracker {
            layers,
            present: vec![true, true],
            stamp: 0,
        };
        let acts = Tensor::new(
            vec![3, 4],
            (0..12).map(|_| rng.random_range(-1.0..1.0)).collect(),
        );
        let targets = [0usize, 1, 0];
        let mut hidden = BTreeMap::new();
        hidden.insert("latent".to_string(), acts.clone());
        let (_, grads_by_layer) = loss_mean(&hidden, &targets, &tracker, 1.0).unwrap();

        let mut model = TensorParam::new("acts", acts);
        let mut grads = GradMap::new();
        grads.insert("acts".to_string(), grads_by_layer["latent"].clone());
        let report = finite_difference_check(&mut model, &grads, &fd_settings(), |m| {
            let mut h = BTreeMap::new();
            h.insert("latent".to_string(), m.value.clone());
            Ok(loss_mean(&h, &targets, &tracker, 1.0)?.0)
        })
        .unwrap();
        assert!(report.pass(), "{:?}", report.summary_lines());
    }

    #[test]
    fn mean_missing_word_is_a_tracker_error() {
        let mut tracker = toy_tracker();
        tracker.present[1] = false;
        let mut hidden = BTreeMap::new();
        hidden.insert("latent".to_string(), Tensor::new(vec![1, 2], vec![1.0, 0.0]));
        let err = loss_mean(&hidden, &[0], &tracker, 1.0).unwrap_err();
        assert!(matches!(err, Error::Tracker(_)));
    }

    // ---- total_loss ----

    #[test]
    fn single_active_term_passes_through() {
        let terms = TermOutputs {
            class: Some((2.5, Tensor::zeros(&[1, 2]))),
            ..TermOutputs::default()
        };
        let weights = LossWeights {
            w_reg: 0.0,
            w_class: 1.0,
            w_rec: 0.0,
            w_mean: 0.0,
            neg_term_scale: 1.0,
        };
        let (report, grads) = total_loss(terms, &weights).unwrap();
        assert_relative_eq!(report.total, 2.5, epsilon = 1e-12);
        assert_eq!(report.term("class"), 2.5);
        assert_eq!(report.term("reg"), 0.0);
        assert!(grads.class_probs.is_some());
        assert!(grads.regression_out.is_none());
    }

    #[test]
    fn weighted_sum_and_linearity() {
        let make_terms = || TermOutputs {
            class: Some((2.0, Tensor::zeros(&[1, 2]))),
            rec: Some((0.5, Tensor::zeros(&[1, 3]))),
            ..TermOutputs::default()
        };
        let w1 = LossWeights {
            w_reg: 0.0,
            w_class: 1.0,
            w_rec: 1.0,
            w_mean: 0.0,
            neg_term_scale: 1.0,
        };
        let (r1, _) = total_loss(make_terms(), &w1).unwrap();
        assert_relative_eq!(r1.total, 2.5, epsilon = 1e-12);

        let w2 = LossWeights {
            w_class: 2.0,
            w_rec: 2.0,
            ..w1
        };
        let (r2, _) = total_loss(make_terms(), &w2).unwrap();
        assert_relative_eq!(r2.total, 5.0, epsilon = 1e-12);
    }

    #[test]
    fn total_equals_weighted_term_sum() {
        let terms = TermOutputs {
            reg: Some((-0.5, Tensor::zeros(&[1, 2]))),
            class: Some((3.0, Tensor::zeros(&[1, 2]))),
            rec: Some((0.7, Tensor::zeros(&[1, 2]))),
            ..TermOutputs::default()
        };
        let weights = LossWeights {
            w_reg: 0.3,
            w_class: 1.5,
            w_rec: 2.0,
            w_mean: 1.0,
            neg_term_scale: 1.0,
        };
        let (report, _) = total_loss(terms, &weights).unwrap();
        let expected = 0.3 * -0.5 + 1.5 * 3.0 + 2.0 * 0.7;
        assert!((report.total - expected).abs() < 1e-12);
    }

    #[test]
    fn all_inactive_is_a_config_error() {
        let terms = TermOutputs {
            class: Some((1.0, Tensor::zeros(&[1, 2]))),
            ..TermOutputs::default()
        };
        let weights = LossWeights {
            w_reg: 1.0,
            w_class: 0.0,
            w_rec: 1.0,
            w_mean: 1.0,
            neg_term_scale: 1.0,
        };
        assert!(matches!(
            total_loss(terms, &weights).unwrap_err(),
            Error::Config(_)
        ));
    }

    #[test]
    fn mean_grads_are_weight_scaled() {
        let mut layer_grads = BTreeMap::new();
        layer_grads.insert("latent".to_string(), Tensor::new(vec![1, 2], vec![1.0, -2.0]));
        let terms = TermOutputs {
            mean: Some((0.4, layer_grads)),
            class: Some((1.0, Tensor::zeros(&[1, 2]))),
            ..TermOutputs::default()
        };
        let weights = LossWeights {
            w_mean: 0.5,
            ..LossWeights::default()
        };
        let (_, grads) = total_loss(terms, &weights).unwrap();
        assert_eq!(grads.hidden["latent"].values(), &[0.5, -1.0]);
    }
}
