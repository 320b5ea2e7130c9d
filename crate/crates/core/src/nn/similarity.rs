//! Cosine similarity/distance between vectors, with the analytic gradient
//! of the distance used by the embedding losses, plus Pearson correlation
//! for evaluation.
//!
//! With `s = cos(a, b) = a.b / (|a| |b|)`, the distance is `d = 1 - s` and
//!
//! `dd/da = s * a / |a|^2 - b / (|a| |b|)`
//!
//! (and symmetrically for `b`).

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair("cosine_similarity", a, b)?;
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Degenerate("cosine of a zero vector"));
    }
    Ok(dot(a, b) / (na * nb))
}

pub fn cosine_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    Ok(1.0 - cosine_similarity(a, b)?)
}

/// Gradients of `1 - cos(a, b)` with respect to `a` and `b`.
pub fn cosine_distance_grad(a: &[f64], b: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    check_pair("cosine_distance_grad", a, b)?;
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Degenerate("cosine gradient of a zero vector"));
    }
    let s = dot(a, b) / (na * nb);
    let ga: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(&ai, &bi)| s * ai / (na * na) - bi / (na * nb))
        .collect();
    let gb: Vec<f64> = b
        .iter()
        .zip(a)
        .map(|(&bi, &ai)| s * bi / (nb * nb) - ai / (na * nb))
        .collect();
    Ok((ga, gb))
}

/// Pearson correlation between two equal-length sequences.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair("pearson", a, b)?;
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return Err(Error::Degenerate("pearson of a constant sequence"));
    }
    Ok(cov / (va.sqrt() * vb.sqrt()))
}

fn check_pair(op: &'static str, a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            op,
            left: format!("[{}]", a.len()),
            right: format!("[{}]", b.len()),
        });
    }
    if a.is_empty() {
        return Err(Error::Degenerate("similarity of empty vectors"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn parallel_vectors_have_distance_zero() {
        let d = cosine_distance(&[1.0, 2.0], &[2.0, 4.0]).unwrap();
        assert_relative_eq!(d, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn orthogonal_vectors_have_distance_one() {
        let d = cosine_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_relative_eq!(d, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn opposite_vectors_have_distance_two() {
        let d = cosine_distance(&[1.0, 0.0], &[-3.0, 0.0]).unwrap();
        assert_relative_eq!(d, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_vector_is_degenerate() {
        let err = cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]).unwrap_err();
        assert!(matches!(err, crate::error::Error::Degenerate(_)));
    }

    #[test]
    fn distance_gradient_matches_finite_differences() {
        let a = [0.3, -1.2, 0.7];
        let b = [1.1, 0.4, -0.5];
        let (ga, gb) = cosine_distance_grad(&a, &b).unwrap();
        let eps = 1e-6;
        for i in 0..3 {
            let mut ap = a;
            let mut am = a;
            ap[i] += eps;
            am[i] -= eps;
            let fd = (cosine_distance(&ap, &b).unwrap() - cosine_distance(&am, &b).unwrap())
                / (2.0 * eps);
            assert_relative_eq!(ga[i], fd, epsilon = 1e-7);

            let mut bp = b;
            let mut bm = b;
            bp[i] += eps;
            bm[i] -= eps;
            let fd = (cosine_distance(&a, &bp).unwrap() - cosine_distance(&a, &bm).unwrap())
                / (2.0 * eps);
            assert_relative_eq!(gb[i], fd, epsilon = 1e-7);
        }
    }

    #[test]
    fn pearson_of_exact_linear_relation_is_one() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [3.0, 5.0, 7.0, 9.0];
        assert_relative_eq!(pearson(&a, &b).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn pearson_of_negated_relation_is_minus_one() {
        let a = [1.0, 2.0, 3.0];
        let b = [5.0, 3.0, 1.0];
        assert_relative_eq!(pearson(&a, &b).unwrap(), -1.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn similarity_is_scale_invariant(
            vals in proptest::collection::vec(-5.0f64..5.0, 8),
            scale in 0.1f64..10.0,
        ) {
            let a = &vals[..4];
            let b = &vals[4..];
            let na = norm(a);
            let nb = norm(b);
            prop_assume!(na > 1e-3 && nb > 1e-3);
            let scaled: Vec<f64> = a.iter().map(|v| v * scale).collect();
            let s1 = cosine_similarity(a, b).unwrap();
            let s2 = cosine_similarity(&scaled, b).unwrap();
            prop_assert!((s1 - s2).abs() < 1e-9);
        }

        #[test]
        fn similarity_is_symmetric_and_bounded(
            vals in proptest::collection::vec(-5.0f64..5.0, 8),
        ) {
            let a = &vals[..4];
            let b = &vals[4..];
            prop_assume!(norm(a) > 1e-3 && norm(b) > 1e-3);
            let ab = cosine_similarity(a, b).unwrap();
            let ba = cosine_similarity(b, a).unwrap();
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!((-1.0 - 1e-9..=1.0 + 1e-9).contains(&ab));
        }
    }
}
