use crate::error::{Error, Result};
use crate::numkit::Real;

fn check_finite<T: Real>(z: &[T], what: &'static str) -> Result<()> {
    if z.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Softmax with max-subtraction.
pub fn softmax<T: Real>(z: &[T]) -> Result<Vec<T>> {
    check_finite(z, "softmax input")?;
    let max = z.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = z.iter().map(|&v| (v - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// `z_i - logsumexp(z)`.
pub fn log_softmax<T: Real>(z: &[T]) -> Result<Vec<T>> {
    check_finite(z, "log_softmax input")?;
    let max = z.iter().copied().fold(T::neg_infinity(), T::max);
    let total: T = z.iter().map(|&v| (v - max).exp()).sum();
    let lse = max + total.ln();
    Ok(z.iter().map(|&v| (v - lse).min(T::zero())).collect())
}

/// Negative log-likelihood of `label` under a log-probability vector.
pub fn cross_entropy<T: Real>(log_probs: &[T], label: usize) -> Result<T> {
    let lp = log_probs.get(label).ok_or_else(|| {
        Error::invalid(format!(
            "label {label} out of range for {} classes",
            log_probs.len()
        ))
    })?;
    Ok(-*lp)
}

/// Cross-entropy straight from logits, together with its gradient
/// `softmax(z) - onehot(label)`.
pub fn cross_entropy_with_grad<T: Real>(logits: &[T], label: usize) -> Result<(T, Vec<T>)> {
    let lp = log_softmax(logits)?;
    let loss = cross_entropy(&lp, label)?;
    let mut grad: Vec<T> = lp.iter().map(|&v| v.exp()).collect();
    grad[label] -= T::one();
    Ok((loss, grad))
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax<T: Real>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn softmax_uniform_and_stable() {
        let p = softmax(&[0.0, 0.0, 0.0]).unwrap();
        for v in p {
            assert_abs_diff_eq!(v, 1.0 / 3.0, epsilon = 1e-15);
        }
        let p = softmax(&[1000.0_f64, 0.0]).unwrap();
        assert!(p.iter().all(|v| v.is_finite()));
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-12);
        assert!(p[1] < 1e-300 || p[1] == 0.0);
    }

    #[test]
    fn nan_rejected() {
        assert!(softmax(&[f64::NAN, 0.0]).is_err());
        assert!(log_softmax(&[0.0, f64::NAN]).is_err());
    }

    #[test]
    fn log_softmax_known_values() {
        let l = log_softmax(&[0.0_f64, 0.0]).unwrap();
        assert_abs_diff_eq!(l[0], -std::f64::consts::LN_2, epsilon = 1e-15);
        assert_abs_diff_eq!(l[1], -0.6931, epsilon = 1e-4);
        // -ln(1 + e^-10)
        let l = log_softmax(&[10.0_f64, 0.0]).unwrap();
        assert_abs_diff_eq!(l[0], -4.539889921686465e-05, epsilon = 1e-15);
    }

    #[test]
    fn log_softmax_matches_extended_precision_sum() {
        // Oracle: logsumexp accumulated as an exact-ish compensated sum of
        // exp terms without max subtraction, on inputs small enough not to overflow.
        let z = [0.3_f64, -1.7, 2.2, 0.0, -0.4];
        let mut sum = 0.0_f64;
        let mut comp = 0.0_f64;
        for &v in &z {
            let y = v.exp() - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        let lse = sum.ln();
        let l = log_softmax(&z).unwrap();
        for (li, zi) in l.iter().zip(z) {
            assert_abs_diff_eq!(*li, zi - lse, epsilon = 1e-14);
        }
    }

    #[test]
    fn cross_entropy_cases() {
        assert_eq!(cross_entropy(&[0.0_f64, f64::NEG_INFINITY], 0).unwrap(), 0.0);
        let third = (1.0_f64 / 3.0).ln();
        assert_abs_diff_eq!(
            cross_entropy(&[third; 3], 1).unwrap(),
            3.0_f64.ln(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(3.0_f64.ln(), 1.0986, epsilon = 1e-4);
        assert!(cross_entropy(&[0.0_f64], 1).is_err());
        let mut prev = f64::INFINITY;
        for k in 0..10 {
            let z = [k as f64 * 0.5, 1.0, -1.0];
            let (l, _) = cross_entropy_with_grad(&z, 0).unwrap();
            assert!(l < prev);
            prev = l;
        }
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[2.0, 2.0]), 0);
    }

    proptest! {
        #[test]
        fn softmax_sums_to_one(z in prop::collection::vec(-50.0_f64..50.0, 1..20)) {
            let p = softmax(&z).unwrap();
            let s: f64 = p.iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-6);
            prop_assert!(p.iter().all(|&v| v > 0.0 && v <= 1.0));
        }

        #[test]
        fn log_softmax_normalised(z in prop::collection::vec(-50.0_f64..50.0, 1..20)) {
            let l = log_softmax(&z).unwrap();
            prop_assert!(l.iter().all(|&v| v <= 0.0));
            let s: f64 = l.iter().map(|v| v.exp()).sum();
            prop_assert!((s - 1.0).abs() < 1e-6);
        }

        #[test]
        fn softmax_shift_invariant(z in prop::collection::vec(-20.0_f64..20.0, 1..10), c in -30.0_f64..30.0) {
            let a = softmax(&z).unwrap();
            let shifted: Vec<f64> = z.iter().map(|v| v + c).collect();
            let b = softmax(&shifted).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
