use crate::error::{Error, Result};
use crate::numkit::Real;

/// Denominator floor for the relative error, so that coordinates whose true
/// gradient is zero are compared absolutely.
pub const REL_ERR_FLOOR: f64 = 1e-7;

/// Central-difference gradient of `loss` at `params`.
pub fn numeric_gradient<T: Real>(
    mut loss: impl FnMut(&[T]) -> T,
    params: &[T],
    eps: T,
) -> Result<Vec<T>> {
    let mut p = params.to_vec();
    let two_eps = eps + eps;
    let mut out = Vec::with_capacity(p.len());
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + eps;
        let up = loss(&p);
        p[i] = orig - eps;
        let down = loss(&p);
        p[i] = orig;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::NonFinite("finite-difference loss"));
        }
        out.push((up - down) / two_eps);
    }
    Ok(out)
}

/// Maximum relative error between `analytic` and central differences of
/// `loss`, using `|a - n| / max(|a|, |n|, REL_ERR_FLOOR)` per coordinate.
pub fn finite_diff_check<T: Real>(
    loss: impl FnMut(&[T]) -> T,
    params: &[T],
    analytic: &[T],
    eps: T,
) -> Result<T> {
    if analytic.len() != params.len() {
        return Err(Error::dims("analytic gradient", params.len(), analytic.len()));
    }
    let numeric = numeric_gradient(loss, params, eps)?;
    let floor = T::lit(REL_ERR_FLOOR);
    Ok(numeric
        .iter()
        .zip(analytic)
        .map(|(&n, &a)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(T::zero(), T::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_exact() {
        let p = [0.5, -1.25, 3.0, 1e-3];
        let grad: Vec<f64> = p.iter().map(|v| 2.0 * v).collect();
        let err = finite_diff_check(|q: &[f64]| q.iter().map(|v| v * v).sum(), &p, &grad, 1e-5).unwrap();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn detects_wrong_gradient() {
        let p = [1.0, 2.0];
        let err = finite_diff_check(|q: &[f64]| q[0] * q[1], &p, &[2.0, 2.0], 1e-5).unwrap();
        assert!(err > 0.4);
    }

    #[test]
    fn non_finite_loss_rejected() {
        let p = [0.0];
        assert!(finite_diff_check(|q: &[f64]| q[0].ln(), &p, &[1.0], 1e-5).is_err());
    }
}
