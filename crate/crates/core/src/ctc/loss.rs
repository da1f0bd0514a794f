//! Log-space CTC over the blank-interleaved target `ε t1 ε t2 ε … tU ε`.

use crate::ctc::BLANK;
use crate::error::{Error, Result};
use crate::numkit::{log_sum_exp, Matrix, Real};

/// Minimum number of frames needed to emit `target`: one per label plus one
/// separating blank for each adjacent repeat.
pub fn required_frames(target: &[usize]) -> usize {
    target.len() + target.windows(2).filter(|w| w[0] == w[1]).count()
}

pub fn is_feasible(target: &[usize], frames: usize) -> bool {
    required_frames(target) <= frames
}

pub(crate) fn validate<T: Real>(log_probs: &Matrix<T>, target: &[usize]) -> Result<()> {
    let n_sym = log_probs.cols();
    if n_sym == 0 {
        return Err(Error::invalid("log_probs has no symbol columns"));
    }
    if let Some(&bad) = target.iter().find(|&&k| k == BLANK || k >= n_sym) {
        return Err(Error::invalid(format!(
            "target symbol {bad} is blank or outside 0..{n_sym}"
        )));
    }
    let tol = 1e-6_f64.max(100.0 * T::epsilon().as_f64() * n_sym as f64);
    for (t, row) in log_probs.row_iter().enumerate() {
        if row.iter().any(|v| v.is_nan() || *v > T::zero() + T::lit(tol)) {
            return Err(Error::invalid(format!("frame {t} holds invalid log-probabilities")));
        }
        let mass: f64 = row.iter().map(|v| v.exp().as_f64()).sum();
        if (mass - 1.0).abs() > tol {
            return Err(Error::invalid(format!(
                "frame {t} log-probabilities exp-sum to {mass}, expected 1"
            )));
        }
    }
    Ok(())
}

fn extended(target: &[usize]) -> Vec<usize> {
    let mut ext = Vec::with_capacity(2 * target.len() + 1);
    ext.push(BLANK);
    for &k in target {
        ext.push(k);
        ext.push(BLANK);
    }
    ext
}

/// Whether state `s` may be entered directly from `s - 2`.
#[inline]
fn can_skip(ext: &[usize], s: usize) -> bool {
    s >= 2 && ext[s] != BLANK && ext[s] != ext[s - 2]
}

/// `alpha[t][s]`: log mass of path prefixes ending in state `s` at frame `t`,
/// emission at `t` included.
fn alphas<T: Real>(lp: &Matrix<T>, ext: &[usize]) -> Vec<Vec<T>> {
    let n_frames = lp.rows();
    let n_states = ext.len();
    let ninf = T::neg_infinity();
    let mut alpha = vec![vec![ninf; n_states]; n_frames];
    alpha[0][0] = lp[(0, ext[0])];
    if n_states > 1 {
        alpha[0][1] = lp[(0, ext[1])];
    }
    for t in 1..n_frames {
        for s in 0..n_states {
            let prev = &alpha[t - 1];
            let mut acc = [prev[s], ninf, ninf];
            if s >= 1 {
                acc[1] = prev[s - 1];
            }
            if can_skip(ext, s) {
                acc[2] = prev[s - 2];
            }
            let m = log_sum_exp(&acc);
            alpha[t][s] = if m == ninf { ninf } else { m + lp[(t, ext[s])] };
        }
    }
    alpha
}

/// `beta[t][s]`: log mass of path suffixes after frame `t` given state `s`
/// at `t`, emission at `t` excluded.
fn betas<T: Real>(lp: &Matrix<T>, ext: &[usize]) -> Vec<Vec<T>> {
    let n_frames = lp.rows();
    let n_states = ext.len();
    let ninf = T::neg_infinity();
    let mut beta = vec![vec![ninf; n_states]; n_frames];
    beta[n_frames - 1][n_states - 1] = T::zero();
    if n_states > 1 {
        beta[n_frames - 1][n_states - 2] = T::zero();
    }
    for t in (0..n_frames - 1).rev() {
        for s in 0..n_states {
            let next = &beta[t + 1];
            let mut acc = [ninf; 3];
            acc[0] = next[s] + lp[(t + 1, ext[s])];
            if s + 1 < n_states {
                acc[1] = next[s + 1] + lp[(t + 1, ext[s + 1])];
            }
            if s + 2 < n_states && can_skip(ext, s + 2) {
                acc[2] = next[s + 2] + lp[(t + 1, ext[s + 2])];
            }
            beta[t][s] = log_sum_exp(&acc);
        }
    }
    beta
}

fn total_log_prob<T: Real>(alpha_last: &[T]) -> T {
    let n = alpha_last.len();
    if n == 1 {
        alpha_last[0]
    } else {
        log_sum_exp(&[alpha_last[n - 1], alpha_last[n - 2]])
    }
}

/// `-ln P(target | x)` from per-frame log-probabilities (`frames × |S|`).
/// An infeasible target yields `+inf`.
pub fn ctc_forward_loss<T: Real>(log_probs: &Matrix<T>, target: &[usize]) -> Result<T> {
    validate(log_probs, target)?;
    if !is_feasible(target, log_probs.rows()) {
        return Ok(T::infinity());
    }
    if log_probs.rows() == 0 {
        return Ok(T::zero());
    }
    let ext = extended(target);
    let alpha = alphas(log_probs, &ext);
    Ok(-total_log_prob(&alpha[alpha.len() - 1]))
}

/// Loss together with the posterior symbol occupancy `gamma[t][k]`, the
/// probability that frame `t` emits symbol `k` given the target.
pub fn ctc_posteriors<T: Real>(log_probs: &Matrix<T>, target: &[usize]) -> Result<(T, Matrix<T>)> {
    validate(log_probs, target)?;
    let needed = required_frames(target);
    if needed > log_probs.rows() || log_probs.rows() == 0 {
        return Err(Error::Infeasible {
            needed: needed.max(1),
            frames: log_probs.rows(),
        });
    }
    let ext = extended(target);
    let alpha = alphas(log_probs, &ext);
    let beta = betas(log_probs, &ext);
    let log_p = total_log_prob(&alpha[alpha.len() - 1]);
    if !log_p.is_finite() {
        return Err(Error::NonFinite("CTC target probability"));
    }
    let mut gamma = Matrix::zeros(log_probs.rows(), log_probs.cols());
    for t in 0..log_probs.rows() {
        for (s, &k) in ext.iter().enumerate() {
            let v = alpha[t][s] + beta[t][s] - log_p;
            if v > T::neg_infinity() {
                gamma[(t, k)] += v.exp();
            }
        }
    }
    Ok((-log_p, gamma))
}

/// Gradient of the CTC loss with respect to the logits that produced
/// `log_probs` through a per-frame log-softmax: `softmax - gamma`.
pub fn ctc_backward_grad<T: Real>(log_probs: &Matrix<T>, target: &[usize]) -> Result<(T, Matrix<T>)> {
    let (loss, gamma) = ctc_posteriors(log_probs, target)?;
    let mut grad = gamma;
    for t in 0..grad.rows() {
        for k in 0..grad.cols() {
            grad[(t, k)] = log_probs[(t, k)].exp() - grad[(t, k)];
        }
    }
    Ok((loss, grad))
}
