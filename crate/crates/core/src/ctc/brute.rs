use crate::ctc::{collapse, loss::validate};
use crate::error::{Error, Result};
use crate::numkit::{log_sum_exp, Matrix, Real};

/// Largest number of paths the enumeration will visit.
pub const MAX_PATHS: usize = 1_000_000;

/// CTC loss by enumerating every length-`T` path, keeping those that
/// collapse to `target`. Test-scale only.
pub fn ctc_bruteforce<T: Real>(log_probs: &Matrix<T>, target: &[usize]) -> Result<T> {
    validate(log_probs, target)?;
    let (frames, n_sym) = (log_probs.rows(), log_probs.cols());
    let n_paths = (0..frames).try_fold(1usize, |acc, _| acc.checked_mul(n_sym).filter(|&n| n <= MAX_PATHS));
    let n_paths = n_paths.ok_or_else(|| {
        Error::invalid(format!("{n_sym}^{frames} paths exceed the enumeration limit"))
    })?;

    let mut path = vec![0usize; frames];
    let mut kept = Vec::new();
    for code in 0..n_paths {
        let mut c = code;
        for slot in path.iter_mut().rev() {
            *slot = c % n_sym;
            c /= n_sym;
        }
        if collapse(&path) == target {
            kept.push(path.iter().enumerate().map(|(t, &k)| log_probs[(t, k)]).sum::<T>());
        }
    }
    Ok(-log_sum_exp(&kept))
}
