use crate::error::{Error, Result};
use crate::numkit::{Matrix, Real};

/// Subtracts the per-dimension mean over frames.
pub fn mean_normalize<T: Real>(features: &Matrix<T>) -> Result<Matrix<T>> {
    if features.rows() == 0 || features.cols() == 0 {
        return Err(Error::invalid("mean_normalize needs at least one frame"));
    }
    let n = T::from_usize_lossy(features.rows());
    let mut means = vec![T::zero(); features.cols()];
    for row in features.row_iter() {
        for (m, &v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut out = features.clone();
    for r in 0..out.rows() {
        for (v, &m) in out.row_mut(r).iter_mut().zip(&means) {
            *v -= m;
        }
    }
    Ok(out)
}
