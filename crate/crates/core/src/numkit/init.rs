use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numkit::{Matrix, Real};

/// Uniform Glorot initialisation in `±sqrt(6 / (fan_in + fan_out))` for a
/// `fan_out × fan_in` weight matrix.
pub fn glorot_uniform<T: Real>(fan_out: usize, fan_in: usize, seed: u64) -> Result<Matrix<T>> {
    if fan_out == 0 || fan_in == 0 {
        return Err(Error::invalid(format!(
            "glorot_init needs positive dims, got {fan_out}x{fan_in}"
        )));
    }
    let bound = glorot_bound(fan_out, fan_in);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..fan_out * fan_in)
        .map(|_| T::lit(rng.random_range(-bound..=bound)))
        .collect();
    Matrix::from_vec(fan_out, fan_in, data)
}

pub fn glorot_bound(fan_out: usize, fan_in: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}
