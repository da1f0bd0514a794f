//! Deterministic numeric core: dense layers with manual gradients,
//! activations and losses, Adam, cyclical learning rate, Glorot
//! initialisation and a finite-difference gradient checker.

mod activation;
mod adam;
mod dense;
mod gradcheck;
mod init;
mod matrix;
mod scalar;
mod schedule;

pub use activation::{argmax, cross_entropy, cross_entropy_with_grad, log_softmax, softmax};
pub use adam::{AdamConfig, AdamState};
pub use dense::{Activation, DenseGrads, DenseLayer, DenseNet, ForwardCache, Parameters};
pub use gradcheck::{finite_diff_check, numeric_gradient, REL_ERR_FLOOR};
pub use init::{glorot_bound, glorot_uniform};
pub use matrix::Matrix;
pub use scalar::{log_add_exp, log_sum_exp, Real};
pub use schedule::{cyclical_lr, LrMode, LrSchedule};
