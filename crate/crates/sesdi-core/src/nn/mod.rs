//! Dense tensor math, MLP layers with manual forward/backward, Adam, and a
//! finite-difference gradient checker.

pub mod adam;
pub mod gradcheck;
pub mod matrix;
pub mod mlp;

pub use adam::{adam_step, AdamState};
pub use gradcheck::{grad_check, grad_check_corrupted};
pub use matrix::Matrix;
pub use mlp::{
    mlp_backward, mlp_backward_batch, mlp_forward, mlp_forward_batch, Activation, DenseLayer,
    MlpCache, MlpParams, MlpSpec,
};
