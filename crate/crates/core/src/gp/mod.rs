//! Matérn-3/2 Gaussian-process regression over scalar time inputs.
//!
//! Two interchangeable backends factor the noisy Gram matrix: a dense
//! Cholesky and a hierarchical off-diagonal low-rank (HODLR) factorization.
//! Hyperparameters are fitted with a box-constrained L-BFGS on the log
//! marginal likelihood.

mod channel;
mod factor;
mod hodlr;
mod kernel;
pub mod lbfgsb;
mod optimize;

use thiserror::Error;

pub use channel::{fit, fit_shared, FittedChannel, TrainingSet};
pub use factor::{
    factor, write_matrix, Backend, Factorization, DEFAULT_HODLR_TOL, DEFAULT_LEAF_SIZE,
    JITTER_MAX, JITTER_START,
};
pub use kernel::{gram, matern32, KernelParams};
pub use optimize::{
    likelihood_grid, optimize_hyperparams, optimize_joint, Bounds, GradientMode, JointObjective,
    OptimizeOutcome, OptimizerSettings, FD_STEP,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GpError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("factorization failed even with diagonal jitter {jitter:e}")]
    NumericalFailure { jitter: f64 },
}
