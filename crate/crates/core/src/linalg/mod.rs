//! Dense matrix core: full SVD oracle for desk-scale matrices, power
//! iteration for the top singular value, randomized top-k SVD, symmetric
//! eigendecomposition, and the deterministic random source everything else
//! draws from.
//!
//! All operations here are pure functions of their inputs and safe to call
//! concurrently; [`RandomSource`] is the one piece of single-owner mutable
//! state.

mod eigen;
mod matrix;
mod power;
mod randomized;
mod rng;
mod svd;

pub use eigen::{symmetric_eigen, symmetric_eigenvalues, SymmetricEigen};
pub use matrix::{dot, frobenius_norm, norm, normalize, DenseMatrix};
pub use power::{power_iteration_top, PowerIteration, POWER_DEFAULT_MAX_ITER, POWER_DEFAULT_TOL};
pub use randomized::{
    orthonormal_columns, randomized_topk_svd, DDD_DEFAULT_OVERSAMPLE, DDD_DEFAULT_POWER_ITERS,
};
pub use rng::RandomSource;
pub use svd::{full_svd, SvdFactors, SVD_DIM_CAP, SVD_MAX_SWEEPS};
