//! Spectral Sentinel: stable-rank diagnostics, gradient-spike detection,
//! and singular-spectrum smoothing for training-stability experiments.
//!
//! The toolkit revolves around one quantity, the *stable rank*
//! `SR(W) = ‖W‖_F² / σ₁(W)²`, a smooth surrogate for matrix rank. A low
//! stable rank means a few singular directions dominate the matrix. The
//! crate provides:
//!
//! - [`linalg`] — a dense matrix core: a full SVD oracle, power iteration
//!   for σ₁, randomized top-k SVD, and symmetric eigendecomposition.
//! - [`diagnostics`] — stable rank, alignment between the dominant
//!   directions of a weight matrix and of token representations, and an
//!   EWMA gradient tracker that flags norm spikes.
//! - [`smoothing`] — the protection step: extract the dominant singular
//!   block, smooth its spectrum with a policy, and reassemble the matrix.
//! - [`toymodel`] — a one-layer attention sandbox with a truncated-linear
//!   softmax, closed-form and Monte Carlo gradients of the attention
//!   score parameter, and finite-difference oracles.
//! - [`theoremlab`] — numerical checks of the perturbation-theory
//!   predictions tying those pieces together, plus a small simulator for
//!   the instability feedback loop and its rescue.
//!
//! Everything randomized draws from [`linalg::RandomSource`]; identical
//! seeds reproduce results bit for bit within one build.
//!
//! ```
//! use spectral_sentinel::diagnostics::stable_rank;
//! use spectral_sentinel::linalg::DenseMatrix;
//!
//! let report = stable_rank(&DenseMatrix::identity(4)).unwrap();
//! assert!((report.stable_rank - 4.0).abs() < 1e-9);
//! ```

pub mod diagnostics;
mod error;
pub mod linalg;
pub mod smoothing;
pub mod theoremlab;
pub mod toymodel;

pub use error::{Error, Result};
