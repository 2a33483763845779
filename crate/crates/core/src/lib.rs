//! Positive-unlabeled binary matrix completion with nonconvex spectral
//! regularizers.
//!
//! Only a subset of the one-entries of a binary target matrix is observed;
//! everything else is unlabeled. The model minimizes an ω-weighted square
//! loss plus a nonconvex penalty on the singular values (truncated nuclear
//! norm, capped-ℓ1, log-sum, or the convex nuclear norm as a baseline).
//!
//! Two solvers share the same building blocks:
//!
//! * [`solver::fit_basic`] runs plain proximal gradient with a full SVD per
//!   iteration and serves as the reference path.
//! * [`solver::fit_accel`] adds momentum, λ-continuation, a warm-started power
//!   method and a projected thresholding step that only ever touches
//!   low-rank-plus-sparse operators.

pub mod cli;
pub mod data;
pub mod error;
pub mod loss;
pub mod matrix;
pub mod regularizer;
pub mod solver;

pub use error::{Error, Result};
