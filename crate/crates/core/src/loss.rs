//! The ω-weighted square loss, its gradient, the penalized objective, and
//! evaluation metrics.
//!
//! With `A` a 0-1 observation matrix whose ones sit on Ω,
//!
//! ```text
//! L(X) = (1 − ω)‖X − A‖_F² + (2ω − 1)‖P_Ω(X − A)‖_F²
//! ```
//!
//! which weighs observed ones by ω and every other entry by 1 − ω.

use serde::{Deserialize, Serialize};

use crate::data::{BinaryMatrix, ObservationSet};
use crate::matrix::{DenseMatrix, FactoredMatrix, LowRankPlusSparse, MatrixView, SparseCoo};
use crate::regularizer::{penalty_value, RegularizerSpec};
use crate::{Error, Result};

fn check_shape(x: (usize, usize), a: (usize, usize)) -> Result<()> {
    if x != a {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} model against {}x{} data",
            x.0, x.1, a.0, a.1
        )));
    }
    Ok(())
}

fn check_omega(omega: f64) -> Result<()> {
    if !(omega > 0.0 && omega < 1.0) {
        return Err(Error::InvalidParameter(format!("ω must lie in (0, 1), got {omega}")));
    }
    Ok(())
}

/// `‖X − B‖_F²` for a 0-1 matrix `B`, expanded as `‖X‖² − 2Σ_{B=1} X + nnz(B)`
/// so only the ones of `B` are visited.
fn dist_sq_to_binary<X: MatrixView + ?Sized>(x: &X, b: &BinaryMatrix) -> f64 {
    let on: f64 = x.entries_at(b.positives()).iter().sum();
    (x.frobenius_sq() - 2.0 * on + b.nnz() as f64).max(0.0)
}

pub fn weighted_loss<X: MatrixView + ?Sized>(x: &X, a: &BinaryMatrix, omega: f64) -> Result<f64> {
    check_shape(x.shape(), a.shape())?;
    check_omega(omega)?;
    let on_omega: f64 = x
        .entries_at(a.positives())
        .iter()
        .map(|v| (v - 1.0) * (v - 1.0))
        .sum();
    Ok((1.0 - omega) * dist_sq_to_binary(x, a) + (2.0 * omega - 1.0) * on_omega)
}

/// `∇L = 2(1−ω)(X − A) + 2(2ω−1)P_Ω(X − A)` as `2(1−ω)·X` plus one sparse
/// term on Ω.
pub fn weighted_loss_grad(x: &FactoredMatrix, a: &BinaryMatrix, omega: f64) -> Result<LowRankPlusSparse> {
    check_shape((x.rows(), x.cols()), a.shape())?;
    check_omega(omega)?;
    let values = x.entries_at(a.positives().iter().copied());
    let entries = a
        .positives()
        .iter()
        .zip(values)
        .map(|(&(i, j), v)| (i, j, -2.0 * (1.0 - omega) + 2.0 * (2.0 * omega - 1.0) * (v - 1.0)))
        .collect();
    LowRankPlusSparse::new(x.rows(), x.cols())
        .with_factored(x, 2.0 * (1.0 - omega))?
        .with_sparse(1.0, SparseCoo::from_sorted_unchecked(x.rows(), x.cols(), entries))
}

pub fn weighted_loss_grad_dense(x: &DenseMatrix, a: &BinaryMatrix, omega: f64) -> Result<DenseMatrix> {
    check_shape(x.shape(), a.shape())?;
    check_omega(omega)?;
    let mut g = x.scale(2.0 * (1.0 - omega)).into_faer();
    for &(i, j) in a.positives() {
        let d = x.get(i, j) - 1.0;
        g[(i, j)] = 2.0 * (1.0 - omega) * d + 2.0 * (2.0 * omega - 1.0) * d;
    }
    DenseMatrix::from_faer(g)
}

/// `F(X) = L(X) + λ·Σᵢ r(σᵢ(X))`.
///
/// Factored inputs reuse their stored singular values; dense inputs are
/// decomposed only up to [`DENSE_SPECTRUM_CAP`](crate::matrix::DENSE_SPECTRUM_CAP).
pub fn objective<X: MatrixView + ?Sized>(
    x: &X,
    a: &BinaryMatrix,
    omega: f64,
    lambda: f64,
    spec: &RegularizerSpec,
) -> Result<f64> {
    let loss = weighted_loss(x, a, omega)?;
    if lambda == 0.0 {
        return Ok(loss);
    }
    let sigmas = x.spectrum()?;
    Ok(loss + penalty_value(spec, &sigmas, lambda)?)
}

/// Lipschitz constant of `∇L`: the gradient map scales entries by `2ω` on Ω
/// and `2(1−ω)` elsewhere.
pub fn lipschitz_beta(omega: f64) -> f64 {
    2.0 * omega.max(1.0 - omega)
}

/// `‖X − M‖_F² / (mn)`.
pub fn recovery_error<X: MatrixView + ?Sized>(x: &X, truth: &BinaryMatrix) -> Result<f64> {
    check_shape(x.shape(), truth.shape())?;
    let (m, n) = truth.shape();
    Ok(dist_sq_to_binary(x, truth) / (m * n) as f64)
}

/// `‖P_Ω̄(X − M)‖_F² / ‖P_Ω̄(M)‖_F²` over the held-out set Ω̄.
pub fn masked_mse<X: MatrixView + ?Sized>(x: &X, truth: &BinaryMatrix, heldout: &ObservationSet) -> Result<f64> {
    check_shape(x.shape(), truth.shape())?;
    check_shape((heldout.rows(), heldout.cols()), truth.shape())?;
    let listed = heldout.listed();
    let values = x.entries_at(listed);
    let mut listed_err = 0.0;
    let mut listed_pos = 0usize;
    for (&(i, j), v) in listed.iter().zip(values) {
        let t = if truth.get(i, j) {
            listed_pos += 1;
            1.0
        } else {
            0.0
        };
        listed_err += (v - t) * (v - t);
    }
    let (num, den) = if heldout.is_complement() {
        (dist_sq_to_binary(x, truth) - listed_err, truth.nnz() - listed_pos)
    } else {
        (listed_err, listed_pos)
    };
    if den == 0 {
        return Err(Error::DegenerateTestMask);
    }
    Ok(num.max(0.0) / den as f64)
}

/// Empirical weighted label-dependent error
/// `(1/mn)·Σ[(1−ω)·1{x=1, a=0} + ω·1{x=0, a=1}]`.
pub fn weighted_label_error(xbin: &BinaryMatrix, a: &BinaryMatrix, omega: f64) -> Result<f64> {
    check_shape(xbin.shape(), a.shape())?;
    let both = xbin.overlap(a);
    let false_pos = (xbin.nnz() - both) as f64;
    let false_neg = (a.nnz() - both) as f64;
    let (m, n) = a.shape();
    Ok(((1.0 - omega) * false_pos + omega * false_neg) / (m * n) as f64)
}

/// Loss weight for sampling rate δ: `ω = δ/2`.
pub fn choose_omega(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!("sampling rate must lie in (0, 1], got {delta}")));
    }
    Ok(delta / 2.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub mse: f64,
    pub recovery_error: f64,
    pub weighted_label_error: f64,
    pub elapsed_seconds: f64,
    pub final_rank: usize,
}

/// Masked MSE on `heldout`, recovery error against `truth`, and the label
/// error of the model binarized at `cut` against the observations.
pub fn evaluate(
    model: &FactoredMatrix,
    truth: &BinaryMatrix,
    observed: &BinaryMatrix,
    heldout: &ObservationSet,
    omega: f64,
    cut: f64,
    elapsed_seconds: f64,
) -> Result<EvaluationReport> {
    let xbin = crate::data::binarize_predictions(model, cut);
    Ok(EvaluationReport {
        mse: masked_mse(model, truth, heldout)?,
        recovery_error: recovery_error(model, truth)?,
        weighted_label_error: weighted_label_error(&xbin, observed, omega)?,
        elapsed_seconds,
        final_rank: model.rank(),
    })
}
