use super::{qr_orthonormalize, DenseMatrix, LowRankPlusSparse, OrthonormalBasis};
use crate::{Error, Result};

/// Power method with re-orthonormalization at every step.
///
/// Starting from `R₁ = Z·Y`, repeats `W_h = QR(R_h)`, `R_{h+1} = Z(ZᵀW_h)` and
/// returns `W_H`. Passing the previous iterations' right singular vectors as
/// `y` gives the warm start. A start block wider than `min(m, n)` is clamped.
pub fn power_method(
    z: &LowRankPlusSparse,
    y: &DenseMatrix,
    iterations: usize,
) -> Result<OrthonormalBasis> {
    if iterations == 0 {
        return Err(Error::InvalidParameter("power method needs at least one iteration".into()));
    }
    if y.cols() == 0 {
        return Err(Error::InvalidParameter("power method needs a nonempty start block".into()));
    }
    if y.rows() != z.cols() {
        return Err(Error::DimensionMismatch(format!(
            "start block has {} rows for an operator with {} columns",
            y.rows(),
            z.cols()
        )));
    }
    let limit = z.rows().min(z.cols());
    let clamped;
    let y = if y.cols() > limit {
        log::warn!("power method: start block width {} clamped to {limit}", y.cols());
        clamped = y.leading_columns(limit);
        &clamped
    } else {
        y
    };

    let mut r = z.apply(y)?;
    let mut w = qr_orthonormalize(&r)?;
    for _ in 1..iterations {
        r = z.apply(&z.apply_transpose(w.matrix())?)?;
        w = qr_orthonormalize(&r)?;
    }
    Ok(w)
}
