use faer::Mat;

use super::DenseMatrix;
use crate::{Error, Result};

/// Columns whose residual norm, relative to their original norm, falls below
/// this after re-orthogonalization are treated as linearly dependent.
pub const DEPENDENCE_TOL: f64 = 1e-12;

/// Matrix with orthonormal columns.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthonormalBasis(DenseMatrix);

impl OrthonormalBasis {
    /// Validates `‖WᵀW − I‖_F ≤ 1e-10`.
    pub fn new(w: DenseMatrix) -> Result<Self> {
        let defect = orthonormality_defect(&w);
        if defect > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "columns are not orthonormal (‖WᵀW − I‖_F = {defect:.3e})"
            )));
        }
        Ok(Self(w))
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.0
    }

    pub fn rows(&self) -> usize {
        self.0.rows()
    }

    pub fn width(&self) -> usize {
        self.0.cols()
    }
}

/// `‖WᵀW − I‖_F`.
pub fn orthonormality_defect(w: &DenseMatrix) -> f64 {
    let g = w.as_faer().transpose() * w.as_faer();
    let mut acc = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let d = g[(i, j)] - if i == j { 1.0 } else { 0.0 };
            acc += d * d;
        }
    }
    acc.sqrt()
}

/// Orthonormal basis for the column span of `r`, preserving column order.
///
/// Numerically dependent columns (and zero columns) are dropped, so the
/// result may be narrower than `r`. Householder QR is tried first; if any
/// diagonal entry of `R` signals dependence, the columns are processed by
/// Gram–Schmidt with one re-orthogonalization pass instead, which can drop
/// individual columns while keeping the span of the survivors.
pub fn qr_orthonormalize(r: &DenseMatrix) -> Result<OrthonormalBasis> {
    let (m, k) = r.shape();
    let norms: Vec<f64> = (0..k)
        .map(|j| r.as_faer().col(j).iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    if norms.iter().all(|&n| n == 0.0) {
        return Err(Error::EmptyBasis);
    }

    if k <= m && norms.iter().all(|&n| n > 0.0) {
        let qr = r.as_faer().qr();
        let rr = qr.thin_R();
        let independent = (0..k).all(|j| rr[(j, j)].abs() > DEPENDENCE_TOL * norms[j]);
        if independent {
            return Ok(OrthonormalBasis(DenseMatrix::wrap(qr.compute_thin_Q())));
        }
    }
    gram_schmidt(r, &norms)
}

const BLOCK: usize = 64;

/// Blocked classical Gram–Schmidt, two passes against the accepted basis,
/// then sequential two-pass orthogonalization inside each block.
fn gram_schmidt(r: &DenseMatrix, norms: &[f64]) -> Result<OrthonormalBasis> {
    let (m, k) = r.shape();
    let src = r.as_faer();
    let cap = m.min(k);
    let mut q = Mat::<f64>::zeros(m, cap);
    let mut accepted = 0usize;

    let mut start = 0;
    while start < k && accepted < cap {
        let cols: Vec<usize> = (start..(start + BLOCK).min(k))
            .filter(|&j| norms[j] > 0.0)
            .collect();
        start += BLOCK;
        if cols.is_empty() {
            continue;
        }
        let mut block = Mat::from_fn(m, cols.len(), |i, c| src[(i, cols[c])] / norms[cols[c]]);
        if accepted > 0 {
            let qa = q.subcols(0, accepted);
            for _ in 0..2 {
                let coeffs = qa.transpose() * &block;
                block -= qa * &coeffs;
            }
        }
        let block_start = accepted;
        for c in 0..block.ncols() {
            if accepted == cap {
                break;
            }
            let mut v: Vec<f64> = block.col(c).iter().copied().collect();
            for _ in 0..2 {
                for b in block_start..accepted {
                    let qb = q.col(b);
                    let d: f64 = qb.iter().zip(&v).map(|(x, y)| x * y).sum();
                    for (vi, x) in v.iter_mut().zip(qb.iter()) {
                        *vi -= d * x;
                    }
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < DEPENDENCE_TOL {
                continue;
            }
            for (i, x) in v.iter().enumerate() {
                q[(i, accepted)] = x / norm;
            }
            accepted += 1;
        }
    }
    if accepted == 0 {
        return Err(Error::EmptyBasis);
    }
    Ok(OrthonormalBasis(DenseMatrix::wrap(q.subcols(0, accepted).to_owned())))
}
