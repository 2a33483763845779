use faer::Mat;

use super::DenseMatrix;
use crate::{Error, Result};

/// Low-rank matrix `U · diag(s) · Vᵀ` held as thin factors.
///
/// `u` is `rows × r`, `v` is `cols × r`, both with orthonormal columns, and `s`
/// is positive and nonincreasing, so `s` is exactly the nonzero spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct FactoredMatrix {
    rows: usize,
    cols: usize,
    u: DenseMatrix,
    s: Vec<f64>,
    v: DenseMatrix,
}

impl FactoredMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            u: DenseMatrix::zeros(rows, 0),
            s: Vec::new(),
            v: DenseMatrix::zeros(cols, 0),
        }
    }

    /// Assembles a factored matrix from SVD-like parts. Components with a zero
    /// weight are dropped.
    pub fn new(u: DenseMatrix, s: Vec<f64>, v: DenseMatrix) -> Result<Self> {
        if u.cols() != s.len() || v.cols() != s.len() {
            return Err(Error::DimensionMismatch(format!(
                "factors with {} and {} columns for {} weights",
                u.cols(),
                v.cols(),
                s.len()
            )));
        }
        if s.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("singular values"));
        }
        if s.iter().any(|&x| x < 0.0) || s.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::UnsortedSpectrum);
        }
        let keep = s.iter().take_while(|&&x| x > 0.0).count();
        let (rows, cols) = (u.rows(), v.rows());
        Ok(Self {
            rows,
            cols,
            u: u.leading_columns(keep),
            s: s[..keep].to_vec(),
            v: v.leading_columns(keep),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rank(&self) -> usize {
        self.s.len()
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.s
    }

    pub fn u(&self) -> &DenseMatrix {
        &self.u
    }

    pub fn v(&self) -> &DenseMatrix {
        &self.v
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.s.iter().map(|x| x * x).sum()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        (0..self.rank())
            .map(|r| self.u.get(i, r) * self.s[r] * self.v.get(j, r))
            .sum()
    }

    /// Evaluates many entries at once. Rows of `U·diag(s)` and `V` are copied
    /// into contiguous buffers first, so each entry costs one length-`r` dot.
    pub fn entries_at(&self, positions: impl IntoIterator<Item = (usize, usize)>) -> Vec<f64> {
        let r = self.rank();
        if r == 0 {
            return positions.into_iter().map(|_| 0.0).collect();
        }
        let us = row_major_scaled(&self.u, Some(&self.s));
        let vr = row_major_scaled(&self.v, None);
        positions
            .into_iter()
            .map(|(i, j)| {
                let a = &us[i * r..(i + 1) * r];
                let b = &vr[j * r..(j + 1) * r];
                a.iter().zip(b).map(|(x, y)| x * y).sum()
            })
            .collect()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        if self.rank() == 0 {
            return DenseMatrix::zeros(self.rows, self.cols);
        }
        let us = Mat::from_fn(self.rows, self.rank(), |i, r| self.u.get(i, r) * self.s[r]);
        DenseMatrix::wrap(us * self.v.as_faer().transpose())
    }

    /// Frobenius inner product `⟨self, other⟩`, computed from `r₁ × r₂` Gram blocks.
    pub fn inner(&self, other: &FactoredMatrix) -> Result<f64> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        if self.rank() == 0 || other.rank() == 0 {
            return Ok(0.0);
        }
        let uu = self.u.as_faer().transpose() * other.u.as_faer();
        let vv = self.v.as_faer().transpose() * other.v.as_faer();
        let mut acc = 0.0;
        for a in 0..self.rank() {
            for b in 0..other.rank() {
                acc += self.s[a] * uu[(a, b)] * other.s[b] * vv[(a, b)];
            }
        }
        Ok(acc)
    }

    /// `‖self − other‖_F²`, clamped at zero against rounding.
    pub fn dist_sq(&self, other: &FactoredMatrix) -> Result<f64> {
        let cross = self.inner(other)?;
        Ok((self.frobenius_sq() + other.frobenius_sq() - 2.0 * cross).max(0.0))
    }
}

/// Row-major copy of `m`, optionally scaling column `r` by `scale[r]`.
fn row_major_scaled(m: &DenseMatrix, scale: Option<&[f64]>) -> Vec<f64> {
    let (rows, k) = m.shape();
    let mut out = vec![0.0; rows * k];
    let f = m.as_faer();
    for c in 0..k {
        let sc = scale.map_or(1.0, |s| s[c]);
        for (i, &x) in f.col(c).iter().enumerate() {
            out[i * k + c] = x * sc;
        }
    }
    out
}
