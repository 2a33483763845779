use faer::{Mat, MatRef};

use crate::{Error, Result};

/// Dense real matrix with finite entries.
///
/// Thin wrapper over a column-major `faer` matrix. Indexing is `(row, col)`;
/// [`DenseMatrix::from_row_major`] and [`DenseMatrix::to_row_major`] are the
/// only places where a flat layout is exposed.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix(Mat<f64>);

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(Mat::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(Mat::identity(n, n))
    }

    /// Builds a matrix entry by entry. Panics if `f` yields a non-finite value.
    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> f64) -> Self {
        let m = Mat::from_fn(rows, cols, f);
        assert!(all_finite(m.as_ref()), "DenseMatrix::from_fn produced a non-finite entry");
        Self(m)
    }

    pub fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dense matrix"));
        }
        Ok(Self(Mat::from_fn(rows, cols, |i, j| data[i * cols + j])))
    }

    /// Wraps a `faer` matrix, rejecting non-finite entries.
    pub fn from_faer(m: Mat<f64>) -> Result<Self> {
        if !all_finite(m.as_ref()) {
            return Err(Error::NonFinite("dense matrix"));
        }
        Ok(Self(m))
    }

    /// Wraps a `faer` matrix produced by arithmetic on finite inputs.
    pub(crate) fn wrap(m: Mat<f64>) -> Self {
        debug_assert!(all_finite(m.as_ref()));
        Self(m)
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows(), self.cols())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_faer(&self) -> MatRef<'_, f64> {
        self.0.as_ref()
    }

    pub fn into_faer(self) -> Mat<f64> {
        self.0
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows()).map(|i| self.0[(i, j)]).collect()
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose().to_owned())
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<Self> {
        if self.cols() != rhs.rows() {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows(),
                self.cols(),
                rhs.rows(),
                rhs.cols()
            )));
        }
        Ok(Self(&self.0 * &rhs.0))
    }

    /// `selfᵀ · rhs` without forming the transpose.
    pub fn t_matmul(&self, rhs: &DenseMatrix) -> Result<Self> {
        if self.rows() != rhs.rows() {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply ({}x{})ᵀ by {}x{}",
                self.rows(),
                self.cols(),
                rhs.rows(),
                rhs.cols()
            )));
        }
        Ok(Self(self.0.transpose() * &rhs.0))
    }

    pub fn matvec(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.cols() {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} for a {}x{} matrix",
                b.len(),
                self.rows(),
                self.cols()
            )));
        }
        let mut out = vec![0.0; self.rows()];
        for (j, &bj) in b.iter().enumerate() {
            if bj == 0.0 {
                continue;
            }
            let col = self.0.col(j);
            for (o, &a) in out.iter_mut().zip(col.iter()) {
                *o += a * bj;
            }
        }
        Ok(out)
    }

    pub fn sub(&self, rhs: &DenseMatrix) -> Result<Self> {
        self.check_same_shape(rhs)?;
        Ok(Self(&self.0 - &rhs.0))
    }

    pub fn add(&self, rhs: &DenseMatrix) -> Result<Self> {
        self.check_same_shape(rhs)?;
        Ok(Self(&self.0 + &rhs.0))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self(Mat::from_fn(self.rows(), self.cols(), |i, j| c * self.0[(i, j)]))
    }

    pub fn frobenius_sq(&self) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.cols() {
            for &v in self.0.col(j).iter() {
                acc += v * v;
            }
        }
        acc
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        let mut best = 0.0_f64;
        for j in 0..self.cols() {
            for &v in self.0.col(j).iter() {
                best = best.max(v.abs());
            }
        }
        best
    }

    /// Copies the leading `k` columns.
    pub fn leading_columns(&self, k: usize) -> Self {
        let k = k.min(self.cols());
        Self(self.0.subcols(0, k).to_owned())
    }

    /// Horizontal concatenation `[self, rhs]`.
    pub fn hstack(&self, rhs: &DenseMatrix) -> Result<Self> {
        if self.rows() != rhs.rows() {
            return Err(Error::DimensionMismatch(format!(
                "cannot stack {} rows next to {} rows",
                self.rows(),
                rhs.rows()
            )));
        }
        let left = self.cols();
        Ok(Self(Mat::from_fn(self.rows(), left + rhs.cols(), |i, j| {
            if j < left {
                self.0[(i, j)]
            } else {
                rhs.0[(i, j - left)]
            }
        })))
    }

    fn check_same_shape(&self, rhs: &DenseMatrix) -> Result<()> {
        if self.shape() != rhs.shape() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows(),
                self.cols(),
                rhs.rows(),
                rhs.cols()
            )));
        }
        Ok(())
    }
}

fn all_finite(m: MatRef<'_, f64>) -> bool {
    (0..m.ncols()).all(|j| m.col(j).iter().all(|v| v.is_finite()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_round_trip() {
        let data = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let m = DenseMatrix::from_row_major(2, 3, &data).unwrap();
        assert_eq!(m.get(1, 0), 4.0);
        assert_eq!(m.to_row_major(), data);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            DenseMatrix::from_row_major(2, 2, &[1.0; 3]),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            DenseMatrix::from_row_major(1, 2, &[1.0, f64::NAN]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn products_agree() {
        let a = DenseMatrix::from_fn(4, 3, |i, j| (i as f64) - 2.0 * j as f64);
        let b = DenseMatrix::from_fn(4, 2, |i, j| 1.0 + (i * j) as f64);
        let direct = a.transpose().matmul(&b).unwrap();
        let fused = a.t_matmul(&b).unwrap();
        assert!(direct.sub(&fused).unwrap().max_abs() < 1e-14);

        let v = [1.0, -1.0, 0.5];
        let mv = a.matvec(&v).unwrap();
        for (i, x) in mv.iter().enumerate() {
            let expect: f64 = (0..3).map(|j| a.get(i, j) * v[j]).sum();
            assert!((x - expect).abs() < 1e-14);
        }
        assert!(a.matmul(&a).is_err());
    }
}
