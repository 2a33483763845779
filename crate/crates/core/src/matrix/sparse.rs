use faer::{Mat, MatRef};

use super::DenseMatrix;
use crate::{Error, Result};

/// Coordinate-format sparse matrix.
///
/// Entries are kept sorted by `(row, col)`. Duplicates are rejected at
/// construction so that the pattern always denotes a set of positions.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseCoo {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseCoo {
    pub fn new(rows: usize, cols: usize, mut entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(i, j, v) in &entries {
            if i >= rows || j >= cols {
                return Err(Error::IndexOutOfRange { i, j, rows, cols });
            }
            if !v.is_finite() {
                return Err(Error::NonFinite("sparse matrix"));
            }
        }
        entries.sort_unstable_by_key(|&(i, j, _)| (i, j));
        if let Some(w) = entries.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::DuplicateEntry(w[0].0, w[0].1));
        }
        Ok(Self { rows, cols, entries })
    }

    /// Builds from entries already known to be sorted, unique, in range and finite.
    pub(crate) fn from_sorted_unchecked(
        rows: usize,
        cols: usize,
        entries: Vec<(usize, usize, f64)>,
    ) -> Self {
        debug_assert!(entries
            .windows(2)
            .all(|w| (w[0].0, w[0].1) < (w[1].0, w[1].1)));
        debug_assert!(entries
            .iter()
            .all(|&(i, j, v)| i < rows && j < cols && v.is_finite()));
        Self { rows, cols, entries }
    }

    pub fn empty(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: Vec::new() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn matvec(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} for {} columns",
                b.len(),
                self.cols
            )));
        }
        let mut out = vec![0.0; self.rows];
        for &(i, j, v) in &self.entries {
            out[i] += v * b[j];
        }
        Ok(out)
    }

    pub fn transpose_matvec(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} for {} rows",
                b.len(),
                self.rows
            )));
        }
        let mut out = vec![0.0; self.cols];
        for &(i, j, v) in &self.entries {
            out[j] += v * b[i];
        }
        Ok(out)
    }

    /// Accumulates `coeff · S · Y` into `out` (`rows × k`).
    pub(crate) fn accumulate_product(&self, coeff: f64, y: &DenseMatrix, out: &mut Mat<f64>) {
        self.accumulate(coeff, y, out, false);
    }

    /// Accumulates `coeff · Sᵀ · W` into `out` (`cols × k`).
    pub(crate) fn accumulate_transpose_product(&self, coeff: f64, w: &DenseMatrix, out: &mut Mat<f64>) {
        self.accumulate(coeff, w, out, true);
    }

    // Works on row-major copies so each entry touches two contiguous
    // length-k rows.
    fn accumulate(&self, coeff: f64, b: &DenseMatrix, out: &mut Mat<f64>, transpose: bool) {
        let k = b.cols();
        if k == 0 || self.entries.is_empty() {
            return;
        }
        let src = to_row_major(b.as_faer());
        let mut acc = vec![0.0; out.nrows() * k];
        for &(i, j, v) in &self.entries {
            let (dst, from) = if transpose { (j, i) } else { (i, j) };
            let row = &mut acc[dst * k..(dst + 1) * k];
            for (a, x) in row.iter_mut().zip(&src[from * k..(from + 1) * k]) {
                *a += v * x;
            }
        }
        for c in 0..k {
            for r in 0..out.nrows() {
                out[(r, c)] += coeff * acc[r * k + c];
            }
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = Mat::zeros(self.rows, self.cols);
        for &(i, j, v) in &self.entries {
            m[(i, j)] = v;
        }
        DenseMatrix::wrap(m)
    }
}

fn to_row_major(m: MatRef<'_, f64>) -> Vec<f64> {
    let k = m.ncols();
    let mut out = vec![0.0; m.nrows() * k];
    for c in 0..k {
        for (r, &x) in m.col(c).iter().enumerate() {
            out[r * k + c] = x;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates_and_out_of_range() {
        assert!(matches!(
            SparseCoo::new(3, 3, vec![(0, 1, 1.0), (2, 2, 1.0), (0, 1, 2.0)]),
            Err(Error::DuplicateEntry(0, 1))
        ));
        assert!(matches!(
            SparseCoo::new(3, 3, vec![(3, 0, 1.0)]),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(SparseCoo::new(2, 2, vec![(0, 0, f64::INFINITY)]).is_err());
    }

    #[test]
    fn matvec_against_dense() {
        let s = SparseCoo::new(3, 4, vec![(2, 3, 1.5), (0, 0, -1.0), (1, 2, 2.0)]).unwrap();
        let d = s.to_dense();
        let b = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(s.matvec(&b).unwrap(), d.matvec(&b).unwrap());
        let c = [1.0, -1.0, 2.0];
        assert_eq!(
            s.transpose_matvec(&c).unwrap(),
            d.transpose().matvec(&c).unwrap()
        );
        assert!(s.matvec(&c).is_err());
    }
}
