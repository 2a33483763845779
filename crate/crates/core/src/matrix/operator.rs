use faer::Mat;

use super::{DenseMatrix, FactoredMatrix, SparseCoo};
use crate::{Error, Result};

/// `coeff · left · right` with `left: m × r` and `right: r × n`.
#[derive(Clone, Debug)]
pub struct LowRankTerm {
    pub left: DenseMatrix,
    pub right: DenseMatrix,
    pub coeff: f64,
}

/// Implicit `m × n` matrix made of low-rank terms plus weighted sparse terms.
///
/// Products never materialize the `m × n` matrix: a matvec costs
/// `O((m + n)·r + nnz)`, where `r` is the total rank of the low-rank terms.
#[derive(Clone, Debug)]
pub struct LowRankPlusSparse {
    rows: usize,
    cols: usize,
    factors: Vec<LowRankTerm>,
    sparse: Vec<(f64, SparseCoo)>,
}

impl LowRankPlusSparse {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols, factors: Vec::new(), sparse: Vec::new() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn factors(&self) -> &[LowRankTerm] {
        &self.factors
    }

    pub fn sparse_terms(&self) -> &[(f64, SparseCoo)] {
        &self.sparse
    }

    /// Total rank of the low-rank part.
    pub fn low_rank(&self) -> usize {
        self.factors.iter().map(|t| t.left.cols()).sum()
    }

    pub fn nnz(&self) -> usize {
        self.sparse.iter().map(|(_, s)| s.nnz()).sum()
    }

    pub fn with_factor(mut self, left: DenseMatrix, right: DenseMatrix, coeff: f64) -> Result<Self> {
        if left.rows() != self.rows || right.cols() != self.cols || left.cols() != right.rows() {
            return Err(Error::DimensionMismatch(format!(
                "factor {}x{} · {}x{} in a {}x{} operator",
                left.rows(),
                left.cols(),
                right.rows(),
                right.cols(),
                self.rows,
                self.cols
            )));
        }
        if !coeff.is_finite() {
            return Err(Error::NonFinite("operator coefficient"));
        }
        if coeff != 0.0 && left.cols() > 0 {
            self.factors.push(LowRankTerm { left, right, coeff });
        }
        Ok(self)
    }

    /// Adds `coeff · X` for a factored `X`.
    pub fn with_factored(self, x: &FactoredMatrix, coeff: f64) -> Result<Self> {
        if x.rank() == 0 {
            if (x.rows(), x.cols()) != (self.rows, self.cols) {
                return Err(Error::DimensionMismatch(format!(
                    "{}x{} term in a {}x{} operator",
                    x.rows(),
                    x.cols(),
                    self.rows,
                    self.cols
                )));
            }
            return Ok(self);
        }
        let s = x.singular_values();
        let left = DenseMatrix::wrap(Mat::from_fn(x.rows(), x.rank(), |i, r| x.u().get(i, r) * s[r]));
        let right = x.v().transpose();
        self.with_factor(left, right, coeff)
    }

    pub fn with_sparse(mut self, coeff: f64, s: SparseCoo) -> Result<Self> {
        if (s.rows(), s.cols()) != (self.rows, self.cols) {
            return Err(Error::DimensionMismatch(format!(
                "sparse {}x{} in a {}x{} operator",
                s.rows(),
                s.cols(),
                self.rows,
                self.cols
            )));
        }
        if !coeff.is_finite() {
            return Err(Error::NonFinite("operator coefficient"));
        }
        if coeff != 0.0 && s.nnz() > 0 {
            self.sparse.push((coeff, s));
        }
        Ok(self)
    }

    pub fn matvec(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} for a {}x{} operator",
                b.len(),
                self.rows,
                self.cols
            )));
        }
        let mut out = vec![0.0; self.rows];
        for t in &self.factors {
            let inner = t.right.matvec(b)?;
            let part = t.left.matvec(&inner)?;
            for (o, p) in out.iter_mut().zip(part) {
                *o += t.coeff * p;
            }
        }
        for (c, s) in &self.sparse {
            for &(i, j, v) in s.entries() {
                out[i] += c * v * b[j];
            }
        }
        Ok(out)
    }

    pub fn transpose_matvec(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} for a {}x{} operator transposed",
                b.len(),
                self.rows,
                self.cols
            )));
        }
        let mut out = vec![0.0; self.cols];
        for t in &self.factors {
            // (left·right)ᵀ b = rightᵀ (leftᵀ b)
            let mut inner = vec![0.0; t.left.cols()];
            for (r, x) in inner.iter_mut().enumerate() {
                *x = t.left.as_faer().col(r).iter().zip(b).map(|(a, c)| a * c).sum();
            }
            for (j, o) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (r, x) in inner.iter().enumerate() {
                    acc += t.right.get(r, j) * x;
                }
                *o += t.coeff * acc;
            }
        }
        for (c, s) in &self.sparse {
            for &(i, j, v) in s.entries() {
                out[j] += c * v * b[i];
            }
        }
        Ok(out)
    }

    /// Block product `Z · Y` for `Y: n × k`.
    pub fn apply(&self, y: &DenseMatrix) -> Result<DenseMatrix> {
        if y.rows() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} block for a {}x{} operator",
                y.rows(),
                y.cols(),
                self.rows,
                self.cols
            )));
        }
        let mut out = Mat::<f64>::zeros(self.rows, y.cols());
        for t in &self.factors {
            let inner = t.right.as_faer() * y.as_faer();
            out += faer::Scale(t.coeff) * (t.left.as_faer() * &inner);
        }
        for (c, s) in &self.sparse {
            s.accumulate_product(*c, y, &mut out);
        }
        Ok(DenseMatrix::wrap(out))
    }

    /// Block product `Zᵀ · W` for `W: m × k`.
    pub fn apply_transpose(&self, w: &DenseMatrix) -> Result<DenseMatrix> {
        if w.rows() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} block for a {}x{} operator transposed",
                w.rows(),
                w.cols(),
                self.rows,
                self.cols
            )));
        }
        let mut out = Mat::<f64>::zeros(self.cols, w.cols());
        for t in &self.factors {
            let inner = t.left.as_faer().transpose() * w.as_faer();
            out += faer::Scale(t.coeff) * (t.right.as_faer().transpose() * &inner);
        }
        for (c, s) in &self.sparse {
            s.accumulate_transpose_product(*c, w, &mut out);
        }
        Ok(DenseMatrix::wrap(out))
    }

    /// Dense `m × n` copy; for tests and reference paths only.
    pub fn materialize(&self) -> DenseMatrix {
        let mut out = Mat::<f64>::zeros(self.rows, self.cols);
        for t in &self.factors {
            out += faer::Scale(t.coeff) * (t.left.as_faer() * t.right.as_faer());
        }
        for (c, s) in &self.sparse {
            for &(i, j, v) in s.entries() {
                out[(i, j)] += c * v;
            }
        }
        DenseMatrix::wrap(out)
    }
}
