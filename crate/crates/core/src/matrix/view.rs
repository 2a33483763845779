use super::{singular_values, DenseMatrix, FactoredMatrix};
use crate::{Error, Result};

/// Largest dense matrix (per side) whose spectrum is computed on demand.
pub const DENSE_SPECTRUM_CAP: usize = 2000;

/// Read access shared by dense and factored matrices, enough to evaluate
/// losses and metrics without caring about the representation.
pub trait MatrixView {
    fn shape(&self) -> (usize, usize);

    fn frobenius_sq(&self) -> f64;

    /// Values at the given positions, in order.
    fn entries_at(&self, positions: &[(usize, usize)]) -> Vec<f64>;

    /// Nonincreasing singular values.
    fn spectrum(&self) -> Result<Vec<f64>>;

    fn to_dense(&self) -> DenseMatrix;
}

impl MatrixView for DenseMatrix {
    fn shape(&self) -> (usize, usize) {
        DenseMatrix::shape(self)
    }

    fn frobenius_sq(&self) -> f64 {
        DenseMatrix::frobenius_sq(self)
    }

    fn entries_at(&self, positions: &[(usize, usize)]) -> Vec<f64> {
        positions.iter().map(|&(i, j)| self.get(i, j)).collect()
    }

    fn spectrum(&self) -> Result<Vec<f64>> {
        if self.rows().max(self.cols()) > DENSE_SPECTRUM_CAP {
            return Err(Error::SpectrumUnavailable);
        }
        singular_values(self)
    }

    fn to_dense(&self) -> DenseMatrix {
        self.clone()
    }
}

impl MatrixView for FactoredMatrix {
    fn shape(&self) -> (usize, usize) {
        (self.rows(), self.cols())
    }

    fn frobenius_sq(&self) -> f64 {
        FactoredMatrix::frobenius_sq(self)
    }

    fn entries_at(&self, positions: &[(usize, usize)]) -> Vec<f64> {
        FactoredMatrix::entries_at(self, positions.iter().copied())
    }

    fn spectrum(&self) -> Result<Vec<f64>> {
        Ok(self.singular_values().to_vec())
    }

    fn to_dense(&self) -> DenseMatrix {
        FactoredMatrix::to_dense(self)
    }
}
