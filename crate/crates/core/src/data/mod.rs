//! Binary matrices and index sets, synthetic ground truth, one-sided
//! sampling, and ratings ingestion.

mod binary;
mod ratings;
mod synthetic;

pub use binary::{
    read_binary_matrix, read_index_set, write_binary_matrix, write_index_set, BinaryMatrix,
    ObservationSet,
};
pub use ratings::{ingest_ratings, RatingsData};
pub use synthetic::{gen_synthetic, sample_one_sided, SampleSplit};

use crate::matrix::MatrixView;

/// Default cut for [`binarize_predictions`].
pub const DEFAULT_CUT: f64 = 0.5;

/// Entry is one iff `X_ij ≥ cut`.
pub fn binarize_predictions<X: MatrixView + ?Sized>(x: &X, cut: f64) -> BinaryMatrix {
    let (rows, cols) = x.shape();
    let dense = x.to_dense();
    let f = dense.as_faer();
    let mut positives = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            if f[(i, j)] >= cut {
                positives.push((i, j));
            }
        }
    }
    BinaryMatrix::from_sorted(rows, cols, positives)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::DenseMatrix;

    #[test]
    fn binarize_boundary_and_identity() {
        let half = DenseMatrix::from_fn(2, 3, |_, _| 0.5);
        assert_eq!(binarize_predictions(&half, DEFAULT_CUT).nnz(), 6);

        let m = gen_synthetic(20, 2, 0.5, 3).unwrap();
        assert_eq!(binarize_predictions(&m.to_dense(), DEFAULT_CUT), m);
    }
}
