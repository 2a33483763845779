//! Dense, sparse and implicit low-rank-plus-sparse matrices, plus the
//! orthonormalization, power-method and small-SVD kernels the solvers use.

mod dense;
mod factored;
mod operator;
mod power;
mod qr;
mod sparse;
mod svd;
mod view;

pub use dense::DenseMatrix;
pub use factored::FactoredMatrix;
pub use operator::{LowRankPlusSparse, LowRankTerm};
pub use power::power_method;
pub use qr::{orthonormality_defect, qr_orthonormalize, OrthonormalBasis, DEPENDENCE_TOL};
pub use sparse::SparseCoo;
pub use svd::{singular_values, small_svd, SvdParts};
pub use view::{MatrixView, DENSE_SPECTRUM_CAP};
