use super::DenseMatrix;
use crate::{Error, Result};

/// Thin SVD `B = U · diag(s) · Vᵀ` with `s` nonincreasing.
#[derive(Clone, Debug)]
pub struct SvdParts {
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    pub v: DenseMatrix,
}

/// Exact thin SVD of a (reduced) dense matrix.
pub fn small_svd(b: &DenseMatrix) -> Result<SvdParts> {
    let (k, n) = b.shape();
    if k == 0 || n == 0 {
        return Ok(SvdParts {
            u: DenseMatrix::zeros(k, 0),
            s: Vec::new(),
            v: DenseMatrix::zeros(n, 0),
        });
    }
    let svd = b.as_faer().thin_svd().map_err(|_| Error::SvdFailed)?;
    let s: Vec<f64> = svd.S().column_vector().iter().map(|x| x.max(0.0)).collect();
    debug_assert!(s.windows(2).all(|w| w[0] >= w[1]));
    Ok(SvdParts {
        u: DenseMatrix::from_faer(svd.U().to_owned())?,
        s,
        v: DenseMatrix::from_faer(svd.V().to_owned())?,
    })
}

/// Singular values only, nonincreasing.
pub fn singular_values(b: &DenseMatrix) -> Result<Vec<f64>> {
    if b.rows() == 0 || b.cols() == 0 {
        return Ok(Vec::new());
    }
    let s = b.as_faer().singular_values().map_err(|_| Error::SvdFailed)?;
    Ok(s.into_iter().map(|x| x.max(0.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal() {
        let b = DenseMatrix::from_row_major(2, 2, &[3.0, 0.0, 0.0, 1.0]).unwrap();
        let svd = small_svd(&b).unwrap();
        assert!((svd.s[0] - 3.0).abs() < 1e-14 && (svd.s[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_matrix() {
        let svd = small_svd(&DenseMatrix::zeros(3, 4)).unwrap();
        assert!(svd.s.iter().all(|&x| x == 0.0));
        assert_eq!(singular_values(&DenseMatrix::zeros(3, 4)).unwrap(), vec![0.0; 3]);
    }
}
