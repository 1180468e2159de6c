use nalgebra::DMatrix;

use crate::eig::symmetric_eig;
use crate::error::{JdError, Result};

/// Relative eigenvalue threshold (against the trace) for the retained
/// components.
const RANK_TOL: f64 = 1e-12;

/// Whitening map `W = Lambda_k^{-1/2} U_k^T` (`k x n`) from the top `k`
/// eigenpairs of a positive semidefinite `cov`, so that `W cov W^T = I_k`.
/// Rows are ordered by decreasing eigenvalue.
pub fn whiten(cov: &DMatrix<f64>, rank: usize) -> Result<DMatrix<f64>> {
    let n = cov.nrows();
    if !cov.is_square() {
        return Err(JdError::DimensionMismatch(format!(
            "covariance must be square, got {}x{}",
            cov.nrows(),
            cov.ncols()
        )));
    }
    if rank == 0 || rank > n {
        return Err(JdError::InvalidArgument(format!(
            "whitening rank {rank} outside 1..={n}"
        )));
    }
    let eig = symmetric_eig(cov)?;
    let threshold = RANK_TOL * cov.trace().abs();
    let smallest_kept = eig.lambda[n - rank];
    if smallest_kept.is_nan() || smallest_kept <= threshold {
        return Err(JdError::RankDeficient {
            eigenvalue: smallest_kept,
            threshold,
        });
    }
    let u = eig.q.matrix();
    Ok(DMatrix::from_fn(rank, n, |r, c| {
        let idx = n - 1 - r;
        u[(c, idx)] / eig.lambda[idx].sqrt()
    }))
}
