//! Off-diagonality measures and the Moreau-Amari separation index.

use nalgebra::DMatrix;

use crate::error::{JdError, Result};
use crate::matfam::{congruence, OrthogonalMatrix, SymmetricFamily};

/// Both off-diagonality scores of a candidate diagonalizer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointDiagScore {
    pub least_squares: f64,
    /// Only defined when every `Q^T A_k Q` is positive definite.
    pub pham: Option<f64>,
}

impl JointDiagScore {
    pub fn evaluate(family: &SymmetricFamily, q: &OrthogonalMatrix) -> Result<Self> {
        Ok(JointDiagScore {
            least_squares: least_squares_measure(family, q)?,
            pham: pham_measure(family, q).ok(),
        })
    }
}

/// Zero the diagonal of a square matrix.
pub fn offdiag(a: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = a.clone();
    out.fill_diagonal(0.0);
    out
}

/// Keep only the diagonal of a square matrix.
pub fn diag_part(a: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_diagonal(&a.diagonal())
}

/// `|offdiag(A)|_F^2`.
pub fn offdiag_norm_sq(a: &DMatrix<f64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s
}

/// `|diag(A)|_F^2`.
pub fn diag_norm_sq(a: &DMatrix<f64>) -> f64 {
    a.diagonal().norm_squared()
}

fn check_dims(family: &SymmetricFamily, q: &OrthogonalMatrix) -> Result<()> {
    if q.n() != family.n() {
        return Err(JdError::DimensionMismatch(format!(
            "Q is {0}x{0} but family has n = {1}",
            q.n(),
            family.n()
        )));
    }
    Ok(())
}

/// `sum_k |offdiag(Q^T A_k Q)|_F^2`.
pub fn least_squares_measure(family: &SymmetricFamily, q: &OrthogonalMatrix) -> Result<f64> {
    check_dims(family, q)?;
    Ok(family
        .matrices()
        .iter()
        .map(|a| offdiag_norm_sq(&congruence(a, q.matrix())))
        .sum())
}

/// `1/(2n) sum_k [log det diag(Q^T A_k Q) - log det(Q^T A_k Q)]`.
///
/// The prefactor is `1/(2n)` applied to the whole sum. `log det` of the
/// full conjugated matrix comes from its Cholesky factor, which also
/// detects a matrix that is not positive definite.
pub fn pham_measure(family: &SymmetricFamily, q: &OrthogonalMatrix) -> Result<f64> {
    check_dims(family, q)?;
    let n = family.n();
    let mut total = 0.0;
    for (k, a) in family.matrices().iter().enumerate() {
        let c = congruence(a, q.matrix());
        if c.diagonal().iter().any(|&x| x <= 0.0) {
            return Err(JdError::NotPositiveDefinite { index: k });
        }
        let log_det_diag: f64 = c.diagonal().iter().map(|x| x.ln()).sum();
        let chol = c
            .cholesky()
            .ok_or(JdError::NotPositiveDefinite { index: k })?;
        let log_det: f64 = 2.0
            * chol
                .l_dirty()
                .diagonal()
                .iter()
                .map(|x| x.ln())
                .sum::<f64>();
        total += log_det_diag - log_det;
    }
    Ok(total / (2.0 * n as f64))
}

/// Moreau-Amari index of `M = B A`: zero exactly for scaled permutation
/// matrices, at most one.
pub fn moreau_amari(m: &DMatrix<f64>) -> Result<f64> {
    if !m.is_square() || m.nrows() < 2 {
        return Err(JdError::InvalidArgument(format!(
            "Moreau-Amari index needs a square matrix with n >= 2, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    let abs = m.abs();
    let mut total = 0.0;
    for i in 0..n {
        let row = abs.row(i);
        let row_max = row.max();
        if row_max == 0.0 {
            return Err(JdError::ZeroLine {
                kind: "row",
                index: i,
            });
        }
        let col = abs.column(i);
        let col_max = col.max();
        if col_max == 0.0 {
            return Err(JdError::ZeroLine {
                kind: "column",
                index: i,
            });
        }
        total += row.sum() / row_max + col.sum() / col_max - 2.0;
    }
    Ok(total / (2.0 * n as f64 * (n - 1) as f64))
}
