//! Symmetric eigendecomposition by the cyclic Jacobi method.
//!
//! Each sweep visits every pair `(p, q)` with `p < q` in row order and
//! applies the plane rotation that annihilates `a[p][q]`. A rotation is
//! skipped when the entry is negligible relative to the corresponding
//! diagonal entries or to the norm of the matrix; the iteration stops after
//! the first sweep in which every rotation was skipped.
//!
//! Eigenvalues are returned in ascending order. Each eigenvector is signed
//! so that its largest-magnitude entry (the first one, on ties) is positive.

use nalgebra::{DMatrix, DVector};

use crate::error::{JdError, Result};
use crate::matfam::OrthogonalMatrix;

pub const MAX_SWEEPS: usize = 100;

/// Relative asymmetry accepted by `symmetric_eig`.
const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    /// Eigenvectors as columns.
    pub q: OrthogonalMatrix,
    /// Eigenvalues, ascending.
    pub lambda: DVector<f64>,
}

impl EigenDecomposition {
    /// `Q diag(lambda) Q^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let q = self.q.matrix();
        let scaled = DMatrix::from_fn(q.nrows(), q.ncols(), |i, j| q[(i, j)] * self.lambda[j]);
        scaled * q.transpose()
    }
}

pub fn symmetric_eig(a: &DMatrix<f64>) -> Result<EigenDecomposition> {
    if !a.is_square() {
        return Err(JdError::DimensionMismatch(format!(
            "eigensolver needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let n = a.nrows();
    let norm = a.norm();
    if !norm.is_finite() {
        return Err(JdError::InvalidArgument(
            "matrix has non-finite entries".into(),
        ));
    }
    let asym = (a - a.transpose()).norm();
    if asym > SYMMETRY_TOL * norm {
        return Err(JdError::Asymmetric {
            index: 0,
            relative: asym / norm,
        });
    }

    // Row-major working copies.
    let mut w: Vec<f64> = (0..n * n).map(|idx| a[(idx / n, idx % n)]).collect();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    // Entries below this are treated as zero regardless of the diagonal.
    let floor = f64::EPSILON * 1e-3 * norm;
    let mut converged = n <= 1;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = w[p * n + q];
                let app = w[p * n + p];
                let aqq = w[q * n + q];
                if apq.abs() <= floor || apq.abs() <= f64::EPSILON * (app * aqq).abs().sqrt() * 0.5
                {
                    w[p * n + q] = 0.0;
                    w[q * n + p] = 0.0;
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + theta.hypot(1.0))
                };
                let c = 1.0 / t.hypot(1.0);
                let s = t * c;
                rotate(&mut w, &mut v, n, p, q, c, s);
                w[p * n + p] = app - t * apq;
                w[q * n + q] = aqq + t * apq;
                w[p * n + q] = 0.0;
                w[q * n + p] = 0.0;
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(JdError::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[i * n + i].total_cmp(&w[j * n + j]));
    let lambda = DVector::from_iterator(n, order.iter().map(|&i| w[i * n + i]));
    let mut qm = DMatrix::from_fn(n, n, |r, c| v[r * n + order[c]]);
    for mut col in qm.column_iter_mut() {
        let mut pivot = 0;
        for (i, x) in col.iter().enumerate() {
            if x.abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
    }
    Ok(EigenDecomposition {
        q: OrthogonalMatrix::new(qm)?,
        lambda,
    })
}

/// Apply the rotation in the `(p, q)` plane to rows and columns of the
/// row-major `w` and to the columns of `v`. The `(p, q)` block of `w` is
/// overwritten by the caller.
fn rotate(w: &mut [f64], v: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = w[k * n + p];
        let akq = w[k * n + q];
        let new_p = c * akp - s * akq;
        let new_q = s * akp + c * akq;
        w[k * n + p] = new_p;
        w[p * n + k] = new_p;
        w[k * n + q] = new_q;
        w[q * n + k] = new_q;
    }
    for k in 0..n {
        let vkp = v[k * n + p];
        let vkq = v[k * n + q];
        v[k * n + p] = c * vkp - s * vkq;
        v[k * n + q] = s * vkp + c * vkq;
    }
}
