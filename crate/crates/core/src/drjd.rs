//! Deflation-based randomized joint diagonalization.
//!
//! Every level runs `L` single-trial diagonalizations of the current
//! family. A column `j` of trial `i` is accepted when its joint residual
//! `sum_k |offdiag(Q_i^T A_k Q_i)(:, j)|^2` is at most `t = 2 min_i t_i`,
//! where `t_i` is the smallest column residual of trial `i`. The trial
//! accepting the most columns wins; its rejected columns span the subspace
//! the family is restricted to for the next level.
//!
//! Level 0 uses the caller's seed, so its trials coincide with those of
//! [`crate::rjd::rjd`] for the same seed. Level `l > 0` uses
//! `derive_seed(seed, TAG_LEVEL, l)`. Every level reuses the same `L`.

use nalgebra::DMatrix;

use crate::error::{JdError, Result};
use crate::matfam::{OrthogonalMatrix, SymmetricFamily};
use crate::rjd::{conjugate_scores, rjd_with, Selection};
use crate::rng;

/// Column residuals below `ROUNDOFF_FACTOR * (n u)^2 * sum_k |A_k|_F^2`
/// are accepted regardless of the threshold, so that exactly commuting
/// input is not deflated on rounding noise.
pub const ROUNDOFF_FACTOR: f64 = 100.0;

#[derive(Clone, Debug, PartialEq)]
pub struct DeflationLevel {
    /// Dimension of the family at this level.
    pub dimension: usize,
    pub threshold: f64,
    pub accepted: usize,
    pub trial: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DeflationTrace {
    pub levels: Vec<DeflationLevel>,
}

impl DeflationTrace {
    pub fn depth(&self) -> usize {
        self.levels.len()
    }
}

#[derive(Clone, Debug)]
pub struct DrjdOutput {
    pub q: OrthogonalMatrix,
    pub trace: DeflationTrace,
}

/// Entry `j` is `sum_k |offdiag(Q^T A_k Q)(:, j)|_2^2`.
pub fn column_residuals(family: &SymmetricFamily, q: &OrthogonalMatrix) -> Result<Vec<f64>> {
    if q.n() != family.n() {
        return Err(JdError::DimensionMismatch(format!(
            "Q is {0}x{0} but family has n = {1}",
            q.n(),
            family.n()
        )));
    }
    Ok(conjugate_scores(family, q.matrix()).0)
}

/// `sum_k |(A_k - (q_j^T A_k q_j) I) q_j|_2^2` for each column `q_j`: the
/// eigen-residual form of [`column_residuals`].
pub fn eigen_residuals(family: &SymmetricFamily, q: &OrthogonalMatrix) -> Result<Vec<f64>> {
    if q.n() != family.n() {
        return Err(JdError::DimensionMismatch(
            "Q and family dimensions differ".into(),
        ));
    }
    let qm = q.matrix();
    let mut out = vec![0.0; family.n()];
    for a in family.matrices() {
        for (j, r) in out.iter_mut().enumerate() {
            let col = qm.column(j);
            let aq = a * col;
            let rayleigh = col.dot(&aq);
            *r += (aq - col * rayleigh).norm_squared();
        }
    }
    Ok(out)
}

pub fn drjd(family: &SymmetricFamily, trials: usize, seed: u64) -> Result<DrjdOutput> {
    if trials == 0 {
        return Err(JdError::InvalidArgument(
            "number of trials must be at least 1".into(),
        ));
    }
    let n = family.n();
    let mut trace = DeflationTrace::default();
    let mut accepted_columns: Vec<DMatrix<f64>> = Vec::new();
    // Orthonormal basis (n x m) of the subspace still to be diagonalized.
    let mut basis = DMatrix::<f64>::identity(n, n);
    let mut current = family.clone();

    loop {
        let m = current.n();
        if m == 1 {
            accepted_columns.push(basis.clone());
            break;
        }
        let level = trace.depth();
        let level_seed = if level == 0 {
            seed
        } else {
            rng::derive_seed(seed, rng::TAG_LEVEL, level as u64)
        };
        let run = rjd_with(&current, trials, level_seed, Selection::default()).map_err(|e| {
            JdError::Level {
                level,
                source: Box::new(e),
            }
        })?;

        let min_residual = run
            .trials
            .iter()
            .flat_map(|t| t.column_residual_sq.iter().copied())
            .fold(f64::INFINITY, f64::min);
        let unit = f64::EPSILON * m as f64;
        let floor = ROUNDOFF_FACTOR * unit * unit * current.total_frobenius_sq();
        let threshold = 2.0 * min_residual;
        let cutoff = threshold.max(floor);

        let mut best = 0;
        let mut best_count = 0;
        for (i, t) in run.trials.iter().enumerate() {
            let count = t
                .column_residual_sq
                .iter()
                .filter(|&&r| r <= cutoff)
                .count();
            if count > best_count {
                best = i;
                best_count = count;
            }
        }
        let chosen = &run.trials[best];
        let q = chosen.q.matrix();
        let (suc, fail): (Vec<usize>, Vec<usize>) =
            (0..m).partition(|&j| chosen.column_residual_sq[j] <= cutoff);
        debug_assert!(!suc.is_empty());
        trace.levels.push(DeflationLevel {
            dimension: m,
            threshold,
            accepted: suc.len(),
            trial: best,
        });

        accepted_columns.push(&basis * q.select_columns(&suc));
        if fail.is_empty() {
            break;
        }
        let q_fail = q.select_columns(&fail);
        current = current.restrict(&q_fail)?;
        basis = &basis * q_fail;
    }

    let mut q = DMatrix::zeros(n, n);
    let mut next = 0;
    for block in &accepted_columns {
        q.columns_mut(next, block.ncols()).copy_from(block);
        next += block.ncols();
    }
    Ok(DrjdOutput {
        q: OrthogonalMatrix::new(q)?,
        trace,
    })
}
