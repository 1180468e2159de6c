//! Randomized joint diagonalization.
//!
//! Each trial draws `mu ~ N(0, I_d)`, forms `A(mu) = sum_k mu_k A_k`, and
//! takes the eigenvector matrix of `A(mu)` as a candidate joint
//! diagonalizer. The best of `L` trials is returned.
//!
//! The `L` combination vectors come from one ChaCha8 stream seeded with the
//! caller's seed, consumed `d` normals per trial in trial order. A run with
//! `L + 1` trials therefore repeats the first `L` trials of a run with `L`.

use nalgebra::DMatrix;

use crate::eig::symmetric_eig;
use crate::error::{JdError, Result};
use crate::matfam::{congruence, random_linear_combination, OrthogonalMatrix, SymmetricFamily};
use crate::rng;

/// Relative tolerance (against `sum_k |A_k|_F^2`) under which two trial
/// scores count as tied; ties go to the lower trial index.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianVector {
    pub mu: Vec<f64>,
    /// Seed of the stream the vector was drawn from.
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct TrialResult {
    pub q: OrthogonalMatrix,
    /// `sum_k |offdiag(Q^T A_k Q)|_F^2`.
    pub total_offdiag_sq: f64,
    /// `sum_k |diag(Q^T A_k Q)|_F^2`.
    pub total_diag_sq: f64,
    /// Entry `j` is `sum_k |offdiag(Q^T A_k Q)(:, j)|_2^2`.
    pub column_residual_sq: Vec<f64>,
    pub mu: GaussianVector,
}

/// Rule used to pick the best trial.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Selection {
    /// Largest diagonal mass `sum_k |diag(Q^T A_k Q)|_F^2`.
    #[default]
    MaxDiagonal,
    /// Smallest off-diagonal mass `sum_k |offdiag(Q^T A_k Q)|_F^2`.
    MinOffDiagonal,
}

#[derive(Clone, Debug)]
pub struct RjdRun {
    pub best_index: usize,
    pub trials: Vec<TrialResult>,
}

impl RjdRun {
    pub fn best(&self) -> &TrialResult {
        &self.trials[self.best_index]
    }

    pub fn into_best(mut self) -> TrialResult {
        self.trials.swap_remove(self.best_index)
    }
}

/// Per-column off-diagonal mass and total diagonal mass of `{Q^T A_k Q}`.
pub(crate) fn conjugate_scores(family: &SymmetricFamily, q: &DMatrix<f64>) -> (Vec<f64>, f64) {
    let n = q.ncols();
    let mut columns = vec![0.0; n];
    let mut diag_sq = 0.0;
    for a in family.matrices() {
        let c = congruence(a, q);
        for (j, col) in columns.iter_mut().enumerate() {
            for i in 0..n {
                let v = c[(i, j)];
                if i == j {
                    diag_sq += v * v;
                } else {
                    *col += v * v;
                }
            }
        }
    }
    (columns, diag_sq)
}

/// Score a given orthogonal matrix as a trial.
pub fn evaluate_trial(
    family: &SymmetricFamily,
    q: OrthogonalMatrix,
    mu: GaussianVector,
) -> Result<TrialResult> {
    if q.n() != family.n() {
        return Err(JdError::DimensionMismatch(format!(
            "Q is {0}x{0} but family has n = {1}",
            q.n(),
            family.n()
        )));
    }
    let (column_residual_sq, total_diag_sq) = conjugate_scores(family, q.matrix());
    Ok(TrialResult {
        q,
        total_offdiag_sq: column_residual_sq.iter().sum(),
        total_diag_sq,
        column_residual_sq,
        mu,
    })
}

fn run_trial(family: &SymmetricFamily, mu: GaussianVector) -> Result<TrialResult> {
    let combined = random_linear_combination(family, &mu.mu)?;
    let eig = symmetric_eig(&combined)?;
    evaluate_trial(family, eig.q, mu)
}

/// Run `trials` independent trials and select the best one with the
/// default rule.
pub fn rjd(family: &SymmetricFamily, trials: usize, seed: u64) -> Result<RjdRun> {
    rjd_with(family, trials, seed, Selection::default())
}

pub fn rjd_with(
    family: &SymmetricFamily,
    trials: usize,
    seed: u64,
    selection: Selection,
) -> Result<RjdRun> {
    if trials == 0 {
        return Err(JdError::InvalidArgument(
            "number of trials must be at least 1".into(),
        ));
    }
    let d = family.d();
    let mut stream = rng::seeded(seed);
    let results = (0..trials)
        .map(|i| {
            let mu = GaussianVector {
                mu: rng::normal_vec(&mut stream, d),
                seed,
            };
            run_trial(family, mu).map_err(|e| JdError::Trial {
                trial: i,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best_index = match selection {
        Selection::MaxDiagonal => select_by_diag(&results, family)?,
        Selection::MinOffDiagonal => select_by_offdiag(&results, family)?,
    };
    Ok(RjdRun {
        best_index,
        trials: results,
    })
}

/// Index maximizing `sum_k |diag(Q_i^T A_k Q_i)|_F^2`.
pub fn select_by_diag(trials: &[TrialResult], family: &SymmetricFamily) -> Result<usize> {
    let tol = TIE_TOL * family.total_frobenius_sq();
    select(trials, |t| -t.total_diag_sq, tol)
}

/// Index minimizing `sum_k |offdiag(Q_i^T A_k Q_i)|_F^2`.
pub fn select_by_offdiag(trials: &[TrialResult], family: &SymmetricFamily) -> Result<usize> {
    let tol = TIE_TOL * family.total_frobenius_sq();
    select(trials, |t| t.total_offdiag_sq, tol)
}

fn select(trials: &[TrialResult], cost: impl Fn(&TrialResult) -> f64, tol: f64) -> Result<usize> {
    let first = trials.first().ok_or(JdError::EmptyTrials)?;
    let mut best = 0;
    let mut best_cost = cost(first);
    for (i, t) in trials.iter().enumerate().skip(1) {
        let c = cost(t);
        if c < best_cost - tol {
            best = i;
            best_cost = c;
        }
    }
    Ok(best)
}

/// Rows are the eigenvalue vectors `Lambda_i = (lambda_i^(1), ..., lambda_i^(d))`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenvalueVectors {
    pub lambda: DMatrix<f64>,
}

impl EigenvalueVectors {
    pub fn n(&self) -> usize {
        self.lambda.nrows()
    }

    pub fn d(&self) -> usize {
        self.lambda.ncols()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.lambda.row(i).iter().copied().collect()
    }

    /// `<mu, Lambda_i>` for every `i`: the eigenvalues of `A(mu)` for a
    /// jointly diagonalized family.
    pub fn eigenvalues_at(&self, mu: &[f64]) -> Result<Vec<f64>> {
        if mu.len() != self.d() {
            return Err(JdError::DimensionMismatch(format!(
                "combination vector has length {}, expected {}",
                mu.len(),
                self.d()
            )));
        }
        Ok((0..self.n())
            .map(|i| self.lambda.row(i).iter().zip(mu).map(|(l, m)| l * m).sum())
            .collect())
    }
}

/// Rayleigh quotients `(Q^T A_k Q)_ii` arranged as an `n x d` matrix.
pub fn eigenvalue_vectors(
    family: &SymmetricFamily,
    q: &OrthogonalMatrix,
) -> Result<EigenvalueVectors> {
    if q.n() != family.n() {
        return Err(JdError::DimensionMismatch(format!(
            "Q is {0}x{0} but family has n = {1}",
            q.n(),
            family.n()
        )));
    }
    let n = family.n();
    let mut lambda = DMatrix::zeros(n, family.d());
    let qm = q.matrix();
    for (k, a) in family.matrices().iter().enumerate() {
        let aq = a * qm;
        for i in 0..n {
            lambda[(i, k)] = qm.column(i).dot(&aq.column(i));
        }
    }
    Ok(EigenvalueVectors { lambda })
}
