//! Synthetic nearly commuting families, the eigenvalue-vector clustering
//! diagnostic, and the Monte-Carlo experiments (failure probability and
//! accuracy benchmark).
//!
//! An exactly commuting family is `A_k = Q0 diag(lambda_{., k}) Q0^T` with
//! `Q0` Haar distributed: the Q factor of a Gaussian matrix, with columns
//! signed so that the diagonal of R is positive. Noise matrices are
//! `(G + G^T) / 2` for Gaussian `G`, rescaled jointly so that
//! `(sum_k |E_k|_F^2)^(1/2)` equals the requested level.

use std::collections::VecDeque;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::drjd::drjd;
use crate::error::{JdError, Result};
use crate::matfam::{NoiseBudget, OrthogonalMatrix, SymmetricFamily};
use crate::metrics::least_squares_measure;
use crate::numfmt::sig17;
use crate::rjd::rjd;
use crate::rng::{self, JdRng};

/// Distribution of the entries of the diagonal matrices.
#[derive(Clone, Debug, PartialEq)]
pub enum EigenvalueLaw {
    /// Uniform on `[0.01, 1.01]`, giving positive definite matrices.
    PositiveDefinite,
    /// Uniform on `[-1, 1]`.
    Symmetric,
    /// Fixed `n x d` table; row `i` is the eigenvalue vector of column `i`
    /// of `Q0`.
    Explicit(DMatrix<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FamilySpec {
    pub n: usize,
    pub d: usize,
    pub eigenvalue_law: EigenvalueLaw,
    pub noise_epsilon: f64,
    pub seed: u64,
}

impl FamilySpec {
    pub fn new(n: usize, d: usize, eigenvalue_law: EigenvalueLaw, seed: u64) -> Self {
        FamilySpec {
            n,
            d,
            eigenvalue_law,
            noise_epsilon: 0.0,
            seed,
        }
    }

    pub fn with_noise(mut self, epsilon: f64) -> Self {
        self.noise_epsilon = epsilon;
        self
    }

    pub fn positive_definite(&self) -> bool {
        matches!(self.eigenvalue_law, EigenvalueLaw::PositiveDefinite)
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return Err(JdError::InvalidArgument("n and d must be positive".into()));
        }
        NoiseBudget::new(self.noise_epsilon)?;
        if let EigenvalueLaw::Explicit(table) = &self.eigenvalue_law {
            if table.shape() != (self.n, self.d) {
                return Err(JdError::DimensionMismatch(format!(
                    "eigenvalue table is {}x{}, expected {}x{}",
                    table.nrows(),
                    table.ncols(),
                    self.n,
                    self.d
                )));
            }
        }
        Ok(())
    }
}

/// The common eigenbasis and eigenvalue vectors of a generated family.
#[derive(Clone, Debug)]
pub struct GroundTruth {
    pub q0: OrthogonalMatrix,
    /// `n x d`; row `i` is the eigenvalue vector of column `i` of `q0`.
    pub lambdas: DMatrix<f64>,
}

/// Haar-distributed `n x n` orthogonal matrix.
pub fn haar_orthogonal(n: usize, rng: &mut JdRng) -> Result<OrthogonalMatrix> {
    let g = DMatrix::from_fn(n, n, |_, _| rng::normal(rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for (j, mut col) in q.column_iter_mut().enumerate() {
        if r[(j, j)] < 0.0 {
            col.neg_mut();
        }
    }
    OrthogonalMatrix::new(q)
}

/// Exactly commuting family; `spec.noise_epsilon` must be zero.
pub fn generate_commuting(spec: &FamilySpec) -> Result<(SymmetricFamily, GroundTruth)> {
    spec.validate()?;
    if spec.noise_epsilon != 0.0 {
        return Err(JdError::InvalidArgument(
            "generate_commuting takes a noise-free spec; use generate_family".into(),
        ));
    }
    let (n, d) = (spec.n, spec.d);
    let mut stream = rng::stream(spec.seed, rng::TAG_FAMILY, 0);
    let q0 = haar_orthogonal(n, &mut stream)?;
    let lambdas = match &spec.eigenvalue_law {
        EigenvalueLaw::PositiveDefinite => {
            DMatrix::from_fn(n, d, |_, _| stream.random_range(0.01..=1.01))
        }
        EigenvalueLaw::Symmetric => DMatrix::from_fn(n, d, |_, _| stream.random_range(-1.0..=1.0)),
        EigenvalueLaw::Explicit(t) => t.clone(),
    };
    let qm = q0.matrix();
    let matrices = (0..d)
        .map(|k| {
            let mut a = DMatrix::zeros(n, n);
            for j in 0..n {
                for i in 0..=j {
                    let v: f64 = (0..n)
                        .map(|l| qm[(i, l)] * lambdas[(l, k)] * qm[(j, l)])
                        .sum();
                    a[(i, j)] = v;
                    a[(j, i)] = v;
                }
            }
            a
        })
        .collect();
    Ok((SymmetricFamily::new(matrices)?, GroundTruth { q0, lambdas }))
}

/// Commuting family plus noise of level `spec.noise_epsilon`. The noise is
/// drawn from `derive_seed(spec.seed, TAG_NOISE, 0)`.
pub fn generate_family(spec: &FamilySpec) -> Result<(SymmetricFamily, GroundTruth)> {
    let clean = FamilySpec {
        noise_epsilon: 0.0,
        ..spec.clone()
    };
    let (family, truth) = generate_commuting(&clean)?;
    let noisy = add_noise(
        &family,
        spec.noise_epsilon,
        rng::derive_seed(spec.seed, rng::TAG_NOISE, 0),
    )?;
    Ok((noisy, truth))
}

/// The noise matrices `E_k`, jointly scaled to aggregate norm `epsilon`.
pub fn noise_matrices(n: usize, d: usize, epsilon: f64, seed: u64) -> Result<Vec<DMatrix<f64>>> {
    NoiseBudget::new(epsilon)?;
    let mut stream = rng::stream(seed, rng::TAG_NOISE, 0);
    let mut es: Vec<DMatrix<f64>> = (0..d)
        .map(|_| {
            let g = DMatrix::from_fn(n, n, |_, _| rng::normal(&mut stream));
            crate::matfam::symmetrize(&g)
        })
        .collect();
    let total: f64 = es.iter().map(|e| e.norm_squared()).sum::<f64>().sqrt();
    let scale = if total > 0.0 { epsilon / total } else { 0.0 };
    for e in &mut es {
        *e *= scale;
    }
    Ok(es)
}

/// `{A_k + E_k}`. Zero noise returns the family unchanged.
pub fn add_noise(family: &SymmetricFamily, epsilon: f64, seed: u64) -> Result<SymmetricFamily> {
    NoiseBudget::new(epsilon)?;
    if epsilon == 0.0 {
        return Ok(family.clone());
    }
    let es = noise_matrices(family.n(), family.d(), epsilon, seed)?;
    SymmetricFamily::new(
        family
            .matrices()
            .iter()
            .zip(es)
            .map(|(a, e)| a + e)
            .collect(),
    )
}

/// Single-linkage clusters of eigenvalue vectors at distance `delta`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterAssignment {
    /// Cluster of each vector, numbered from 0 in order of first member.
    pub labels: Vec<usize>,
    pub m: usize,
    pub delta: f64,
}

impl ClusterAssignment {
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.m];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

/// Start a cluster at the first unassigned row and absorb every row within
/// `delta` of a member, repeatedly. Rows of `lambdas` are the vectors.
pub fn cluster_eigenvalue_vectors(lambdas: &DMatrix<f64>, delta: f64) -> Result<ClusterAssignment> {
    if delta.is_nan() || delta <= 0.0 {
        return Err(JdError::InvalidArgument(format!(
            "delta must be positive, got {delta}"
        )));
    }
    let n = lambdas.nrows();
    let dist = |i: usize, j: usize| (lambdas.row(i) - lambdas.row(j)).norm();
    let mut labels = vec![usize::MAX; n];
    let mut m = 0;
    for start in 0..n {
        if labels[start] != usize::MAX {
            continue;
        }
        labels[start] = m;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for (j, label) in labels.iter_mut().enumerate() {
                if *label == usize::MAX && dist(i, j) <= delta {
                    *label = m;
                    queue.push_back(j);
                }
            }
        }
        m += 1;
    }
    Ok(ClusterAssignment { labels, m, delta })
}

/// Configuration of the failure-probability experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentGrid {
    pub n: usize,
    pub d: usize,
    pub epsilon: f64,
    /// Trial counts `L` to evaluate.
    pub trials: Vec<usize>,
    pub repeats: usize,
    /// Magnification factors `R > 1`.
    pub r_values: Vec<f64>,
    pub seed: u64,
    pub eigenvalue_law: EigenvalueLaw,
}

impl ExperimentGrid {
    /// `R - 1` log-spaced over `[1, 1000]`, four points per decade.
    pub fn default_r_values() -> Vec<f64> {
        (0..=12).map(|i| 1.0 + 10f64.powf(i as f64 / 4.0)).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(JdError::InvalidArgument(
                "repeats must be at least 1".into(),
            ));
        }
        if self.trials.is_empty() || self.trials.contains(&0) {
            return Err(JdError::InvalidArgument(
                "trial counts must be at least 1".into(),
            ));
        }
        if let Some(r) = self.r_values.iter().find(|&&r| r.is_nan() || r <= 1.0) {
            return Err(JdError::InvalidArgument(format!(
                "every R must exceed 1, got {r}"
            )));
        }
        NoiseBudget::new(self.epsilon)?;
        Ok(())
    }
}

/// Smallest noise level used for the failure threshold `R * epsilon`.
pub const EPSILON_FLOOR: f64 = 1e-15;

#[derive(Clone, Debug, PartialEq)]
pub struct FailureRow {
    pub r: f64,
    pub trials: usize,
    pub failures: usize,
    pub repeats: usize,
    pub freq: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(successes: usize, total: usize) -> (f64, f64) {
    const Z: f64 = 1.959_963_984_540_054;
    let nn = total as f64;
    let p = successes as f64 / nn;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / nn;
    let center = (p + z2 / (2.0 * nn)) / denom;
    let half = Z / denom * (p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)).sqrt();
    let lo = if successes == 0 {
        0.0
    } else {
        (center - half).max(0.0)
    };
    let hi = if successes == total {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (lo, hi)
}

/// Run the failure-probability experiment. One family and one noise
/// realization are drawn from the grid seed; every repeat reruns the
/// randomized diagonalization with a fresh seed
/// `derive_seed(seed, TAG_REPEAT, repeat)`, shared across trial counts.
pub fn failure_probability_experiment(grid: &ExperimentGrid) -> Result<Vec<FailureRow>> {
    grid.validate()?;
    let spec = FamilySpec::new(grid.n, grid.d, grid.eigenvalue_law.clone(), grid.seed)
        .with_noise(grid.epsilon);
    let (family, _) = generate_family(&spec)?;
    let eps = grid.epsilon.max(EPSILON_FLOOR);
    let mut rows = Vec::new();
    for &l in &grid.trials {
        let errors = (0..grid.repeats)
            .into_par_iter()
            .map(|r| {
                let run = rjd(
                    &family,
                    l,
                    rng::derive_seed(grid.seed, rng::TAG_REPEAT, r as u64),
                )?;
                Ok(run.best().total_offdiag_sq.sqrt())
            })
            .collect::<Result<Vec<f64>>>()?;
        for &r in &grid.r_values {
            let failures = errors.iter().filter(|&&e| e >= r * eps).count();
            let (ci_lo, ci_hi) = wilson_interval(failures, grid.repeats);
            rows.push(FailureRow {
                r,
                trials: l,
                failures,
                repeats: grid.repeats,
                freq: failures as f64 / grid.repeats as f64,
                ci_lo,
                ci_hi,
            });
        }
    }
    Ok(rows)
}

pub const FAILURE_CSV_HEADER: &str = "R,L,failures,repeats,freq,ci_lo,ci_hi";

pub fn failure_rows_to_csv(rows: &[FailureRow]) -> String {
    let mut out = String::from(FAILURE_CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            sig17(row.r),
            row.trials,
            row.failures,
            row.repeats,
            sig17(row.freq),
            sig17(row.ci_lo),
            sig17(row.ci_hi)
        ));
    }
    out
}

/// Least-squares slope of `log(freq)` against `log(R - 1)` over the rows
/// with the given `L`, `R - 1` in `[lo, hi]`, and at least `min_failures`
/// failures. `None` when fewer than two rows qualify.
pub fn loglog_slope(
    rows: &[FailureRow],
    trials: usize,
    lo: f64,
    hi: f64,
    min_failures: usize,
) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| {
            r.trials == trials && r.r - 1.0 >= lo && r.r - 1.0 <= hi && r.failures >= min_failures
        })
        .map(|r| ((r.r - 1.0).ln(), r.freq.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Rjd,
    Drjd,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Rjd => "rjd",
            Algorithm::Drjd => "drjd",
        }
    }

    /// Joint diagonalizer of `family` from `trials` trials.
    pub fn diagonalize(
        self,
        family: &SymmetricFamily,
        trials: usize,
        seed: u64,
    ) -> Result<OrthogonalMatrix> {
        match self {
            Algorithm::Rjd => Ok(rjd(family, trials, seed)?.into_best().q),
            Algorithm::Drjd => Ok(drjd(family, trials, seed)?.q),
        }
    }
}

/// One accuracy benchmark setting.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchSetting {
    pub n: usize,
    pub d: usize,
    pub epsilon: f64,
    pub algorithm: Algorithm,
    pub trials: usize,
    pub repeats: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub setting: BenchSetting,
    /// `sqrt(L(Q))` of each repeat.
    pub errors: Vec<f64>,
    pub mean_err: f64,
    pub median_err: f64,
    pub mean_time_ms: f64,
}

/// Draw one positive definite family of the given size and noise level and
/// diagonalize it `repeats` times with fresh seeds. The family depends on
/// `(n, d, epsilon, seed)` only, so both algorithms see the same input.
pub fn run_bench(setting: &BenchSetting) -> Result<BenchRow> {
    if setting.repeats == 0 || setting.trials == 0 {
        return Err(JdError::InvalidArgument(
            "repeats and trials must be at least 1".into(),
        ));
    }
    let spec = FamilySpec::new(
        setting.n,
        setting.d,
        EigenvalueLaw::PositiveDefinite,
        setting.seed,
    )
    .with_noise(setting.epsilon);
    let (family, _) = generate_family(&spec)?;
    let mut errors = Vec::with_capacity(setting.repeats);
    let mut elapsed = 0.0;
    for r in 0..setting.repeats {
        let seed = rng::derive_seed(setting.seed, rng::TAG_REPEAT, r as u64);
        let start = Instant::now();
        let q = setting
            .algorithm
            .diagonalize(&family, setting.trials, seed)?;
        elapsed += start.elapsed().as_secs_f64() * 1e3;
        errors.push(least_squares_measure(&family, &q)?.sqrt());
    }
    let mean_err = errors.iter().sum::<f64>() / errors.len() as f64;
    Ok(BenchRow {
        setting: setting.clone(),
        median_err: median(&errors),
        mean_err,
        errors,
        mean_time_ms: elapsed / setting.repeats as f64,
    })
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k == 0 {
        f64::NAN
    } else if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

pub const BENCH_CSV_HEADER: &str = "n,d,epsilon,algo,trials,mean_err,median_err,mean_time_ms";

/// CSV of benchmark rows. The timing column is left empty unless
/// `timings` is set, so that the output is reproducible byte for byte.
pub fn bench_rows_to_csv(rows: &[BenchRow], timings: bool) -> String {
    let mut out = String::from(BENCH_CSV_HEADER);
    out.push('\n');
    for row in rows {
        let s = &row.setting;
        let time = if timings {
            sig17(row.mean_time_ms)
        } else {
            String::new()
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            s.n,
            s.d,
            sig17(s.epsilon),
            s.algorithm.name(),
            s.trials,
            sig17(row.mean_err),
            sig17(row.median_err),
            time
        ));
    }
    out
}
