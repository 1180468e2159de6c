//! Single topic models from exact moments.
//!
//! With `M2 = sum_i w_i mu_i mu_i^T` and slices
//! `S_j = sum_i w_i mu_i(j) mu_i mu_i^T` of the third moment, a rank-`k`
//! whitening `W` of `M2` makes `v_i = sqrt(w_i) W mu_i` orthonormal and
//! `W S_j W^T = V diag(mu_.(j)) V^T`. Jointly diagonalizing the whitened
//! slices (together with `W M2 W^T = I`) yields the `v_i` up to order and
//! sign. Mapping back with `W^+ = U_k Lambda_k^{1/2}` gives
//! `u_i = W^+ v_i = sqrt(w_i) mu_i`; since `mu_i` sums to one,
//! `mu_i = u_i / sum(u_i)` and `w_i = sum(u_i)^2`, both independent of the
//! sign of `v_i`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::whitening::whiten;
use crate::eig::symmetric_eig;
use crate::error::{JdError, Result};
use crate::matfam::SymmetricFamily;
use crate::numfmt::join_sig17;
use crate::rng;
use crate::synth::{noise_matrices, Algorithm};

/// Recovered entries in `[-NEGATIVE_TOL, 0)` are clipped to zero; more
/// negative entries are reported as errors.
pub const NEGATIVE_TOL: f64 = 1e-8;

const STOCHASTIC_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct TopicModel {
    /// Topic probabilities, length `k`.
    pub omega: DVector<f64>,
    /// `n x k`; column `i` is the word distribution of topic `i`.
    pub mu: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct TopicModelFile {
    omega: Vec<f64>,
    mu: Vec<Vec<f64>>,
}

impl TopicModel {
    pub fn new(omega: DVector<f64>, mu: DMatrix<f64>) -> Result<Self> {
        let (n, k) = mu.shape();
        if k == 0 || omega.len() != k {
            return Err(JdError::DimensionMismatch(format!(
                "{} topic weights for {k} topics",
                omega.len()
            )));
        }
        if k > n {
            return Err(JdError::InvalidArgument(format!(
                "{k} topics exceed vocabulary size {n}"
            )));
        }
        if omega.iter().any(|&w| w.is_nan() || w <= 0.0)
            || (omega.sum() - 1.0).abs() > STOCHASTIC_TOL
        {
            return Err(JdError::InvalidArgument(
                "omega must be a positive probability vector".into(),
            ));
        }
        for (i, col) in mu.column_iter().enumerate() {
            if col.iter().any(|&x| x.is_nan() || x < 0.0)
                || (col.sum() - 1.0).abs() > STOCHASTIC_TOL
            {
                return Err(JdError::InvalidArgument(format!(
                    "topic {i} is not a probability vector"
                )));
            }
        }
        Ok(TopicModel { omega, mu })
    }

    pub fn vocabulary(&self) -> usize {
        self.mu.nrows()
    }

    pub fn topics(&self) -> usize {
        self.mu.ncols()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: TopicModelFile =
            serde_json::from_str(text).map_err(|e| JdError::Parse(e.to_string()))?;
        let k = file.mu.len();
        let n = file.mu.first().map_or(0, Vec::len);
        if file.mu.iter().any(|c| c.len() != n) {
            return Err(JdError::DimensionMismatch(
                "topics have different vocabulary sizes".into(),
            ));
        }
        let mu = DMatrix::from_fn(n, k, |j, i| file.mu[i][j]);
        Self::new(DVector::from_vec(file.omega), mu)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| JdError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let topics: Vec<String> = self
            .mu
            .column_iter()
            .map(|c| format!("[{}]", join_sig17(c.iter())))
            .collect();
        format!(
            "{{\"omega\": [{}],\n \"mu\": [\n  {}\n]}}\n",
            join_sig17(self.omega.iter()),
            topics.join(",\n  ")
        )
    }
}

/// Model with Dirichlet(1) topic weights and word distributions.
pub fn random_topic_model(n: usize, k: usize, seed: u64) -> Result<TopicModel> {
    let mut stream = rng::stream(seed, rng::TAG_FAMILY, 7);
    let mut simplex = |len: usize| {
        let v: Vec<f64> = (0..len).map(|_| Exp1.sample(&mut stream)).collect();
        let s: f64 = v.iter().sum();
        DVector::from_iterator(len, v.into_iter().map(|x| x / s))
    };
    let omega = simplex(k);
    let cols: Vec<DVector<f64>> = (0..k).map(|_| simplex(n)).collect();
    TopicModel::new(omega, DMatrix::from_columns(&cols))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TopicMoments {
    pub m2: DMatrix<f64>,
    /// Slice `j` is `M3(:, :, j)`.
    pub m3_slices: Vec<DMatrix<f64>>,
}

pub fn topic_moments_exact(model: &TopicModel) -> TopicMoments {
    let n = model.vocabulary();
    let outer = |i: usize, weight: f64| {
        let c = model.mu.column(i);
        let mut m = DMatrix::zeros(n, n);
        for b in 0..n {
            for a in 0..=b {
                let v = weight * c[a] * c[b];
                m[(a, b)] = v;
                m[(b, a)] = v;
            }
        }
        m
    };
    let mut m2 = DMatrix::zeros(n, n);
    let mut m3_slices = vec![DMatrix::zeros(n, n); n];
    for i in 0..model.topics() {
        let w = model.omega[i];
        m2 += outer(i, w);
        for (j, slice) in m3_slices.iter_mut().enumerate() {
            *slice += outer(i, w * model.mu[(j, i)]);
        }
    }
    TopicMoments { m2, m3_slices }
}

/// Moments plus symmetric Gaussian noise of aggregate Frobenius norm
/// `epsilon`, spread jointly over `M2` and the `n` slices.
pub fn perturb_moments(moments: &TopicMoments, epsilon: f64, seed: u64) -> Result<TopicMoments> {
    let n = moments.m2.nrows();
    let mut noise = noise_matrices(n, n + 1, epsilon, seed)?.into_iter();
    let mut next = |m: &DMatrix<f64>| m + noise.next().expect("one noise matrix per moment matrix");
    let m2 = next(&moments.m2);
    let m3_slices = moments.m3_slices.iter().map(next).collect();
    Ok(TopicMoments { m2, m3_slices })
}

/// Recover `(omega, mu)` with `k` topics from (possibly perturbed)
/// moments. Topics come out in the order of the joint diagonalizer's
/// columns.
pub fn topic_recover(
    moments: &TopicMoments,
    k: usize,
    algorithm: Algorithm,
    trials: usize,
    seed: u64,
) -> Result<TopicModel> {
    let n = moments.m2.nrows();
    if moments.m3_slices.len() != n || moments.m3_slices.iter().any(|s| s.shape() != (n, n)) {
        return Err(JdError::DimensionMismatch(format!(
            "expected {n} third-moment slices of size {n}x{n}"
        )));
    }
    let w = whiten(&moments.m2, k)?;
    let mut family = Vec::with_capacity(n + 1);
    family.push(&w * &moments.m2 * w.transpose());
    family.extend(moments.m3_slices.iter().map(|s| &w * s * w.transpose()));
    let family = SymmetricFamily::new(family)?;
    let v = algorithm.diagonalize(&family, trials, seed)?.into_inner();

    // W^+ = U_k Lambda_k^{1/2}; rows of W are Lambda^{-1/2} u^T, so the
    // pseudo-inverse is W^T scaled column-wise by the retained eigenvalues.
    let eig = symmetric_eig(&moments.m2)?;
    let pinv = DMatrix::from_fn(n, k, |r, c| w[(c, r)] * eig.lambda[n - 1 - c]);

    let mut omega = DVector::zeros(k);
    let mut mu = DMatrix::zeros(n, k);
    for i in 0..k {
        let u = &pinv * v.column(i);
        let total = u.sum();
        omega[i] = total * total;
        for j in 0..n {
            let mut x = u[j] / total;
            if x < 0.0 {
                if x < -NEGATIVE_TOL {
                    return Err(JdError::NegativeParameter {
                        what: format!("mu[{j}][{i}]"),
                        value: x,
                    });
                }
                x = 0.0;
            }
            mu[(j, i)] = x;
        }
    }
    Ok(TopicModel { omega, mu })
}

/// Errors of an estimate against the truth under the best topic matching.
#[derive(Clone, Debug, PartialEq)]
pub struct TopicError {
    /// `permutation[i]` is the estimated topic matched to true topic `i`.
    pub permutation: Vec<usize>,
    pub omega_err: f64,
    pub mu_err: f64,
}

impl TopicError {
    pub fn max_err(&self) -> f64 {
        self.omega_err.max(self.mu_err)
    }
}

/// Match estimated topics to true ones minimizing the largest entrywise
/// error. Exhaustive over permutations up to 8 topics, greedy beyond.
pub fn match_topics(truth: &TopicModel, estimate: &TopicModel) -> Result<TopicError> {
    if truth.mu.shape() != estimate.mu.shape() {
        return Err(JdError::DimensionMismatch(
            "models have different shapes".into(),
        ));
    }
    let k = truth.topics();
    let cost = |i: usize, e: usize| {
        let w = (truth.omega[i] - estimate.omega[e]).abs();
        let m = (truth.mu.column(i) - estimate.mu.column(e)).amax();
        w.max(m)
    };
    let permutation = if k <= 8 {
        let mut best: Option<(f64, Vec<usize>)> = None;
        let mut perm: Vec<usize> = (0..k).collect();
        permute(&mut perm, 0, &mut |p| {
            let c = (0..k).map(|i| cost(i, p[i])).fold(0.0, f64::max);
            if best.as_ref().is_none_or(|(b, _)| c < *b) {
                best = Some((c, p.to_vec()));
            }
        });
        best.map(|(_, p)| p).unwrap_or_default()
    } else {
        let mut used = vec![false; k];
        (0..k)
            .map(|i| {
                let e = (0..k)
                    .filter(|&e| !used[e])
                    .min_by(|&a, &b| cost(i, a).total_cmp(&cost(i, b)))
                    .unwrap();
                used[e] = true;
                e
            })
            .collect()
    };
    let omega_err = (0..k)
        .map(|i| (truth.omega[i] - estimate.omega[permutation[i]]).abs())
        .fold(0.0, f64::max);
    let mu_err = (0..k)
        .map(|i| (truth.mu.column(i) - estimate.mu.column(permutation[i])).amax())
        .fold(0.0, f64::max);
    Ok(TopicError {
        permutation,
        omega_err,
        mu_err,
    })
}

fn permute(p: &mut Vec<usize>, start: usize, visit: &mut impl FnMut(&[usize])) {
    if start == p.len() {
        visit(p);
        return;
    }
    for i in start..p.len() {
        p.swap(start, i);
        permute(p, start + 1, visit);
        p.swap(start, i);
    }
}
