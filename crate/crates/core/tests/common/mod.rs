//! Properties shared by the proptest suite and the acceptance harness.
//! Each check takes plain parameters drawn by a strategy and builds its
//! matrices from a seed.
#![allow(dead_code)]

use jdiag::drjd::{column_residuals, drjd, eigen_residuals};
use jdiag::eig::symmetric_eig;
use jdiag::matfam::{orthogonality_defect, random_linear_combination};
use jdiag::metrics::{
    diag_norm_sq, diag_part, least_squares_measure, moreau_amari, offdiag, offdiag_norm_sq,
};
use jdiag::rjd::{eigenvalue_vectors, rjd, rjd_with, select_by_diag, select_by_offdiag, Selection};
use jdiag::rng::{self, JdRng};
use jdiag::synth::{
    cluster_eigenvalue_vectors, generate_commuting, generate_family, haar_orthogonal,
    EigenvalueLaw, FamilySpec,
};
use jdiag::{OrthogonalMatrix, SymmetricFamily};
use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub type Check = std::result::Result<(), TestCaseError>;

pub const CASES: u32 = 1000;

pub fn gaussian(n: usize, m: usize, rng: &mut JdRng) -> DMatrix<f64> {
    DMatrix::from_fn(n, m, |_, _| rng::normal(rng))
}

pub fn random_symmetric(n: usize, rng: &mut JdRng) -> DMatrix<f64> {
    let g = gaussian(n, n, rng);
    (&g + g.transpose()) * 0.5
}

fn law(positive: bool) -> EigenvalueLaw {
    if positive {
        EigenvalueLaw::PositiveDefinite
    } else {
        EigenvalueLaw::Symmetric
    }
}

/// Noisy synthetic family with noise level `10^log_eps` (or exact for
/// `log_eps <= -20`).
pub fn noisy_family(
    n: usize,
    d: usize,
    log_eps: f64,
    positive: bool,
    seed: u64,
) -> SymmetricFamily {
    let eps = if log_eps <= -20.0 {
        0.0
    } else {
        10f64.powf(log_eps)
    };
    let spec = FamilySpec::new(n, d, law(positive), seed).with_noise(eps);
    generate_family(&spec).unwrap().0
}

pub fn family_strategy(
    max_n: usize,
    max_d: usize,
) -> impl Strategy<Value = (usize, usize, f64, bool, u64)> {
    (
        1..=max_n,
        1..=max_d,
        -12.0..0.0f64,
        any::<bool>(),
        any::<u64>(),
    )
}

/// `|A|_F^2 = |diag(Q^T A Q)|_F^2 + |offdiag(Q^T A Q)|_F^2` for orthogonal Q.
pub fn norm_splitting(n: usize, seed: u64) -> Check {
    let mut r = rng::seeded(seed);
    let a = random_symmetric(n, &mut r);
    let q = haar_orthogonal(n, &mut r).unwrap();
    let c = q.matrix().transpose() * &a * q.matrix();
    let total = a.norm_squared();
    let split = diag_norm_sq(&c) + offdiag_norm_sq(&c);
    prop_assert!(
        (total - split).abs() <= 1e-10 * total.max(f64::MIN_POSITIVE),
        "{total} vs {split}"
    );
    // Without a rotation only summation order separates the two sides.
    let unrotated = diag_norm_sq(&a) + offdiag_norm_sq(&a);
    prop_assert!((unrotated - total).abs() <= 1e-14 * total.max(f64::MIN_POSITIVE));
    Ok(())
}

/// `offdiag(A) + diag(A) = A` exactly, zero diagonal, idempotence.
pub fn offdiag_decomposition(n: usize, m: usize, seed: u64) -> Check {
    let n = n.max(1);
    let a = gaussian(n, n, &mut rng::seeded(seed)) * (m as f64);
    let o = offdiag(&a);
    let d = diag_part(&a);
    prop_assert_eq!(&o + &d, a.clone());
    prop_assert!((0..n).all(|i| o[(i, i)] == 0.0));
    prop_assert!(
        (0..n).all(|i| (0..n).all(|j| i == j || (o[(i, j)] == a[(i, j)] && d[(i, j)] == 0.0)))
    );
    prop_assert_eq!(offdiag(&o), o);
    Ok(())
}

fn check_orthogonal(q: &OrthogonalMatrix, tol: f64, what: &str) -> Check {
    let defect = orthogonality_defect(q.matrix());
    let bound = tol * (q.n() as f64).sqrt();
    prop_assert!(defect <= bound, "{what}: defect {defect} > {bound}");
    Ok(())
}

/// Every Q emitted by the eigensolver, RJD trials, DRJD and the Haar
/// sampler is orthogonal.
pub fn emitted_q_orthogonal(
    n: usize,
    d: usize,
    log_eps: f64,
    positive: bool,
    seed: u64,
    trials: usize,
) -> Check {
    let family = noisy_family(n, d, log_eps, positive, seed);
    let e = symmetric_eig(family.get(0)).unwrap();
    check_orthogonal(&e.q, 1e-10, "eig")?;
    let run = rjd(&family, trials, seed ^ 1).unwrap();
    for t in &run.trials {
        check_orthogonal(&t.q, 1e-10, "rjd trial")?;
    }
    let out = drjd(&family, trials, seed ^ 2).unwrap();
    check_orthogonal(&out.q, 1e-9, "drjd")?;
    let h = haar_orthogonal(n, &mut rng::seeded(seed)).unwrap();
    check_orthogonal(&h, 1e-10, "haar")?;
    Ok(())
}

/// Selecting by largest diagonal mass picks the trial with the smallest
/// off-diagonal mass, up to ties at `1e-12` relative.
pub fn selection_equivalence(
    n: usize,
    d: usize,
    log_eps: f64,
    positive: bool,
    seed: u64,
    trials: usize,
) -> Check {
    let family = noisy_family(n, d, log_eps, positive, seed);
    let run = rjd_with(&family, trials, seed ^ 3, Selection::MinOffDiagonal).unwrap();
    let by_diag = select_by_diag(&run.trials, &family).unwrap();
    let by_off = select_by_offdiag(&run.trials, &family).unwrap();
    let tol = 1e-12 * family.total_frobenius_sq();
    let gap = (run.trials[by_diag].total_offdiag_sq - run.trials[by_off].total_offdiag_sq).abs();
    prop_assert!(
        by_diag == by_off || gap <= tol,
        "diag {by_diag} vs offdiag {by_off}, gap {gap}"
    );
    prop_assert_eq!(by_off, run.best_index);
    let default = rjd(&family, trials, seed ^ 3).unwrap();
    prop_assert_eq!(default.best_index, by_diag);
    for t in &run.trials {
        let total = family.total_frobenius_sq();
        prop_assert!((t.total_diag_sq + t.total_offdiag_sq - total).abs() <= 1e-10 * total);
    }
    Ok(())
}

/// Column form and eigen-residual form of the per-column residual agree,
/// and the columns add up to the least-squares measure.
pub fn column_residual_identity(
    n: usize,
    d: usize,
    log_eps: f64,
    positive: bool,
    seed: u64,
) -> Check {
    let family = noisy_family(n, d, log_eps, positive, seed);
    let q = haar_orthogonal(n, &mut rng::seeded(seed ^ 4)).unwrap();
    // A random rotation gives O(1) residuals; a JD output gives tiny ones.
    let q_jd = rjd(&family, 1, seed).unwrap().into_best().q;
    for q in [q, q_jd] {
        let col = column_residuals(&family, &q).unwrap();
        let eig = eigen_residuals(&family, &q).unwrap();
        let scale = family.total_frobenius_sq();
        for (c, e) in col.iter().zip(&eig) {
            prop_assert!((c - e).abs() <= 1e-10 * scale.max(c.abs()), "{c} vs {e}");
        }
        let ls = least_squares_measure(&family, &q).unwrap();
        let sum: f64 = col.iter().sum();
        prop_assert!(
            (sum - ls).abs() <= 1e-10 * ls.max(1e-300) + 1e-14 * scale,
            "{sum} vs {ls}"
        );
    }
    Ok(())
}

/// Brute-force single linkage: union every pair within `delta`.
pub fn union_find_labels(points: &DMatrix<f64>, delta: f64) -> Vec<usize> {
    let n = points.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (points.row(i) - points.row(j)).norm() <= delta {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    // Relabel roots in order of first member.
    let mut label_of_root = vec![usize::MAX; n];
    let mut next = 0;
    (0..n)
        .map(|i| {
            let r = find(&mut parent, i);
            if label_of_root[r] == usize::MAX {
                label_of_root[r] = next;
                next += 1;
            }
            label_of_root[r]
        })
        .collect()
}

/// Clustering matches the union-find oracle and satisfies the separation
/// and diameter inequalities.
pub fn clustering(n: usize, d: usize, delta: f64, spread: f64, seed: u64) -> Check {
    let mut r = rng::seeded(seed);
    let points = gaussian(n, d, &mut r) * spread;
    let c = cluster_eigenvalue_vectors(&points, delta).unwrap();
    prop_assert_eq!(&c.labels, &union_find_labels(&points, delta));
    prop_assert_eq!(c.m, c.labels.iter().max().map_or(0, |m| m + 1));
    let sizes = c.sizes();
    for i in 0..n {
        for j in 0..n {
            let dist = (points.row(i) - points.row(j)).norm();
            if c.labels[i] != c.labels[j] {
                prop_assert!(dist > delta);
            } else {
                prop_assert!(dist <= delta * sizes[c.labels[i]] as f64);
            }
        }
    }
    if n > 0 {
        prop_assert_eq!(c.labels[0], 0);
    }
    Ok(())
}

fn permutation_matrix(p: &[usize]) -> DMatrix<f64> {
    let n = p.len();
    DMatrix::from_fn(n, n, |i, j| if p[i] == j { 1.0 } else { 0.0 })
}

/// The Moreau-Amari index vanishes on scaled permutations and is invariant
/// under row/column permutations and scaling.
pub fn moreau_amari_invariances(
    perm: Vec<usize>,
    perm2: Vec<usize>,
    scales: Vec<f64>,
    c: f64,
    seed: u64,
) -> Check {
    let n = perm.len();
    let p = permutation_matrix(&perm);
    let p2 = permutation_matrix(&perm2);
    let s = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(scales));
    prop_assert_eq!(moreau_amari(&(&s * &p)).unwrap(), 0.0);
    prop_assert_eq!(moreau_amari(&(&p * &s)).unwrap(), 0.0);

    let m = gaussian(n, n, &mut rng::seeded(seed));
    let base = moreau_amari(&m).unwrap();
    prop_assert!((0.0..=1.0).contains(&base));
    let permuted = moreau_amari(&(&p * &m * &p2)).unwrap();
    prop_assert!((permuted - base).abs() <= 1e-12, "{permuted} vs {base}");
    let scaled = moreau_amari(&(&m * c)).unwrap();
    prop_assert!((scaled - base).abs() <= 1e-12, "{scaled} vs {base}");
    Ok(())
}

/// For a commuting family the eigenvalues of `A(mu)` are `<mu, Lambda_i>`.
pub fn eigenvalue_linearity(n: usize, d: usize, positive: bool, seed: u64) -> Check {
    let spec = FamilySpec::new(n, d, law(positive), seed);
    let (family, truth) = generate_commuting(&spec).unwrap();
    let mu = rng::normal_vec(&mut rng::seeded(seed ^ 5), d);
    let a = random_linear_combination(&family, &mu).unwrap();
    let e = symmetric_eig(&a).unwrap();
    let mut expected: Vec<f64> = (0..n)
        .map(|i| {
            truth
                .lambdas
                .row(i)
                .iter()
                .zip(&mu)
                .map(|(l, m)| l * m)
                .sum()
        })
        .collect();
    expected.sort_by(f64::total_cmp);
    let scale = a.norm().max(f64::MIN_POSITIVE);
    for (got, want) in e.lambda.iter().zip(&expected) {
        prop_assert!((got - want).abs() <= 1e-10 * scale, "{got} vs {want}");
    }
    // The Rayleigh-quotient vectors of an exact JD reproduce the same values.
    let q = rjd(&family, 1, seed).unwrap().into_best().q;
    let mut from_q = eigenvalue_vectors(&family, &q)
        .unwrap()
        .eigenvalues_at(&mu)
        .unwrap();
    from_q.sort_by(f64::total_cmp);
    for (got, want) in from_q.iter().zip(&expected) {
        prop_assert!((got - want).abs() <= 1e-10 * scale, "{got} vs {want}");
    }
    Ok(())
}

/// Residual, reconstruction, ordering and orthogonality bounds of the
/// eigensolver.
pub fn eigensolver_bounds(n: usize, seed: u64, degenerate: bool) -> Check {
    let mut r = rng::seeded(seed);
    let a = if degenerate {
        // Repeated eigenvalues: conjugate a diagonal with few distinct values.
        let q = haar_orthogonal(n, &mut r).unwrap().into_inner();
        let diag = DMatrix::from_fn(n, n, |i, j| if i == j { (i % 2) as f64 } else { 0.0 });
        let m = &q * diag * q.transpose();
        (&m + m.transpose()) * 0.5
    } else {
        random_symmetric(n, &mut r)
    };
    let e = symmetric_eig(&a).unwrap();
    let scale = a.norm().max(1.0);
    let q = e.q.matrix();
    let residual = (&a * q - q * DMatrix::from_diagonal(&e.lambda)).norm();
    prop_assert!(residual <= 1e-10 * scale, "residual {residual}");
    prop_assert!((&a - e.reconstruct()).norm() <= 1e-10 * scale);
    prop_assert!(orthogonality_defect(q) <= 1e-10 * (n as f64).sqrt());
    prop_assert!(e.lambda.as_slice().windows(2).all(|w| w[0] <= w[1]));
    let again = symmetric_eig(&a).unwrap();
    prop_assert_eq!(again.q.matrix(), q);
    Ok(())
}

/// DRJD terminates with at least one accepted column per level and
/// strictly shrinking dimensions.
pub fn drjd_termination(
    n: usize,
    d: usize,
    log_eps: f64,
    positive: bool,
    seed: u64,
    trials: usize,
) -> Check {
    let family = noisy_family(n, d, log_eps, positive, seed);
    let out = drjd(&family, trials, seed).unwrap();
    let levels = &out.trace.levels;
    prop_assert!(out.trace.depth() <= n);
    prop_assert!(levels
        .iter()
        .all(|l| l.accepted >= 1 && l.accepted <= l.dimension && l.trial < trials));
    prop_assert!(levels
        .windows(2)
        .all(|w| w[1].dimension == w[0].dimension - w[0].accepted));
    if let Some(first) = levels.first() {
        prop_assert_eq!(first.dimension, n);
        let last = levels.last().unwrap();
        let remaining = last.dimension - last.accepted;
        prop_assert!(
            remaining <= 1,
            "{remaining} columns left after the last level"
        );
    } else {
        prop_assert_eq!(n, 1);
    }
    check_orthogonal(&out.q, 1e-9, "drjd")
}
