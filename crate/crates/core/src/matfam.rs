//! Families of real symmetric matrices, orthogonal matrices, and the JSON
//! family file format.
//!
//! A family file looks like
//!
//! ```text
//! {"n": 2, "d": 1, "matrices": [[1.0, 0.0, 0.0, 2.0]]}
//! ```
//!
//! with exactly `d` inner arrays of `n * n` row-major entries. Files are
//! written with 17 significant digits so that a save/load round trip is
//! bit-faithful.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Deserialize;

use crate::error::{JdError, Result};

/// Relative asymmetry above which a loaded matrix is rejected.
pub const ASYMMETRY_REJECT: f64 = 1e-6;

/// Tolerance factor for `OrthogonalMatrix`: `|Q^T Q - I|_F <= tol * sqrt(n)`.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

/// An ordered family of `d` symmetric `n x n` matrices.
///
/// Construction symmetrizes each matrix as `(A + A^T) / 2`, so every
/// stored matrix is exactly symmetric.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricFamily {
    n: usize,
    matrices: Vec<DMatrix<f64>>,
}

impl SymmetricFamily {
    /// Validate and symmetrize. Matrices whose asymmetry `|A - A^T|_F`
    /// exceeds `1e-6 * max_k |A_k|_F` are rejected.
    pub fn new(matrices: Vec<DMatrix<f64>>) -> Result<Self> {
        let first = matrices.first().ok_or_else(|| {
            JdError::InvalidArgument("family must contain at least one matrix".into())
        })?;
        let n = first.nrows();
        if n == 0 {
            return Err(JdError::InvalidArgument(
                "matrix dimension must be positive".into(),
            ));
        }
        for (k, a) in matrices.iter().enumerate() {
            if a.nrows() != n || a.ncols() != n {
                return Err(JdError::DimensionMismatch(format!(
                    "matrix {k} is {}x{}, expected {n}x{n}",
                    a.nrows(),
                    a.ncols()
                )));
            }
            if a.iter().any(|x| !x.is_finite()) {
                return Err(JdError::InvalidArgument(format!(
                    "matrix {k} has non-finite entries"
                )));
            }
        }
        let scale = matrices.iter().map(|a| a.norm()).fold(0.0, f64::max);
        let mut out = Vec::with_capacity(matrices.len());
        for (k, a) in matrices.into_iter().enumerate() {
            let asym = (&a - a.transpose()).norm();
            if asym > 0.0 {
                let relative = if scale > 0.0 {
                    asym / scale
                } else {
                    f64::INFINITY
                };
                if relative > ASYMMETRY_REJECT {
                    return Err(JdError::Asymmetric { index: k, relative });
                }
            }
            out.push(symmetrize(&a));
        }
        Ok(SymmetricFamily { n, matrices: out })
    }

    /// Build a family from row-major entry vectors of length `n * n`.
    pub fn from_row_major(n: usize, data: &[Vec<f64>]) -> Result<Self> {
        let mats = data
            .iter()
            .enumerate()
            .map(|(k, v)| {
                if v.len() != n * n {
                    Err(JdError::DimensionMismatch(format!(
                        "matrix {k} has {} entries, expected {}",
                        v.len(),
                        n * n
                    )))
                } else {
                    Ok(DMatrix::from_row_slice(n, n, v))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(mats)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.matrices.len()
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.matrices
    }

    pub fn get(&self, k: usize) -> &DMatrix<f64> {
        &self.matrices[k]
    }

    /// `sum_k |A_k|_F^2`.
    pub fn total_frobenius_sq(&self) -> f64 {
        self.matrices.iter().map(|a| a.norm_squared()).sum()
    }

    /// The family `{Q^T A_k Q}`, where `q` is `n x m` with orthonormal
    /// columns. Used both for scoring (`m = n`) and for deflation.
    pub fn conjugated(&self, q: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        self.matrices.iter().map(|a| congruence(a, q)).collect()
    }

    /// Restriction of the family to the column span of `q` (`n x m`).
    pub fn restrict(&self, q: &DMatrix<f64>) -> Result<SymmetricFamily> {
        if q.nrows() != self.n {
            return Err(JdError::DimensionMismatch(format!(
                "basis has {} rows, family has n = {}",
                q.nrows(),
                self.n
            )));
        }
        Ok(SymmetricFamily {
            n: q.ncols(),
            matrices: self.conjugated(q),
        })
    }

    pub fn to_row_major(&self) -> Vec<Vec<f64>> {
        self.matrices
            .iter()
            .map(|a| {
                let mut v = Vec::with_capacity(self.n * self.n);
                for i in 0..self.n {
                    for j in 0..self.n {
                        v.push(a[(i, j)]);
                    }
                }
                v
            })
            .collect()
    }

    /// Serialize to the family JSON format.
    pub fn to_json(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "{{\"n\": {}, \"d\": {}, \"matrices\": [",
            self.n,
            self.d()
        );
        for (k, row) in self.to_row_major().iter().enumerate() {
            if k > 0 {
                s.push(',');
            }
            s.push_str("\n  [");
            s.push_str(&crate::numfmt::join_sig17(row));
            s.push(']');
        }
        s.push_str("\n]}\n");
        s
    }

    /// Parse the family JSON format.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct FamilyFile {
            n: usize,
            d: usize,
            matrices: Vec<Vec<f64>>,
        }
        let file: FamilyFile =
            serde_json::from_str(text).map_err(|e| JdError::Parse(e.to_string()))?;
        if file.matrices.len() != file.d {
            return Err(JdError::DimensionMismatch(format!(
                "header says d = {} but {} matrices are present",
                file.d,
                file.matrices.len()
            )));
        }
        Self::from_row_major(file.n, &file.matrices)
    }
}

/// Read and validate a family file.
pub fn load_family(path: impl AsRef<Path>) -> Result<SymmetricFamily> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| JdError::io(path, e))?;
    SymmetricFamily::from_json(&text)
}

/// Write a family file.
pub fn save_family(family: &SymmetricFamily, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, family.to_json()).map_err(|e| JdError::io(path, e))
}

/// A square matrix with orthonormal columns, verified on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthogonalMatrix(DMatrix<f64>);

impl OrthogonalMatrix {
    pub fn new(q: DMatrix<f64>) -> Result<Self> {
        if !q.is_square() {
            return Err(JdError::DimensionMismatch(format!(
                "orthogonal matrix must be square, got {}x{}",
                q.nrows(),
                q.ncols()
            )));
        }
        let deviation = orthogonality_defect(&q);
        if deviation.is_nan() || deviation > ORTHOGONALITY_TOL * (q.nrows() as f64).sqrt() {
            return Err(JdError::NotOrthogonal { deviation });
        }
        Ok(OrthogonalMatrix(q))
    }

    pub fn identity(n: usize) -> Self {
        OrthogonalMatrix(DMatrix::identity(n, n))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

impl AsRef<DMatrix<f64>> for OrthogonalMatrix {
    fn as_ref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Aggregate Frobenius noise level `(sum_k |E_k|_F^2)^(1/2)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct NoiseBudget(f64);

impl NoiseBudget {
    pub fn new(epsilon: f64) -> Result<Self> {
        if epsilon.is_finite() && epsilon >= 0.0 {
            Ok(NoiseBudget(epsilon))
        } else {
            Err(JdError::InvalidArgument(format!(
                "noise level must be finite and >= 0, got {epsilon}"
            )))
        }
    }

    pub fn epsilon(self) -> f64 {
        self.0
    }
}

/// `|Q^T Q - I|_F`.
pub fn orthogonality_defect(q: &DMatrix<f64>) -> f64 {
    let g = q.tr_mul(q);
    let mut s = 0.0;
    for j in 0..g.ncols() {
        for i in 0..g.nrows() {
            let e = g[(i, j)] - if i == j { 1.0 } else { 0.0 };
            s += e * e;
        }
    }
    s.sqrt()
}

/// `(A + A^T) / 2`, exactly symmetric.
pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut out = a.clone();
    for j in 0..n {
        for i in 0..j {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// `Q^T A Q` for symmetric `A` and `n x m` `Q`. Only the upper triangle is
/// computed; the result is mirrored, so it is exactly symmetric.
pub fn congruence(a: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
    let m = q.ncols();
    let aq = a * q;
    let mut out = DMatrix::zeros(m, m);
    for j in 0..m {
        let aq_j = aq.column(j);
        for i in 0..=j {
            let v = q.column(i).dot(&aq_j);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// `sum_k mu_k A_k`, exactly symmetric.
pub fn random_linear_combination(family: &SymmetricFamily, mu: &[f64]) -> Result<DMatrix<f64>> {
    if mu.len() != family.d() {
        return Err(JdError::DimensionMismatch(format!(
            "combination vector has length {}, family has d = {}",
            mu.len(),
            family.d()
        )));
    }
    let n = family.n();
    let mut out = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let v: f64 = family
                .matrices()
                .iter()
                .zip(mu)
                .map(|(a, m)| m * a[(i, j)])
                .sum();
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

/// The `d x d` matrix of `|A_j A_k - A_k A_j|_F`.
pub fn commutator_norms(family: &SymmetricFamily) -> DMatrix<f64> {
    let d = family.d();
    let mut out = DMatrix::zeros(d, d);
    for j in 0..d {
        for k in (j + 1)..d {
            // For symmetric A_j, A_k the commutator is P - P^T with P = A_j A_k.
            let p = family.get(j) * family.get(k);
            let v = (&p - p.transpose()).norm();
            out[(j, k)] = v;
            out[(k, j)] = v;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn diag2() -> SymmetricFamily {
        SymmetricFamily::from_row_major(2, &[vec![1.0, 0.0, 0.0, 2.0]]).unwrap()
    }

    #[test]
    fn parses_diagonal_family() {
        let f = SymmetricFamily::from_json(r#"{"n": 2, "d": 1, "matrices": [[1,0,0,2]]}"#).unwrap();
        assert_eq!(f, diag2());
    }

    #[test]
    fn rejects_mismatched_dimensions() {
        let text = r#"{"n": 2, "d": 2, "matrices": [[1,0,0,2],[1,0,0,0,1,0,0,0,1]]}"#;
        assert!(matches!(
            SymmetricFamily::from_json(text),
            Err(JdError::DimensionMismatch(_))
        ));
        let mixed = SymmetricFamily::new(vec![DMatrix::identity(2, 2), DMatrix::identity(3, 3)]);
        assert!(matches!(mixed, Err(JdError::DimensionMismatch(_))));
    }

    #[test]
    fn rejects_wrong_matrix_count() {
        let text = r#"{"n": 2, "d": 2, "matrices": [[1,0,0,2]]}"#;
        assert!(matches!(
            SymmetricFamily::from_json(text),
            Err(JdError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        assert!(matches!(
            SymmetricFamily::from_json("{\"n\": 2,"),
            Err(JdError::Parse(_))
        ));
    }

    #[test]
    fn small_asymmetry_is_symmetrized() {
        let a = dmatrix![1.0, 0.5 + 1e-9; 0.5, 2.0];
        let f = SymmetricFamily::new(vec![a]).unwrap();
        let m = f.get(0);
        assert_eq!(m[(0, 1)], m[(1, 0)]);
        assert_eq!(m[(0, 1)], 0.5 * ((0.5 + 1e-9) + 0.5));
    }

    #[test]
    fn large_asymmetry_is_rejected() {
        let a = dmatrix![1.0, 1.0; 0.0, 2.0];
        assert!(matches!(
            SymmetricFamily::new(vec![a]),
            Err(JdError::Asymmetric { index: 0, .. })
        ));
    }

    #[test]
    fn empty_family_is_rejected() {
        assert!(SymmetricFamily::new(vec![]).is_err());
        assert!(SymmetricFamily::new(vec![DMatrix::zeros(0, 0)]).is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.json");
        save_family(&diag2(), &path).unwrap();
        assert_eq!(load_family(&path).unwrap(), diag2());
    }

    #[test]
    fn random_round_trip_is_bit_exact() {
        let mut rng = crate::rng::seeded(5);
        let mats = (0..10)
            .map(|_| {
                let g = DMatrix::from_fn(10, 10, |_, _| crate::rng::normal(&mut rng));
                symmetrize(&g)
            })
            .collect();
        let f = SymmetricFamily::new(mats).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.json");
        save_family(&f, &path).unwrap();
        let g = load_family(&path).unwrap();
        let max_rel = f
            .matrices()
            .iter()
            .zip(g.matrices())
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| ((x - y) / x).abs()))
            .fold(0.0, f64::max);
        assert!(max_rel <= 1e-15, "max relative deviation {max_rel}");
        assert_eq!(f, g);
    }

    #[test]
    fn save_to_unwritable_path_fails() {
        let err = save_family(&diag2(), "/nonexistent-dir/x/f.json").unwrap_err();
        assert!(matches!(err, JdError::Io { .. }));
    }

    #[test]
    fn load_missing_file_is_io_error() {
        assert!(matches!(
            load_family("/nonexistent/f.json"),
            Err(JdError::Io { .. })
        ));
    }

    #[test]
    fn diagonal_matrices_commute() {
        let f = SymmetricFamily::new(vec![
            DMatrix::from_diagonal(&nalgebra::dvector![1.0, 2.0, 3.0]),
            DMatrix::from_diagonal(&nalgebra::dvector![-1.0, 5.0, 0.5]),
        ])
        .unwrap();
        assert!(commutator_norms(&f).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn pauli_pair_commutator() {
        // A1 A2 = [[0,-1],[1,0]], A2 A1 = [[0,1],[-1,0]], difference [[0,-2],[2,0]].
        let f = SymmetricFamily::new(vec![
            dmatrix![0.0, 1.0; 1.0, 0.0],
            dmatrix![1.0, 0.0; 0.0, -1.0],
        ])
        .unwrap();
        let c = commutator_norms(&f);
        assert!((c[(0, 1)] - 2.0 * 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(c[(0, 1)], c[(1, 0)]);
        assert_eq!(c[(0, 0)], 0.0);
    }

    #[test]
    fn single_matrix_commutator_is_zero() {
        let c = commutator_norms(&diag2());
        assert_eq!(c.shape(), (1, 1));
        assert_eq!(c[(0, 0)], 0.0);
    }

    #[test]
    fn linear_combination_examples() {
        let f = SymmetricFamily::new(vec![
            DMatrix::identity(2, 2),
            DMatrix::from_diagonal(&nalgebra::dvector![1.0, 2.0]),
        ])
        .unwrap();
        assert_eq!(
            random_linear_combination(&f, &[1.0, 0.0]).unwrap(),
            *f.get(0)
        );
        assert_eq!(
            random_linear_combination(&f, &[0.0, 0.0]).unwrap(),
            DMatrix::zeros(2, 2)
        );
        assert_eq!(
            random_linear_combination(&f, &[1.0, 1.0]).unwrap(),
            DMatrix::from_diagonal(&nalgebra::dvector![2.0, 3.0])
        );
        assert!(matches!(
            random_linear_combination(&f, &[1.0]),
            Err(JdError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn orthogonal_matrix_is_verified() {
        assert!(OrthogonalMatrix::new(dmatrix![0.0, 1.0; 1.0, 0.0]).is_ok());
        assert!(matches!(
            OrthogonalMatrix::new(dmatrix![1.0, 0.1; 0.0, 1.0]),
            Err(JdError::NotOrthogonal { .. })
        ));
        assert!(OrthogonalMatrix::new(DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn noise_budget_must_be_nonnegative() {
        assert!(NoiseBudget::new(0.0).is_ok());
        assert!(NoiseBudget::new(-1e-3).is_err());
        assert!(NoiseBudget::new(f64::NAN).is_err());
    }
}
