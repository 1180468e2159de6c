//! Blind source separation with cumulant matrices.
//!
//! For observations `x` (T samples of n channels) and a symmetric probe
//! `M`, the cumulant matrix is
//!
//! ```text
//! Q_x(M)_ij = sum_{k,l} cum(x_i, x_j, x_k, x_l) M_kl
//!           = E[x_i x_j x^T M x] - C_ij tr(M C) - (C M C)_ij - (C M^T C)_ij
//! ```
//!
//! with `C = E[x x^T]` for centered `x`. Expectations are plain sample
//! means (biased `1/T` estimator). After whitening, the cumulant matrices
//! of independent sources share the eigenbasis of the whitened mixing
//! matrix, so a joint diagonalizer recovers the unmixing matrix.

use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;

use super::whitening::whiten;
use crate::error::{JdError, Result};
use crate::matfam::{symmetrize, SymmetricFamily};
use crate::numfmt::sig17;
use crate::rng;
use crate::synth::{haar_orthogonal, Algorithm};

/// Observed signals: one row per sample, one column per channel.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalMatrix {
    samples: DMatrix<f64>,
}

impl SignalMatrix {
    pub fn new(samples: DMatrix<f64>) -> Result<Self> {
        if samples.ncols() == 0 || samples.nrows() <= samples.ncols() {
            return Err(JdError::InvalidArgument(format!(
                "signal matrix needs more samples than channels, got {}x{}",
                samples.nrows(),
                samples.ncols()
            )));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(JdError::InvalidArgument(
                "signal has non-finite samples".into(),
            ));
        }
        Ok(SignalMatrix { samples })
    }

    pub fn samples(&self) -> &DMatrix<f64> {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.nrows() == 0
    }

    pub fn channels(&self) -> usize {
        self.samples.ncols()
    }

    /// Column-centered copy.
    pub fn centered(&self) -> DMatrix<f64> {
        let mut x = self.samples.clone();
        for mut col in x.column_iter_mut() {
            let mean = col.mean();
            col.add_scalar_mut(-mean);
        }
        x
    }

    /// `E[x x^T]` of the centered signal.
    pub fn covariance(&self) -> DMatrix<f64> {
        let x = self.centered();
        symmetrize(&(x.tr_mul(&x) / self.len() as f64))
    }

    /// Parse headerless CSV, one sample per line.
    pub fn from_csv(text: &str) -> Result<Self> {
        Self::new(parse_csv_matrix(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| JdError::io(path, e))?;
        Self::from_csv(&text)
    }

    pub fn to_csv(&self) -> String {
        matrix_to_csv(&self.samples)
    }
}

/// Read a headerless numeric CSV file into a matrix.
pub fn load_matrix_csv(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| JdError::io(path, e))?;
    parse_csv_matrix(&text)
}

/// Parse a headerless numeric CSV into a matrix.
pub fn parse_csv_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| JdError::Parse(e.to_string()))?;
        let row = record
            .iter()
            .map(|field| {
                field
                    .parse::<f64>()
                    .map_err(|e| JdError::Parse(format!("row {}: {field:?}: {e}", line + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(JdError::DimensionMismatch(format!(
                    "row {} has {} fields, expected {}",
                    line + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

/// Headerless CSV, one matrix row per line, 17 significant digits.
pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let fields: Vec<String> = row.iter().map(|x| sig17(*x)).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// The `n (n + 1) / 2` matrices `(E_ij + E_ji) / 2`, `i <= j`, in row order.
pub fn canonical_probes(n: usize) -> Vec<DMatrix<f64>> {
    let mut probes = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            let mut m = DMatrix::zeros(n, n);
            if i == j {
                m[(i, i)] = 1.0;
            } else {
                m[(i, j)] = 0.5;
                m[(j, i)] = 0.5;
            }
            probes.push(m);
        }
    }
    probes
}

/// `count` probe matrices: the canonical set followed by random symmetric
/// probes when `count` exceeds its size, or `count` random symmetric probes
/// when it is smaller.
pub fn probe_set(n: usize, count: usize, seed: u64) -> Vec<DMatrix<f64>> {
    let full = n * (n + 1) / 2;
    let mut stream = rng::stream(seed, rng::TAG_PROBE, 0);
    let mut random_probe = || symmetrize(&DMatrix::from_fn(n, n, |_, _| rng::normal(&mut stream)));
    if count >= full {
        let mut probes = canonical_probes(n);
        probes.extend((full..count).map(|_| random_probe()));
        probes
    } else {
        (0..count).map(|_| random_probe()).collect()
    }
}

/// Empirical cumulant matrices `Q_x(M)` for each probe.
pub fn cumulant_matrices(x: &SignalMatrix, probes: &[DMatrix<f64>]) -> Result<SymmetricFamily> {
    let n = x.channels();
    let t = x.len();
    let required = 10 * n * n;
    if t < required {
        return Err(JdError::TooFewSamples {
            samples: t,
            required,
            channels: n,
        });
    }
    if probes.is_empty() {
        return Err(JdError::InvalidArgument(
            "at least one probe matrix is required".into(),
        ));
    }
    for (p, m) in probes.iter().enumerate() {
        if m.shape() != (n, n) {
            return Err(JdError::DimensionMismatch(format!(
                "probe {p} is not {n}x{n}"
            )));
        }
        if (m - m.transpose()).norm() > 1e-12 * m.norm() {
            return Err(JdError::Asymmetric {
                index: p,
                relative: (m - m.transpose()).norm() / m.norm(),
            });
        }
    }
    let xc = x.centered();
    let tf = t as f64;
    let c = symmetrize(&(xc.tr_mul(&xc) / tf));
    let out = probes
        .iter()
        .map(|m| {
            // E[x_i x_j (x^T M x)], accumulated sample by sample.
            let mut fourth = DMatrix::<f64>::zeros(n, n);
            let xm = &xc * m;
            for s in 0..t {
                let row = xc.row(s);
                let weight = row.dot(&xm.row(s));
                for j in 0..n {
                    let wj = weight * row[j];
                    for i in 0..=j {
                        fourth[(i, j)] += row[i] * wj;
                    }
                }
            }
            for j in 0..n {
                for i in 0..j {
                    fourth[(j, i)] = fourth[(i, j)];
                }
            }
            fourth /= tf;
            let trace_mc = (m * &c).trace();
            let cmc = &c * m * &c;
            let cmtc = &c * m.transpose() * &c;
            symmetrize(&(fourth - &c * trace_mc - cmc - cmtc))
        })
        .collect();
    SymmetricFamily::new(out)
}

#[derive(Clone, Debug)]
pub struct BssResult {
    /// Unmixing matrix `B = Q^T W`.
    pub unmixing: DMatrix<f64>,
    pub whitening: DMatrix<f64>,
    pub rotation: DMatrix<f64>,
}

impl BssResult {
    /// Estimated sources `B x`, one row per sample.
    pub fn separate(&self, x: &SignalMatrix) -> DMatrix<f64> {
        x.centered() * self.unmixing.transpose()
    }
}

/// Whiten, form `probe_count` cumulant matrices of the whitened signal, and
/// jointly diagonalize them.
pub fn bss_separate(
    x: &SignalMatrix,
    probe_count: usize,
    algorithm: Algorithm,
    trials: usize,
    seed: u64,
) -> Result<BssResult> {
    if probe_count == 0 {
        return Err(JdError::InvalidArgument(
            "probe count must be positive".into(),
        ));
    }
    let n = x.channels();
    let w = whiten(&x.covariance(), n)?;
    let z = SignalMatrix::new(x.centered() * w.transpose())?;
    let probes = probe_set(n, probe_count, seed);
    let family = cumulant_matrices(&z, &probes)?;
    let q = algorithm.diagonalize(&family, trials, seed)?.into_inner();
    Ok(BssResult {
        unmixing: q.transpose() * &w,
        whitening: w,
        rotation: q,
    })
}

/// A synthetic separation problem with known mixing matrix.
#[derive(Clone, Debug)]
pub struct SyntheticMixture {
    pub signals: SignalMatrix,
    pub sources: DMatrix<f64>,
    pub mixing: DMatrix<f64>,
}

/// Unit-variance Laplace sources (`laplace` channels) followed by standard
/// Gaussian channels, mixed by a Haar-random orthogonal matrix. With
/// `orthogonal_mixing == false` the mixing matrix is the identity.
pub fn synthetic_mixture(
    laplace: usize,
    gaussian: usize,
    samples: usize,
    orthogonal_mixing: bool,
    seed: u64,
) -> Result<SyntheticMixture> {
    let n = laplace + gaussian;
    let mut stream = rng::stream(seed, rng::TAG_SIGNAL, 0);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let sources = DMatrix::from_fn(samples, n, |_, j| {
        if j < laplace {
            let u: f64 = stream.random_range(-0.5..0.5);
            -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
        } else {
            rng::normal(&mut stream)
        }
    });
    let mixing = if orthogonal_mixing {
        haar_orthogonal(n, &mut rng::stream(seed, rng::TAG_SIGNAL, 1))?.into_inner()
    } else {
        DMatrix::identity(n, n)
    };
    let signals = SignalMatrix::new(&sources * mixing.transpose())?;
    Ok(SyntheticMixture {
        signals,
        sources,
        mixing,
    })
}
