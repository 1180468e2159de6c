use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = JdError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum JdError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix {index} is not symmetric (relative asymmetry {relative:.3e})")]
    Asymmetric { index: usize, relative: f64 },

    #[error("matrix is not orthogonal (|Q^T Q - I|_F = {deviation:.3e})")]
    NotOrthogonal { deviation: f64 },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("trial {trial}: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: Box<JdError>,
    },

    #[error("deflation level {level}: {source}")]
    Level {
        level: usize,
        #[source]
        source: Box<JdError>,
    },

    #[error("conjugated matrix {index} is not positive definite")]
    NotPositiveDefinite { index: usize },

    #[error("all-zero {kind} {index} in Moreau-Amari index")]
    ZeroLine { kind: &'static str, index: usize },

    #[error("rank deficient: eigenvalue {eigenvalue:.3e} below threshold {threshold:.3e}")]
    RankDeficient { eigenvalue: f64, threshold: f64 },

    #[error(
        "too few samples: T = {samples} but at least {required} are needed for n = {channels}"
    )]
    TooFewSamples {
        samples: usize,
        required: usize,
        channels: usize,
    },

    #[error("recovered parameter {what} = {value:.3e} is negative")]
    NegativeParameter { what: String, value: f64 },

    #[error("empty trial list")]
    EmptyTrials,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl JdError {
    /// True for errors caused by unreadable or malformed input rather than
    /// by the numerics.
    pub fn is_input_error(&self) -> bool {
        match self {
            JdError::Io { .. }
            | JdError::Parse(_)
            | JdError::DimensionMismatch(_)
            | JdError::Asymmetric { .. }
            | JdError::TooFewSamples { .. }
            | JdError::InvalidArgument(_) => true,
            JdError::Trial { source, .. } | JdError::Level { source, .. } => {
                source.is_input_error()
            }
            _ => false,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        JdError::Io {
            path: path.into(),
            source,
        }
    }
}
