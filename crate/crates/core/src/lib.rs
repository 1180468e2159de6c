//! Randomized joint diagonalization of families of real symmetric
//! matrices.
//!
//! Given symmetric `A_1, ..., A_d` that (nearly) commute, the diagonalizer
//! of a random Gaussian combination `sum_k mu_k A_k` is an approximate
//! joint diagonalizer of the whole family. [`rjd::rjd`] keeps the best of
//! `L` such trials; [`drjd::drjd`] harvests well-converged columns from
//! every trial and recurses on the remaining subspace.
//!
//! ```
//! use jdiag::synth::{generate_family, EigenvalueLaw, FamilySpec};
//!
//! let spec = FamilySpec::new(10, 10, EigenvalueLaw::PositiveDefinite, 7).with_noise(1e-5);
//! let (family, _truth) = generate_family(&spec)?;
//! let out = jdiag::drjd::drjd(&family, 3, 42)?;
//! let err = jdiag::metrics::least_squares_measure(&family, &out.q)?.sqrt();
//! assert!(err < 1e-3);
//! # Ok::<(), jdiag::JdError>(())
//! ```

pub mod apps;
pub mod drjd;
pub mod eig;
mod error;
pub mod matfam;
pub mod metrics;
pub mod numfmt;
pub mod rjd;
pub mod rng;
pub mod synth;

pub use error::{JdError, Result};
pub use matfam::{OrthogonalMatrix, SymmetricFamily};
