//! Application pipelines built on joint diagonalization: blind source
//! separation from fourth-order cumulant matrices, and parameter recovery
//! for single topic models from their second and third moments.

mod bss;
mod topics;
mod whitening;

pub use bss::{
    bss_separate, canonical_probes, cumulant_matrices, load_matrix_csv, matrix_to_csv,
    parse_csv_matrix, probe_set, synthetic_mixture, BssResult, SignalMatrix, SyntheticMixture,
};
pub use topics::{
    match_topics, perturb_moments, random_topic_model, topic_moments_exact, topic_recover,
    TopicError, TopicModel, TopicMoments, NEGATIVE_TOL,
};
pub use whitening::whiten;
