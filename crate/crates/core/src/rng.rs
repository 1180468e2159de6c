//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator. A run is
//! identified by a 64-bit seed; independent sub-streams (per repeat, per
//! deflation level, per purpose) are obtained by mixing a tag and an index
//! into the seed with SplitMix64 and selecting a ChaCha stream. Normal
//! variates use the ziggurat sampler of `rand_distr::StandardNormal`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type JdRng = ChaCha8Rng;

/// Default seed used by the CLI when none is given.
pub const DEFAULT_SEED: u64 = 0x5EED_2021_0A11_CE55;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `seed` for a given purpose tag and index.
pub fn derive_seed(seed: u64, tag: u64, index: u64) -> u64 {
    mix64(mix64(seed ^ mix64(tag)) ^ index)
}

/// Generator for the plain stream of `seed`.
pub fn seeded(seed: u64) -> JdRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for sub-stream `index` of `seed` under `tag`.
pub fn stream(seed: u64, tag: u64, index: u64) -> JdRng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, tag, 0));
    rng.set_stream(index);
    rng
}

pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn normal_vec<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| normal(rng)).collect()
}

// Purpose tags for `stream` / `derive_seed`.
pub(crate) const TAG_FAMILY: u64 = 1;
pub(crate) const TAG_NOISE: u64 = 2;
pub(crate) const TAG_REPEAT: u64 = 3;
pub(crate) const TAG_LEVEL: u64 = 4;
pub(crate) const TAG_SIGNAL: u64 = 5;
pub(crate) const TAG_PROBE: u64 = 6;
