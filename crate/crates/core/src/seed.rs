//! Deterministic seed derivation.
//!
//! Every random stream in the crate is a ChaCha8 stream keyed by a 64-bit
//! seed and selected by a stream index, so `(seed, index)` pairs give
//! decorrelated, reproducible streams.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Generator for stream `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A child seed derived from `(seed, index)`.
///
/// Used for the two hash functions of a run (index 0 and 1) and for the
/// per-trial seeds of an experiment.
pub fn derive(seed: u64, index: u64) -> u64 {
    // Stream indices for derivation live in the upper half so they never
    // coincide with the table-filling streams of the same seed.
    stream(seed, index | (1 << 63)).next_u64()
}
