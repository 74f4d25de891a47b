//! Seed derivation for reproducible parallel substreams.
//!
//! Every randomized stage of the pipeline (mirror noise, simulated
//! covariates, fold assignment, ...) draws from a ChaCha8 generator whose
//! seed is derived from a master seed plus a tag path. Substreams are
//! therefore independent of execution order: feature 7's noise is the same
//! whether it is computed first, last, or on another thread.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; decorrelates nearby seeds.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and a tag path.
pub fn derive_seed(parent: u64, tags: &[u64]) -> u64 {
    let mut s = splitmix64(parent);
    for &t in tags {
        s = splitmix64(s ^ splitmix64(t));
    }
    s
}

/// Deterministic generator for a derived seed.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
