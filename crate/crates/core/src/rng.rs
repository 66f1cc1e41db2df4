//! Counter-keyed random streams.
//!
//! Every path draws from its own ChaCha stream selected by `(seed, path
//! index)`; within a path the draws are consumed in step order. Path `i`
//! therefore sees the same numbers no matter how many paths are generated or
//! which thread generates it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// splitmix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and a sequence of integer keys.
pub fn derive_seed(seed: u64, keys: &[u64]) -> u64 {
    keys.iter().fold(mix64(seed ^ GOLDEN), |acc, &k| {
        mix64(acc.wrapping_add(GOLDEN).wrapping_add(mix64(k.wrapping_add(GOLDEN))))
    })
}

/// The stream used for path `path_index` under master seed `seed`.
pub fn path_stream(seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_index);
    rng
}

/// A general-purpose seeded generator (drift draws, family sampling, ...).
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
