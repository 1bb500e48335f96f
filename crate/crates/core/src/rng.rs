//! Seeded, portable random streams.
//!
//! Every stream is a ChaCha8 generator keyed by a 64-bit seed; per-item
//! streams are derived from a master seed and an index so that collections
//! can be generated in any order (or in parallel) with identical results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the `index`-th sub-stream of `seed`.
pub fn derive(seed: u64, index: u64) -> u64 {
    splitmix(splitmix(seed) ^ splitmix(index.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

/// Seed of a named sub-stream (e.g. "victims", "kmatch").
pub fn derive_named(seed: u64, name: &str) -> u64 {
    name.bytes().fold(seed, |acc, b| derive(acc, b as u64))
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
