//! Seed derivation.
//!
//! Every random stream is a `ChaCha8Rng` seeded from a 64-bit value derived
//! from the user seed by SplitMix64 mixing of a tag path, so results do not
//! depend on platform or evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `path` into `base`. Distinct paths give unrelated seeds.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(base), |acc, &x| splitmix64(acc ^ splitmix64(x)))
}

pub fn rng_from(base: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, path))
}

/// Stream tags used across the crate.
pub mod tag {
    pub const INSTANCE: u64 = 1;
    pub const SAMPLES: u64 = 2;
    pub const RESTART: u64 = 3;
    pub const ROUTING: u64 = 4;
    pub const SIMULATION: u64 = 5;
    pub const SWEEP: u64 = 6;
}
