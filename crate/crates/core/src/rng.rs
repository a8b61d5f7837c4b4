//! Counter-based seeding.
//!
//! Every random draw in the crate comes from a ChaCha stream keyed by a seed and a
//! path of counters (generation, offspring index, shot index, ...). Results are
//! therefore independent of evaluation order and thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags keep unrelated consumers of the same counters apart.
pub mod tag {
    pub const INITIAL: u64 = 0x1;
    pub const MUTATION: u64 = 0x2;
    pub const MEASURE: u64 = 0x3;
    pub const OUTCOME: u64 = 0x4;
    pub const NOISE: u64 = 0x5;
    pub const QAOA_START: u64 = 0x6;
    pub const QAOA_EVAL: u64 = 0x7;
    pub const INSTANCE: u64 = 0x8;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `path` into `seed` to derive a child seed.
pub fn derive(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn stream(seed: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, path))
}
