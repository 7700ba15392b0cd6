//! Seed derivation. Every randomized routine takes an explicit seed; nested
//! jobs derive their own seeds from a parent seed and a path of integers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `base` and a path of tags. Distinct paths give
/// statistically independent streams; the mapping is stable across platforms.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(base), |acc, &tag| splitmix64(acc ^ splitmix64(tag.wrapping_add(GOLDEN))))
}

/// Portable, reproducible generator used throughout the crate.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
