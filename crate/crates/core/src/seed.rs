//! Counter-based seed derivation.
//!
//! Every replicate in every sweep draws its randomness from a seed derived
//! from the master seed and the replicate's coordinates, so results never
//! depend on how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// The splitmix64 finalizer.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a task seed from a master seed and task coordinates.
///
/// `derive_seed(m, &[a, b])` is `splitmix64(splitmix64(splitmix64(m) ^ a) ^ b)`.
pub fn derive_seed(master: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(splitmix64(master), |acc, &c| splitmix64(acc ^ c))
}

/// Coordinate encoding for signed lattice indices.
#[inline]
pub fn coord_i64(v: i64) -> u64 {
    v as u64
}

/// Coordinate encoding for real-valued sweep parameters (by bit pattern).
#[inline]
pub fn coord_f64(v: f64) -> u64 {
    v.to_bits()
}

/// A uniform draw in `[0, 1)` that is a pure function of its inputs.
pub fn unit_hash(seed: u64, coords: &[u64]) -> f64 {
    (derive_seed(seed, coords) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn rng(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}
