//! Derived deterministic RNG streams.
//!
//! Every stochastic operation owns a stream derived from (master seed,
//! stream id), so parallel work is schedule-independent and repeat runs
//! are bit-reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; decorrelates nearby (seed, id) pairs.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// An independent RNG stream for (`seed`, `stream`).
pub fn derive_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed).wrapping_add(mix(stream.wrapping_mul(0x9e3779b97f4a7c15))))
}

/// A doubly-indexed stream, e.g. (seed, user, trial).
pub fn derive_rng2(seed: u64, a: u64, b: u64) -> ChaCha8Rng {
    derive_rng(mix(seed ^ mix(a)), b)
}
