//! Deterministic seed derivation.
//!
//! Every random stream in the crate is a ChaCha8 generator whose seed is a
//! pure function of a master seed and a path of integers (trial index, arm,
//! key index, ...). Streams never share state, so results do not depend on
//! the order or the thread on which they are drawn.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for the stream addressed by `path` under `master`.
///
/// `derive_seed(m, &[a, b])` is `mix(mix(mix(m) ^ mix(a)) ^ mix(b))`, where
/// `mix` is SplitMix64; the path is order sensitive.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &p| {
        splitmix64(acc ^ splitmix64(p))
    })
}

pub fn stream(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derived_stream(master: u64, path: &[u64]) -> StreamRng {
    stream(derive_seed(master, path))
}
