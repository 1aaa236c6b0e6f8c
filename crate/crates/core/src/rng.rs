//! Deterministic RNG stream derivation.
//!
//! Every stochastic step (surrogate realization, subsample window, synthetic
//! noise) draws from its own ChaCha stream keyed by the run seed plus a path
//! of integers. Streams never depend on evaluation order, so parallel and
//! serial runs produce identical results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags, kept distinct so unrelated consumers never share a stream.
pub(crate) mod tag {
    pub const MI_SURROGATE: u64 = 0x4d49;
    pub const TE_SURROGATE: u64 = 0x5445;
    pub const WINDOW: u64 = 0x574e;
    pub const SUBSAMPLE: u64 = 0x5342;
    pub const NOISE: u64 = 0x4e5a;
    pub const TRIAL: u64 = 0x5452;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a path of integers into a child seed.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// A fresh RNG for the stream identified by `(seed, path)`.
pub fn stream(seed: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, path))
}
