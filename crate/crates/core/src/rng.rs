//! Seeding for all stochastic operations.
//!
//! Every random draw in the crate flows from an explicit 64-bit seed. Parallel
//! work is split into fixed-size blocks; block `b` of stream `s` under base
//! seed `seed` gets its own generator seeded with
//! `splitmix64(splitmix64(seed ^ splitmix64(s)) + b)`. Block boundaries never
//! depend on the number of worker threads, so results are identical for any
//! pool size.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Number of samples drawn from one derived generator in blocked loops.
pub const BLOCK: usize = 1024;

#[inline]
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for task `index` of logical stream `stream`.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(stream)).wrapping_add(index))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

pub fn task_rng(seed: u64, stream: u64, index: u64) -> SimRng {
    rng_from_seed(derive_seed(seed, stream, index))
}

/// Named streams so unrelated consumers of one seed never overlap.
pub mod stream {
    pub const TARGETS: u64 = 1;
    pub const DATABASE: u64 = 2;
    pub const RELATIVES: u64 = 3;
    pub const THRESHOLD: u64 = 4;
    pub const UNRELATED_LR: u64 = 5;
    pub const RESAMPLED_DB: u64 = 6;
    pub const TRIALS: u64 = 7;
    pub const HELD_OUT: u64 = 8;
}
