//! Seed derivation for reproducible experiments.
//!
//! Every random decision in the crate flows through a ChaCha stream seeded by
//! a 64-bit value, and composite workloads (plans, retries, per-trial runs)
//! derive their seeds with the SplitMix64 finalizer so that any unit of work
//! can be replayed in isolation.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer (Steele, Lea, Flood 2014). Bijective on `u64`.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Trial index reserved for graph generation inside an experiment cell.
pub const GRAPH_STREAM: u64 = u64::MAX;

/// Derives the seed for one unit of work: two SplitMix64 rounds folding in
/// the cell and trial indices. `mix_seed(m, c, t)` is the documented mixer
/// behind "trial seed = hash(master seed, cell index, trial index)".
pub fn mix_seed(master: u64, cell: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(cell)) ^ splitmix64(trial ^ 0x51_7c_c1_b7_27_22_0a_95))
}

/// The RNG used throughout the crate.
pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
