//! Seeded random streams and the replica sub-seeding rule.
//!
//! Every simulation replica (an independent agent trajectory or an
//! independent kinetic run) owns its own stream, derived from the master
//! seed by a fixed rule so that results do not depend on scheduling:
//!
//! ```text
//! replica_seed(master, i) = splitmix64(master ^ splitmix64(i + 1))
//! ```
//!
//! The generator is pinned to ChaCha8 rather than `StdRng` so that streams
//! stay stable across `rand` upgrades.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// SplitMix64 mixing step (Steele, Lea & Flood 2014).
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream used for population setup (capacity draws, quenched savings).
pub fn master_rng(seed: u64) -> SimRng {
    SimRng::seed_from_u64(splitmix64(seed))
}

/// Stream owned by replica `index`; independent replicas never share state.
pub fn replica_rng(master_seed: u64, index: u64) -> SimRng {
    SimRng::seed_from_u64(splitmix64(master_seed ^ splitmix64(index.wrapping_add(1))))
}
