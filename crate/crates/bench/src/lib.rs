//! Fixtures shared by the benchmarks.

use blindcast_core::{random_instance, Instance, WakePattern};

/// `k` random ids below `2^20`, all waking at step 0.
pub fn simultaneous(k: u64, rng_seed: u64) -> Instance {
    random_instance(k, 1 << 20, WakePattern::Simultaneous, rng_seed)
        .expect("k fits in the id range")
}
