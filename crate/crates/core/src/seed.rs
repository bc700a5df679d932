//! Seed derivation.
//!
//! Every random stream in the simulator is a ChaCha8 generator keyed by a
//! 64-bit seed obtained by folding labelled integers into a parent seed with
//! the SplitMix64 finalizer. The rules are stable across releases:
//!
//! * replication `r` of scenario `id`:
//!   `master_seed XOR mix(fnv1a(id) + r)`
//! * any child stream: `mix(parent XOR mix(tag) + index)`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// SplitMix64 output finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a, used only to turn scenario names into integers.
pub fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn replication_seed(master_seed: u64, scenario_id: &str, replication: u64) -> u64 {
    master_seed ^ mix(fnv1a(scenario_id).wrapping_add(replication))
}

/// Stream tags. Distinct tags keep sibling streams independent.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
pub enum Stream {
    Population = 1,
    Mobility = 2,
    KMeans = 3,
    Crp = 4,
    Elbow = 5,
}

pub fn child_seed(parent: u64, tag: Stream, index: u64) -> u64 {
    mix((parent ^ mix(tag as u64)).wrapping_add(index))
}

pub fn rng_from(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn child_rng(parent: u64, tag: Stream, index: u64) -> SimRng {
    rng_from(child_seed(parent, tag, index))
}
