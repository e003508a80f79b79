//! Seed derivation and RNG construction.
//!
//! Every stochastic operation in this crate is a pure function of its inputs
//! and an explicit 64-bit seed. Concurrent workers (agents in a round, trials
//! in an experiment, family members in a model sweep) each get a seed derived
//! from the run seed and their coordinates, so results do not depend on
//! scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Builds the deterministic RNG used throughout the crate.
pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes a base seed with a coordinate stream (round, level, agent, ...)
/// into a new seed.
///
/// The mixer is a fixed splitmix64 chain; changing it changes every derived
/// stream in the crate, so treat it as part of the reproducibility contract.
pub fn derive_seed(base: u64, stream: &[u64]) -> u64 {
    let mut acc = splitmix64(base ^ 0x9E37_79B9_7F4A_7C15);
    for &part in stream {
        acc = splitmix64(acc ^ splitmix64(part.wrapping_add(0xA076_1D64_78BD_642F)));
    }
    acc
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivation_is_stable_and_sensitive() {
        let a = derive_seed(7, &[1, 2, 3]);
        let b = derive_seed(7, &[1, 2, 3]);
        assert_eq!(a, b);
        assert_ne!(a, derive_seed(7, &[1, 2, 4]));
        assert_ne!(a, derive_seed(8, &[1, 2, 3]));
        assert_ne!(a, derive_seed(7, &[1, 2]));
    }

    #[test]
    fn empty_stream_differs_from_base() {
        assert_ne!(derive_seed(42, &[]), 42);
    }
}
