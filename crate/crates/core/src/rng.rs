//! Seed derivation.
//!
//! Every stochastic step in the crate draws from its own generator whose seed
//! is a pure function of a master seed and an integer key. Parallel trials,
//! trees and sweep scales therefore never share state, and results do not
//! depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the substream `key` under `master`.
pub fn substream_seed(master: u64, key: u64) -> u64 {
    splitmix64(splitmix64(master) ^ splitmix64(key.wrapping_mul(GOLDEN_GAMMA).wrapping_add(1)))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn substream(master: u64, key: u64) -> Rng {
    rng_from_seed(substream_seed(master, key))
}
