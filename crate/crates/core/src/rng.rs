//! Seed handling.
//!
//! All randomness uses ChaCha8 seeded through [`rand::SeedableRng::seed_from_u64`].
//! Independent streams (per replicate, per sample size) are derived from a
//! parent seed by [`Seed::derive`], which feeds `seed XOR (index * φ64)` through
//! the SplitMix64 finalizer.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type Rng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// A 64-bit seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    /// Child seed for stream `index`.
    pub fn derive(self, index: u64) -> Seed {
        Seed(splitmix64(self.0 ^ index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
    }

    pub fn rng(self) -> Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

impl From<u64> for Seed {
    fn from(v: u64) -> Self {
        Seed(v)
    }
}

/// SplitMix64 output function.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
