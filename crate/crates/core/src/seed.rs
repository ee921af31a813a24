//! Deterministic seed derivation.
//!
//! Every random draw in the crate is made from a ChaCha8 generator seeded
//! with a *child seed* `mix(base_seed, stream, index)`. The stream id names
//! the kind of draw (input noise, weight noise, shuffling, ...) and the index
//! enumerates draws within the stream, so the i-th perturbed model is the
//! same no matter which thread computes it or in which order.
//!
//! `mix` chains the SplitMix64 finalizer:
//!
//! ```text
//! h0 = splitmix(base)
//! h1 = splitmix(h0 ^ (stream * K_STREAM))
//! child = splitmix(h1 ^ (index * K_INDEX))
//! ```
//!
//! `splitmix` is a bijection on `u64` and the multipliers are odd, so for a
//! fixed `(base, stream)` distinct indices always map to distinct children.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const K_STREAM: u64 = 0xD6E8_FEB8_6659_FD93;
const K_INDEX: u64 = 0xA076_1D64_78BD_642F;

/// Stream ids. Values are part of the reproducibility contract.
pub mod stream {
    pub const WEIGHT_NOISE: u64 = 1;
    pub const INPUT_NOISE: u64 = 2;
    pub const SHUFFLE: u64 = 3;
    pub const INIT: u64 = 4;
    pub const GRADSHAP: u64 = 5;
    pub const SENSITIVITY: u64 = 6;
    pub const FAITHFULNESS: u64 = 7;
    pub const CALIBRATION: u64 = 8;
    pub const CALIBRATION_INPUT: u64 = 9;
    pub const DATA: u64 = 10;
    pub const SPLIT: u64 = 11;
    pub const JITTER: u64 = 12;
    pub const RANDOMIZE: u64 = 13;
    pub const INPUT_NOISE_PER_MODEL: u64 = 14;
    pub const AM_RESAMPLE: u64 = 15;
    pub const SAMPLE_SELECT: u64 = 16;
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for draw `index` of `stream` under `base`.
#[inline]
pub fn mix(base: u64, stream: u64, index: u64) -> u64 {
    let h = splitmix64(base);
    let h = splitmix64(h ^ stream.wrapping_mul(K_STREAM));
    splitmix64(h ^ index.wrapping_mul(K_INDEX))
}

/// Generator for an already-derived child seed.
pub fn rng(child_seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(child_seed)
}

/// A base seed plus the derivation scheme above.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub base_seed: u64,
}

impl SeedSpec {
    pub const fn new(base_seed: u64) -> Self {
        Self { base_seed }
    }

    pub fn child(&self, stream: u64, index: u64) -> u64 {
        mix(self.base_seed, stream, index)
    }

    pub fn rng(&self, stream: u64, index: u64) -> ChaCha8Rng {
        rng(self.child(stream, index))
    }
}

impl From<u64> for SeedSpec {
    fn from(base_seed: u64) -> Self {
        Self { base_seed }
    }
}
