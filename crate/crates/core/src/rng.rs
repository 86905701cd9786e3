//! Seedable randomness.
//!
//! Every random choice in the crate goes through [`UniformSource`], so the
//! same code paths can be driven either by the production generator or by a
//! scripted source that enumerates branch trees exactly (see `verify`).

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A source of uniform integers in `0..bound`.
pub trait UniformSource {
    /// Returns a uniform value in `0..bound`. `bound` must be positive.
    fn below(&mut self, bound: usize) -> usize;

    /// Uniform `f64` in `[0, 1)`.
    fn unit(&mut self) -> f64 {
        // 53 random bits
        let hi = self.below(1 << 26) as u64;
        let lo = self.below(1 << 27) as u64;
        ((hi << 27) | lo) as f64 / (1u64 << 53) as f64
    }
}

/// The crate-wide generator: ChaCha8 seeded from a 64-bit value.
///
/// Sub-streams are derived by hashing the master seed together with a stream
/// key, so independent parts of a computation (parallel sub-rounds, batch
/// seeds) never share state.
#[derive(Clone, Debug)]
pub struct Rng {
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Generator for the stream identified by `key` under `seed`.
    pub fn derive(seed: u64, key: &[u64]) -> Self {
        Rng::new(mix_seed(seed, key))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.gen()
    }

    /// Shuffles `items` in place (Fisher-Yates).
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

impl UniformSource for Rng {
    #[inline]
    fn below(&mut self, bound: usize) -> usize {
        debug_assert!(bound > 0);
        self.inner.gen_range(0..bound)
    }

    fn unit(&mut self) -> f64 {
        self.inner.gen()
    }
}

/// SplitMix64 finalizer.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a master seed and a stream key into a sub-seed.
pub fn mix_seed(seed: u64, key: &[u64]) -> u64 {
    let mut h = splitmix64(seed);
    for &k in key {
        h = splitmix64(h ^ splitmix64(k.wrapping_add(0x632B_E59B_D9B4_E019)));
    }
    h
}
