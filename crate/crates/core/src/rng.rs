//! Seedable, portable random number generation.
//!
//! Every stochastic step in the crate (weight initialization, dropout masks,
//! epoch shuffling, synthetic fixtures) draws from [`SeededRng`], a thin
//! wrapper around the ChaCha8 stream cipher generator from `rand_chacha`.
//! ChaCha8 output is specified bit-for-bit and does not depend on the host
//! platform, so a given seed reproduces the same stream everywhere.
//!
//! Conversions are done here rather than through `rand`'s distribution
//! machinery so that the mapping from raw words to values is pinned:
//!
//! * `next_f64` takes the top 53 bits of one `u64` word: `(w >> 11) * 2^-53`,
//!   yielding a value in `[0, 1)`.
//! * `below(n)` uses rejection sampling on whole `u64` words (no modulo bias).
//! * `shuffle` is a Fisher-Yates pass from the last index down to 1.
//!
//! Independent sub-streams (per epoch, per batch, per sample) are derived with
//! [`derive_seed`], a SplitMix64 fold over the parent seed and a list of
//! stream tags, so that parallel workers never share generator state.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SPLITMIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(SPLITMIX_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `tags` into `seed`, producing a well-mixed child seed.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(seed), |acc, &tag| splitmix64(acc ^ splitmix64(tag)))
}

#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Generator for the sub-stream identified by `tags`.
    pub fn derived(seed: u64, tags: &[u64]) -> Self {
        Self::new(derive_seed(seed, tags))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[low, high)`.
    pub fn uniform(&mut self, low: f64, high: f64) -> f64 {
        low + (high - low) * self.next_f64()
    }

    /// Standard normal deviate (Box-Muller, one value per call).
    pub fn normal(&mut self) -> f64 {
        // 1 - u keeps the log argument in (0, 1].
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniform integer in `[0, n)`. `n` must be non-zero.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let w = self.next_u64();
            if w < zone {
                return w % n;
            }
        }
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
