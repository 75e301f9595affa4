//! Seeded random source shared by the generators and the shot sampler.
//!
//! The stream is ChaCha8 seeded through `SeedableRng::seed_from_u64`
//! (PCG32 seed expansion, as documented by `rand_core`). Derived values use
//! fixed conversions so other implementations can reproduce them:
//!
//! * `unit_f64`: top 53 bits of `next_u64`, times 2^-53, giving `[0, 1)`.
//! * `below(n)`: `x % n` for the first draw `x < 2^64 - (2^64 mod n)`;
//!   larger draws are rejected so the result is unbiased.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

#[derive(Debug, Clone)]
pub struct SimRng {
    inner: ChaCha8Rng,
}

impl SimRng {
    pub fn seed_from_u64(seed: u64) -> Self {
        SimRng { inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn unit_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "empty range");
        // largest multiple of n that fits; draws at or above it are rejected
        let zone = u64::MAX - (u64::MAX % n + 1) % n;
        loop {
            let x = self.next_u64();
            if x <= zone {
                return x % n;
            }
        }
    }
}
