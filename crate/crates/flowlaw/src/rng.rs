//! Seeded random streams with a version-stable uniform mapping.
//!
//! ChaCha8 output is pinned by the cipher definition, and the u64 -> f64
//! mapping below is fixed here, so a given seed reproduces the same draws
//! on every platform and with any future `rand_chacha` release.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub struct SeededRng {
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw in [0, 1) with 53-bit resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in [lo, hi).
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Log-uniform draw in [lo, hi); requires 0 < lo < hi.
    pub fn log_uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        (self.uniform_in(lo.ln(), hi.ln())).exp()
    }
}
