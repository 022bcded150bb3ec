//! Seeded random numbers for instance generation.
//!
//! ChaCha20 keyed by the 64-bit seed; uniforms take the top 53 bits of each
//! output word; normals come from the Box–Muller transform, the sine branch
//! being cached for the next call.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

pub struct SeededRng {
    inner: ChaCha20Rng,
    spare: Option<f64>,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self { inner: ChaCha20Rng::seed_from_u64(seed), spare: None }
    }

    /// A generator on an independent ChaCha stream for the same seed.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner, spare: None }
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // 1 − U lies in (0, 1], keeping the logarithm finite.
        let radius = (-2.0 * (1.0 - self.uniform()).ln()).sqrt();
        let angle = TWO_PI * self.uniform();
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }

    /// Uniform index in `0..bound` as `floor(U · bound)`.
    pub fn index(&mut self, bound: usize) -> usize {
        ((self.uniform() * bound as f64) as usize).min(bound - 1)
    }

    /// First `count` entries of a Fisher–Yates shuffle of `0..n`.
    pub fn shuffle_prefix(&mut self, n: usize, count: usize) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..n).collect();
        for i in 0..count.min(n) {
            let j = i + self.index(n - i);
            perm.swap(i, j);
        }
        perm.truncate(count.min(n));
        perm
    }
}
