//! Seeded, splittable random source.
//!
//! ChaCha8 keyed by the 64-bit seed, one independent stream per consumer.
//! Uniforms take the top 53 bits of each output word; Gaussians come from
//! the Box–Muller transform, so a seed fixes every draw on every platform.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct SplitRng {
    inner: ChaCha8Rng,
    spare: Option<f64>,
}

impl SplitRng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    /// Independent stream `stream` of the generator keyed by `seed`.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner, spare: None }
    }

    /// Child generator on a derived stream; the parent is unaffected.
    pub fn split(&self, stream: u64) -> Self {
        let mut inner = self.inner.clone();
        inner.set_stream(inner.get_stream().wrapping_add(stream.wrapping_add(1)));
        inner.set_word_pos(0);
        Self { inner, spare: None }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in (0, 1].
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box–Muller.
    pub fn gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Normal with mean 0 and the given variance.
    pub fn normal(&mut self, variance: f64) -> f64 {
        self.gaussian() * variance.sqrt()
    }
}
