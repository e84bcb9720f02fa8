//! Seeded Gaussian stream: splitmix64 feeding Box–Muller.
//!
//! Every draw is fully specified so instances can be regenerated bit-for-bit
//! elsewhere:
//! - uniform `u = (next_u64 >> 11) · 2⁻⁵³`, in `[0, 1)`;
//! - a pair of normals from `u₁ = 1 − u`, `u₂ = u'` (two consecutive
//!   uniforms) as `r·cos(2πu₂)` then `r·sin(2πu₂)` with `r = √(−2 ln u₁)`.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

#[derive(Debug, Clone)]
pub struct GaussianStream {
    rng: SplitMix64,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: SplitMix64::seed_from_u64(seed),
            spare: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn normals(&mut self, len: usize) -> Vec<f64> {
        (0..len).map(|_| self.normal()).collect()
    }

    /// A uniformly distributed unit vector.
    pub fn unit_vector(&mut self, len: usize) -> Vec<f64> {
        loop {
            let v = self.normals(len);
            let norm = crate::linalg::norm2(&v);
            if norm > 0.0 {
                return v.into_iter().map(|x| x / norm).collect();
            }
        }
    }
}

/// Independent sub-stream for a named purpose, derived from a run seed.
pub(crate) fn derive_seed(seed: u64, stream: u64) -> u64 {
    SplitMix64::seed_from_u64(seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)).next_u64()
}
