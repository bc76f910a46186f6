//! Fully specified deterministic random generator.
//!
//! Seeded benchmarks must reproduce bit-for-bit across implementations, so the
//! generator is pinned down completely rather than delegated to a library:
//!
//! * the integer stream is splitmix64: on each draw the 64-bit state advances
//!   by `0x9E3779B97F4A7C15`, and the output is the advanced state mixed by
//!   `z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27;
//!   z *= 0x94D049BB133111EB; z ^= z >> 31;`
//! * a uniform draw is the top 53 bits scaled to `[0, 1)`:
//!   `(z >> 11) * 2^-53`;
//! * a standard normal draw is the Box-Muller transform of exactly two
//!   consecutive uniforms `u1, u2` (in that order), evaluated in double
//!   precision as `sqrt(-2 ln(1 - u1)) * cos(2 pi u2)`. The paired sine
//!   variate is discarded, so every normal costs two uniforms.

use crate::scalar::Scalar;

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeterministicRng {
    state: u64,
}

impl DeterministicRng {
    pub fn new(seed: u64) -> Self {
        DeterministicRng { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw; consumes exactly two uniforms.
    pub fn standard_normal(&mut self) -> f64 {
        let u1 = self.next_f64();
        let u2 = self.next_f64();
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        r * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// Standard normal converted into the working scalar type.
    pub fn normal_scalar<S: Scalar>(&mut self) -> S {
        S::of(self.standard_normal())
    }

    pub fn normal_vec<S: Scalar>(&mut self, n: usize) -> Vec<S> {
        (0..n).map(|_| self.normal_scalar()).collect()
    }
}
