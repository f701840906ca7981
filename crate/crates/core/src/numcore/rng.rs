//! Portable seeded randomness.
//!
//! The generator is xoshiro256** (Blackman and Vigna), seeded by expanding a
//! 64-bit seed with SplitMix64. Both are fixed, publicly specified integer
//! algorithms, so a given seed yields the same stream on every platform.
//! Independent substreams for different purposes are derived from a root
//! seed by adding a fixed per-purpose offset before expansion.

use serde::{Deserialize, Serialize};

use crate::error::{GrnnError, Result};

const STREAM_OFFSET: u64 = 0x9E37_79B9_7F4A_7C15;

/// Purposes that get their own substream of a root seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Init = 1,
    Data = 2,
    Dropout = 3,
    Negatives = 4,
    Search = 5,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rng {
    seed: u64,
    s: [u64; 4],
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let mut s = [0u64; 4];
        for v in s.iter_mut() {
            *v = splitmix64(&mut sm);
        }
        Rng { seed, s }
    }

    /// Substream of `root` for `stream`, further split by `index` (trial, run...).
    pub fn derive(root: u64, stream: Stream, index: u64) -> Self {
        let purpose = (stream as u64).wrapping_mul(1 << 32).wrapping_add(index);
        Rng::new(root.wrapping_add(STREAM_OFFSET.wrapping_mul(purpose)))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, a: f64, b: f64) -> f64 {
        a + (b - a) * self.uniform()
    }

    /// Uniform integer in `0..n` (Lemire's multiply-and-reject). `n` must be positive.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = (self.next_u64() as u128) * (n as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    /// Box–Muller, cosine branch only.
    pub fn standard_normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    Uniform { a: f64, b: f64 },
    LogUniform { a: f64, b: f64 },
    StandardNormal,
    Bernoulli { p: f64 },
}

impl Distribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Distribution::Uniform { a, b } if !(a.is_finite() && b.is_finite() && a <= b) => {
                Err(GrnnError::Parameter(format!("uniform interval [{a}, {b}] is invalid")))
            }
            Distribution::LogUniform { a, b } if !(a > 0.0 && b.is_finite() && a <= b) => {
                Err(GrnnError::Parameter(format!("log-uniform interval [{a}, {b}] is invalid")))
            }
            Distribution::Bernoulli { p } if !(0.0..=1.0).contains(&p) => {
                Err(GrnnError::Parameter(format!("bernoulli probability {p} outside [0, 1]")))
            }
            _ => Ok(()),
        }
    }

    pub fn sample(&self, rng: &mut Rng) -> Result<f64> {
        self.validate()?;
        Ok(match *self {
            Distribution::Uniform { a, b } => rng.uniform_in(a, b),
            Distribution::LogUniform { a, b } => rng.uniform_in(a.ln(), b.ln()).exp().clamp(a, b),
            Distribution::StandardNormal => rng.standard_normal(),
            Distribution::Bernoulli { p } => {
                if rng.uniform() < p {
                    1.0
                } else {
                    0.0
                }
            }
        })
    }
}
