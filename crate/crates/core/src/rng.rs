//! Deterministic, splittable random streams.
//!
//! A stream is a SplitMix64 generator: the 64-bit state advances by the golden
//! gamma `0x9E3779B97F4A7C15` and each output is the state passed through the
//! SplitMix64 finalizer ([`finalize`]). Child streams are derived as
//!
//! ```text
//! child.state = finalize(parent.state ^ (label + index))
//! ```
//!
//! where `label` is one of the purpose constants in [`labels`]. Nothing in the
//! crate reads OS entropy, so every dataset, weight init and shuffle order is
//! a pure function of the global seed.

use crate::error::{Error, Result};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output finalizer (Stafford variant 13).
#[inline]
pub fn finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Purpose constants used to derive child streams.
pub mod labels {
    pub const SAMPLE: u64 = 0x5341_4D50_4C45_0000; // "SAMPLE"
    pub const MIX: u64 = 0x4D49_5800_0000_0000;
    pub const PAN: u64 = 0x5041_4E00_0000_0000;
    pub const AUGMENT: u64 = 0x4155_474D_0000_0000;
    pub const DEGRADE_MS: u64 = 0x4445_474D_5300_0000;
    pub const DEGRADE_PAN: u64 = 0x4445_4750_414E_0000;
    pub const NOISE_MS: u64 = 0x4E4F_4953_4D53_0000;
    pub const NOISE_PAN: u64 = 0x4E4F_4953_5041_4E00;
    pub const INIT: u64 = 0x494E_4954_0000_0000;
    pub const SHUFFLE: u64 = 0x5348_5546_0000_0000;
    pub const EVAL_SET: u64 = 0x4556_414C_0000_0000;
    pub const BENCH: u64 = 0x4245_4E43_4800_0000;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RngStream {
    state: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn state(&self) -> u64 {
        self.state
    }

    /// Derives an independent child stream; `self` is not advanced.
    pub fn derive(&self, label: u64, index: u64) -> RngStream {
        RngStream {
            state: finalize(self.state ^ label.wrapping_add(index)),
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        finalize(self.state)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> Result<f64> {
        if lo > hi {
            return Err(Error::InvalidRange { lo, hi });
        }
        if lo == hi {
            // Still consume a draw so stream positions do not depend on ranges.
            self.next_u64();
            return Ok(lo);
        }
        Ok(lo + (hi - lo) * self.next_f64())
    }

    /// Box–Muller (cosine branch only; one normal per two uniforms).
    pub fn normal(&mut self, mean: f64, sd: f64) -> f64 {
        let u1 = self.next_f64();
        let u2 = self.next_f64();
        let radius = (-2.0 * (1.0 - u1).ln()).sqrt();
        mean + sd * radius * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniform index in `0..n`.
    pub fn choice(&mut self, n: usize) -> usize {
        assert!(n > 0, "choice over an empty set");
        ((self.next_f64() * n as f64) as usize).min(n - 1)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Fisher–Yates shuffle of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.choice(i + 1);
            p.swap(i, j);
        }
        p
    }
}
