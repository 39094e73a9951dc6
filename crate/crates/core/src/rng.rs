//! Reproducible randomness.
//!
//! Everything random in this crate is derived from SplitMix64, written out
//! here so the streams are bit-identical on every platform:
//!
//! ```text
//! mix64(z):  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//!            z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//!            return z ^ (z >> 31)
//! next():    state += 0x9E3779B97F4A7C15; return mix64(state)
//! ```
//!
//! A [`Seed`] names one stream: its generator starts from
//! `mix64(master ^ 0x9E3779B97F4A7C15 * stream)` (wrapping multiply).
//! Simulations that need one coin per cell use [`counter_u64`], a stateless
//! hash of `(key, a, b)`, so results never depend on evaluation order.

/// SplitMix64 increment (2^64 / golden ratio, odd).
pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

const COUNTER_SALT: u64 = 0xD1B5_4A32_D192_ED03;

#[inline]
pub const fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform double in `[0, 1)` from the top 53 bits of `x`.
#[inline]
pub fn unit_f64(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Stateless hash of a key and a two-component counter.
#[inline]
pub fn counter_u64(key: u64, a: u64, b: u64) -> u64 {
    mix64(mix64(key ^ a.wrapping_mul(COUNTER_SALT)) ^ b.wrapping_mul(GOLDEN_GAMMA))
}

/// Uniform coin in `[0, 1)` keyed by `(key, a, b)`.
#[inline]
pub fn counter_unit(key: u64, a: u64, b: u64) -> f64 {
    unit_f64(counter_u64(key, a, b))
}

/// A (master, stream) pair. Trial `i` of an experiment uses stream `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Seed {
    pub master: u64,
    pub stream: u64,
}

impl Seed {
    pub const fn new(master: u64, stream: u64) -> Self {
        Self { master, stream }
    }

    /// Initial generator state for this stream.
    #[inline]
    pub const fn state(&self) -> u64 {
        mix64(self.master ^ GOLDEN_GAMMA.wrapping_mul(self.stream))
    }

    pub fn rng(&self) -> SplitMix64 {
        SplitMix64::new(self.state())
    }
}

#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub const fn new(state: u64) -> Self {
        Self { state }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        unit_f64(self.next_u64())
    }

    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }
}
