//! Counter-based random numbers.
//!
//! Every draw is a pure function of `(seed, stream, sample index, draw
//! counter)`. A sample can be regenerated in isolation, and the order in
//! which worker threads visit samples never changes a result.

use serde::{Deserialize, Serialize};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// The SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a, used to turn operation labels into stream ids.
pub fn label_hash(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Identifies one independent family of random streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamKey {
    pub seed: u64,
    pub stream: u64,
}

impl StreamKey {
    pub fn new(seed: u64) -> Self {
        StreamKey { seed, stream: 0 }
    }

    /// Derives a child key; distinct tags give statistically independent streams.
    pub fn fork(self, tag: u64) -> Self {
        StreamKey {
            seed: self.seed,
            stream: mix64(self.stream ^ mix64(tag.wrapping_add(GOLDEN))),
        }
    }

    pub fn fork_label(self, label: &str) -> Self {
        self.fork(label_hash(label))
    }

    /// The generator for sample `index` of this stream.
    pub fn sample(self, index: u64) -> SampleRng {
        let key = mix64(mix64(mix64(self.seed) ^ self.stream) ^ index.wrapping_mul(GOLDEN));
        SampleRng { key, counter: 0 }
    }
}

/// Draws for a single sample. Cheap to construct; never shared.
#[derive(Clone, Debug)]
pub struct SampleRng {
    key: u64,
    counter: u64,
}

impl SampleRng {
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `(0, 1]`; safe to take logarithms of.
    #[inline]
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Gamma(shape, 1) for a positive integer shape, as a sum of exponentials.
    pub fn gamma_int(&mut self, shape: usize) -> f64 {
        let mut acc = 0.0;
        for _ in 0..shape {
            acc -= self.next_open01().ln();
        }
        acc
    }
}
