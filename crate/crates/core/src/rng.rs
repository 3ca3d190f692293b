//! Seeded random streams.
//!
//! Every stream is a ChaCha8 generator. The 256-bit key is expanded from the
//! 64-bit run seed with `SeedableRng::seed_from_u64` (the PCG32 expansion of
//! `rand_core`), and the 64-bit ChaCha stream id selects an independent
//! substream:
//!
//! ```text
//! stream_id = (domain << 56) | index        index < 2^56
//! ```
//!
//! so color perturbation of image 7 and the DSM draws for image 7 never share
//! a sequence, and adding images to a batch never shifts earlier draws. Both
//! the key expansion and the ChaCha8 block function are value-stable across
//! platforms.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Purpose tag selecting a family of substreams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Domain {
    /// Free-standing streams (tests, examples, single calls).
    General = 0,
    /// Color perturbation, one substream per image index.
    ColorPerturbation = 1,
    /// Dual-style-memory draws, one substream per image index.
    StyleMemory = 2,
    /// Extractor weight initialization.
    Weights = 3,
    /// Synthetic corpus generation.
    Synthetic = 4,
    /// MixStyle pairing and blend draws.
    Mixing = 5,
}

const INDEX_MASK: u64 = (1 << 56) - 1;

/// A reproducible random stream.
#[derive(Debug, Clone)]
pub struct SeededStream {
    inner: ChaCha8Rng,
}

impl SeededStream {
    /// The root stream of `seed` (domain [`Domain::General`], index 0).
    pub fn new(seed: u64) -> Self {
        Self::substream(seed, Domain::General, 0)
    }

    /// The substream for `(domain, index)` under `seed`.
    pub fn substream(seed: u64, domain: Domain, index: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(((domain as u64) << 56) | (index & INDEX_MASK));
        Self { inner }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 bits of resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)`. Rejection sampling on whole `u64` words,
    /// so the result depends only on the raw word sequence.
    ///
    /// Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let x = self.next_u64();
            if x < zone {
                return x % n;
            }
        }
    }

    /// `true` with probability `p` (one draw consumed regardless of `p`).
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }
}

impl RngCore for SeededStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
