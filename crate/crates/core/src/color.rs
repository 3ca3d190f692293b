//! Color perturbation: random permutation of the RGB channels of an image.
//!
//! Output channel `k` takes input channel `perm[k]`, so `[2, 0, 1]` turns the
//! pixel `(10, 20, 30)` into `(30, 10, 20)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::ImageRgb;
use crate::rng::SeededStream;

/// A permutation of the three color channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "[u8; 3]", into = "[u8; 3]")]
pub struct ChannelPermutation([u8; 3]);

impl ChannelPermutation {
    pub const IDENTITY: Self = Self([0, 1, 2]);

    /// All six orders, identity first, in lexicographic order.
    pub const ALL: [Self; 6] = [
        Self([0, 1, 2]),
        Self([0, 2, 1]),
        Self([1, 0, 2]),
        Self([1, 2, 0]),
        Self([2, 0, 1]),
        Self([2, 1, 0]),
    ];

    pub fn new(map: [u8; 3]) -> Result<Self> {
        let mut seen = [false; 3];
        for &m in &map {
            if m > 2 || std::mem::replace(&mut seen[m as usize], true) {
                return Err(Error::InvalidConfig(format!(
                    "{map:?} is not a permutation of [0, 1, 2]"
                )));
            }
        }
        Ok(Self(map))
    }

    pub fn map(&self) -> [u8; 3] {
        self.0
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }

    /// The permutation equivalent to applying `self` and then `next`.
    pub fn then(&self, next: &ChannelPermutation) -> ChannelPermutation {
        Self(next.0.map(|k| self.0[k as usize]))
    }

    pub fn inverse(&self) -> ChannelPermutation {
        let mut inv = [0u8; 3];
        for (k, &src) in self.0.iter().enumerate() {
            inv[src as usize] = k as u8;
        }
        Self(inv)
    }
}

impl TryFrom<[u8; 3]> for ChannelPermutation {
    type Error = Error;

    fn try_from(map: [u8; 3]) -> Result<Self> {
        Self::new(map)
    }
}

impl From<ChannelPermutation> for [u8; 3] {
    fn from(p: ChannelPermutation) -> Self {
        p.0
    }
}

impl std::fmt::Display for ChannelPermutation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{},{},{}]", self.0[0], self.0[1], self.0[2])
    }
}

/// How permutations are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum CpMode {
    /// Each of the six orders with probability 1/6.
    Uniform6,
    /// Identity (the raw image) with probability `p_raw`, otherwise one of
    /// the five non-identity orders uniformly.
    #[serde(rename = "coinflip")]
    CoinFlip { p_raw: f64 },
}

impl Default for CpMode {
    fn default() -> Self {
        CpMode::CoinFlip { p_raw: 0.5 }
    }
}

impl CpMode {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CpMode::CoinFlip { p_raw } if !(0.0..=1.0).contains(&p_raw) => Err(Error::InvalidConfig(
                format!("p_raw must lie in [0, 1], got {p_raw}"),
            )),
            _ => Ok(()),
        }
    }
}

/// Draws a permutation.
///
/// `Uniform6` consumes one `below(6)` draw. `CoinFlip` consumes one
/// Bernoulli draw and, when the raw branch is not taken, one `below(5)` draw.
pub fn sample_permutation(rng: &mut SeededStream, mode: CpMode) -> ChannelPermutation {
    match mode {
        CpMode::Uniform6 => ChannelPermutation::ALL[rng.below(6) as usize],
        CpMode::CoinFlip { p_raw } => {
            if rng.bernoulli(p_raw) {
                ChannelPermutation::IDENTITY
            } else {
                ChannelPermutation::ALL[1 + rng.below(5) as usize]
            }
        }
    }
}

pub fn apply_permutation(img: &ImageRgb, perm: ChannelPermutation) -> ImageRgb {
    let mut data = img.data().to_vec();
    permute_interleaved(&mut data, perm).expect("RGB buffer");
    ImageRgb::new(img.height(), img.width(), data).expect("shape unchanged")
}

/// Permutes an interleaved RGB buffer in place. The buffer length must be a
/// multiple of three.
pub fn permute_interleaved(buf: &mut [u8], perm: ChannelPermutation) -> Result<()> {
    if !buf.len().is_multiple_of(3) {
        return Err(Error::shape(format!(
            "interleaved RGB buffer length {} is not a multiple of 3",
            buf.len()
        )));
    }
    if perm.is_identity() {
        return Ok(());
    }
    let [a, b, c] = perm.0.map(usize::from);
    for px in buf.chunks_exact_mut(3) {
        let src = [px[0], px[1], px[2]];
        px[0] = src[a];
        px[1] = src[b];
        px[2] = src[c];
    }
    Ok(())
}

pub fn invert_permutation(perm: ChannelPermutation) -> ChannelPermutation {
    perm.inverse()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_image(seed: u64, h: usize, w: usize) -> ImageRgb {
        let mut rng = SeededStream::new(seed);
        let data = (0..h * w * 3).map(|_| rng.next_u64() as u8).collect();
        ImageRgb::new(h, w, data).unwrap()
    }

    #[test]
    fn forced_indexing() {
        let img = ImageRgb::new(1, 1, vec![10, 20, 30]).unwrap();
        let out = apply_permutation(&img, ChannelPermutation::new([2, 0, 1]).unwrap());
        assert_eq!(out.data(), &[30, 10, 20]);
    }

    #[test]
    fn identity_is_bit_identical() {
        let img = random_image(1, 9, 11);
        assert_eq!(apply_permutation(&img, ChannelPermutation::IDENTITY), img);
    }

    #[test]
    fn twice_120_equals_once_201() {
        let img = random_image(2, 8, 8);
        let p = ChannelPermutation::new([1, 2, 0]).unwrap();
        let q = ChannelPermutation::new([2, 0, 1]).unwrap();
        assert_eq!(
            apply_permutation(&apply_permutation(&img, p), p),
            apply_permutation(&img, q)
        );
        assert_eq!(p.then(&p), q);
    }

    #[test]
    fn inverse_examples() {
        let p = ChannelPermutation::new([2, 0, 1]).unwrap();
        assert_eq!(invert_permutation(p).map(), [1, 2, 0]);
        assert_eq!(
            invert_permutation(ChannelPermutation::IDENTITY),
            ChannelPermutation::IDENTITY
        );
    }

    #[test]
    fn invalid_maps_rejected() {
        assert!(ChannelPermutation::new([0, 0, 1]).is_err());
        assert!(ChannelPermutation::new([0, 1, 3]).is_err());
        assert!(serde_json::from_str::<ChannelPermutation>("[1,1,2]").is_err());
    }

    #[test]
    fn coin_flip_p_raw_one_is_always_identity() {
        let mut rng = SeededStream::new(4);
        for _ in 0..1000 {
            assert!(sample_permutation(&mut rng, CpMode::CoinFlip { p_raw: 1.0 }).is_identity());
        }
    }

    #[test]
    fn coin_flip_p_raw_zero_never_identity() {
        let mut rng = SeededStream::new(5);
        for _ in 0..1000 {
            assert!(!sample_permutation(&mut rng, CpMode::CoinFlip { p_raw: 0.0 }).is_identity());
        }
    }

    #[test]
    fn mode_validation() {
        assert!(CpMode::CoinFlip { p_raw: 1.5 }.validate().is_err());
        assert!(CpMode::CoinFlip { p_raw: -0.1 }.validate().is_err());
        assert!(CpMode::default().validate().is_ok());
    }

    #[test]
    fn mode_json() {
        let m: CpMode = serde_json::from_str(r#"{"mode":"coinflip","p_raw":0.25}"#).unwrap();
        assert_eq!(m, CpMode::CoinFlip { p_raw: 0.25 });
        let m: CpMode = serde_json::from_str(r#"{"mode":"uniform6"}"#).unwrap();
        assert_eq!(m, CpMode::Uniform6);
    }

    #[test]
    fn ragged_buffer_rejected() {
        assert!(permute_interleaved(&mut [1, 2, 3, 4], ChannelPermutation::ALL[1]).is_err());
    }

    fn chi_square(counts: &[u64], expected: f64) -> f64 {
        counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum()
    }

    #[test]
    fn uniform6_is_uniform() {
        let mut rng = SeededStream::new(17);
        let mut counts = [0u64; 6];
        for _ in 0..60_000 {
            let p = sample_permutation(&mut rng, CpMode::Uniform6);
            counts[ChannelPermutation::ALL.iter().position(|q| *q == p).unwrap()] += 1;
        }
        // 3 sigma per cell, and the 0.999 quantile of chi-square with 5 dof.
        for c in counts {
            assert!((c as f64 - 10_000.0).abs() < 3.0 * 91.3, "{counts:?}");
        }
        assert!(chi_square(&counts, 10_000.0) < 20.52, "{counts:?}");
    }

    #[test]
    fn coin_flip_half() {
        let mut rng = SeededStream::new(18);
        let mut counts = [0u64; 6];
        for _ in 0..60_000 {
            let p = sample_permutation(&mut rng, CpMode::default());
            counts[ChannelPermutation::ALL.iter().position(|q| *q == p).unwrap()] += 1;
        }
        assert!((counts[0] as f64 - 30_000.0).abs() < 3.0 * 122.5, "{counts:?}");
        assert!(chi_square(&counts[1..], 6_000.0) < 18.47, "{counts:?}");
    }

    proptest::proptest! {
        #[test]
        fn permutation_keeps_pixel_multisets(
            data in proptest::collection::vec(proptest::num::u8::ANY, 3..300),
            k in 0usize..6,
        ) {
            let n = data.len() / 3 * 3;
            let img = ImageRgb::new(1, n / 3, data[..n].to_vec()).unwrap();
            let p = ChannelPermutation::ALL[k];
            let out = apply_permutation(&img, p);
            for (a, b) in img.pixels().zip(out.pixels()) {
                let (mut a, mut b) = (a, b);
                a.sort_unstable();
                b.sort_unstable();
                proptest::prop_assert_eq!(a, b);
            }
            proptest::prop_assert_eq!(apply_permutation(&out, invert_permutation(p)), img);
        }
    }
}
