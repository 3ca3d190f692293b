//! A small fixed-weight convolutional feature extractor.
//!
//! Each block is a 3x3 convolution (zero padding 1, no bias) with a per-block
//! stride, followed by a rectifier. Weights are drawn once from the
//! [`Domain::Weights`] substream of `weight_seed`, uniform in
//! `[-1, 1) / sqrt(fan_in)`, in block, output channel, input channel, row,
//! column order. Images enter as `(3, h, w)` with values scaled to `[0, 1]`;
//! sides not divisible by the cumulative stride are reflect-padded at the
//! bottom and right first.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{FeatureMap, ImageRgb};
use crate::rng::{Domain, SeededStream};

const KERNEL: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractorConfig {
    /// Output channels of each block.
    pub channels: Vec<usize>,
    /// Stride of each block.
    pub strides: Vec<usize>,
    pub weight_seed: u64,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        Self {
            channels: vec![8, 16],
            strides: vec![2, 2],
            weight_seed: 0,
        }
    }
}

impl ExtractorConfig {
    pub fn blocks(&self) -> usize {
        self.channels.len()
    }

    /// Product of the strides of blocks `0..=upto_block`.
    pub fn cumulative_stride(&self, upto_block: usize) -> usize {
        self.strides[..=upto_block].iter().product()
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels.is_empty() {
            return Err(Error::InvalidConfig("extractor needs at least one block".into()));
        }
        if self.channels.len() != self.strides.len() {
            return Err(Error::InvalidConfig(format!(
                "{} channel counts but {} strides",
                self.channels.len(),
                self.strides.len()
            )));
        }
        if self.channels.iter().chain(&self.strides).any(|&v| v == 0) {
            return Err(Error::InvalidConfig(
                "channel counts and strides must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

struct ConvBlock {
    in_channels: usize,
    out_channels: usize,
    stride: usize,
    /// `[out][in][ky][kx]`
    weights: Vec<f32>,
}

impl ConvBlock {
    fn forward(&self, x: &FeatureMap) -> FeatureMap {
        let (cin, h, w) = x.dims();
        debug_assert_eq!(cin, self.in_channels);
        let s = self.stride;
        let oh = (h + 2 - KERNEL) / s + 1;
        let ow = (w + 2 - KERNEL) / s + 1;
        let mut out = vec![0f32; self.out_channels * oh * ow];
        let input = x.data();
        for o in 0..self.out_channels {
            let wo = &self.weights[o * cin * KERNEL * KERNEL..(o + 1) * cin * KERNEL * KERNEL];
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = 0f32;
                    for i in 0..cin {
                        let plane = &input[i * h * w..(i + 1) * h * w];
                        for ky in 0..KERNEL {
                            let iy = (oy * s + ky) as isize - 1;
                            if iy < 0 || iy >= h as isize {
                                continue;
                            }
                            for kx in 0..KERNEL {
                                let ix = (ox * s + kx) as isize - 1;
                                if ix < 0 || ix >= w as isize {
                                    continue;
                                }
                                acc += wo[(i * KERNEL + ky) * KERNEL + kx]
                                    * plane[iy as usize * w + ix as usize];
                            }
                        }
                    }
                    out[(o * oh + oy) * ow + ox] = acc.max(0.0);
                }
            }
        }
        FeatureMap::new(self.out_channels, oh, ow, out).expect("finite convolution output")
    }
}

/// Seeded fixed-weight extractor.
pub struct FeatureExtractor {
    config: ExtractorConfig,
    blocks: Vec<ConvBlock>,
}

impl FeatureExtractor {
    pub fn new(config: &ExtractorConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = SeededStream::substream(config.weight_seed, Domain::Weights, 0);
        let mut blocks = Vec::with_capacity(config.blocks());
        let mut in_channels = 3;
        for (&out_channels, &stride) in config.channels.iter().zip(&config.strides) {
            let fan_in = in_channels * KERNEL * KERNEL;
            let scale = 1.0 / (fan_in as f64).sqrt();
            let weights = (0..out_channels * fan_in)
                .map(|_| ((rng.next_f64() * 2.0 - 1.0) * scale) as f32)
                .collect();
            blocks.push(ConvBlock {
                in_channels,
                out_channels,
                stride,
                weights,
            });
            in_channels = out_channels;
        }
        Ok(Self {
            config: config.clone(),
            blocks,
        })
    }

    pub fn config(&self) -> &ExtractorConfig {
        &self.config
    }

    /// Image as a `(3, h', w')` map in `[0, 1]`, reflect-padded so both sides
    /// are multiples of `multiple`.
    pub fn image_to_map(img: &ImageRgb, multiple: usize) -> FeatureMap {
        let pad = |n: usize| n.div_ceil(multiple) * multiple;
        let (h, w) = (img.height(), img.width());
        let (ph, pw) = (pad(h), pad(w));
        FeatureMap::from_fn(3, ph, pw, |c, y, x| {
            let p = img.pixel(reflect(y, h), reflect(x, w));
            f32::from(p[c]) / 255.0
        })
        .expect("finite pixels")
    }

    /// Features after block `upto_block` (0 = the first block).
    pub fn forward(&self, img: &ImageRgb, upto_block: usize) -> Result<FeatureMap> {
        if upto_block >= self.blocks.len() {
            return Err(Error::InvalidConfig(format!(
                "block {upto_block} requested from a {}-block extractor",
                self.blocks.len()
            )));
        }
        let total: usize = self.config.strides.iter().product();
        let mut x = Self::image_to_map(img, total);
        for block in &self.blocks[..=upto_block] {
            x = block.forward(&x);
        }
        Ok(x)
    }

    /// Continues from the output of block `from_block - 1` through block
    /// `upto_block`.
    pub fn forward_from(&self, x: &FeatureMap, from_block: usize, upto_block: usize) -> Result<FeatureMap> {
        if upto_block >= self.blocks.len() || from_block > upto_block {
            return Err(Error::InvalidConfig(format!(
                "blocks {from_block}..={upto_block} out of range"
            )));
        }
        if x.channels() != self.blocks[from_block].in_channels {
            return Err(Error::shape(format!(
                "block {from_block} expects {} channels, got {}",
                self.blocks[from_block].in_channels,
                x.channels()
            )));
        }
        let mut x = x.clone();
        for block in &self.blocks[from_block..=upto_block] {
            x = block.forward(&x);
        }
        Ok(x)
    }
}

fn reflect(i: usize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let m = i % period;
    if m < n {
        m
    } else {
        period - m
    }
}

pub fn extract_features(img: &ImageRgb, cfg: &ExtractorConfig, upto_block: usize) -> Result<FeatureMap> {
    FeatureExtractor::new(cfg)?.forward(img, upto_block)
}
