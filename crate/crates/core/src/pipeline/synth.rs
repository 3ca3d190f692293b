//! Synthetic street-like scenes: a vertical gradient background in one of a
//! few weather palettes with flat-colored rectangular objects on top.

use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{save_image, write_annotations, AnnotationSet, BoundingBox, ImageRgb};
use crate::rng::{Domain, SeededStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weather {
    Clear,
    Overcast,
    Foggy,
    Dusk,
    Night,
}

impl Weather {
    pub const ALL: [Weather; 5] = [
        Weather::Clear,
        Weather::Overcast,
        Weather::Foggy,
        Weather::Dusk,
        Weather::Night,
    ];

    /// Sky (top) and road (bottom) colors.
    fn gradient(self) -> ([f64; 3], [f64; 3]) {
        match self {
            Weather::Clear => ([110.0, 170.0, 240.0], [90.0, 90.0, 95.0]),
            Weather::Overcast => ([170.0, 175.0, 180.0], [80.0, 82.0, 85.0]),
            Weather::Foggy => ([215.0, 215.0, 210.0], [170.0, 170.0, 165.0]),
            Weather::Dusk => ([240.0, 140.0, 80.0], [60.0, 45.0, 50.0]),
            Weather::Night => ([15.0, 20.0, 45.0], [25.0, 25.0, 30.0]),
        }
    }

    /// Multiplier applied to object colors.
    fn light(self) -> f64 {
        match self {
            Weather::Clear => 1.0,
            Weather::Overcast => 0.8,
            Weather::Foggy => 0.9,
            Weather::Dusk => 0.7,
            Weather::Night => 0.35,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub count: usize,
    pub height: usize,
    pub width: usize,
    pub objects_per_image: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            count: 32,
            height: 64,
            width: 64,
            objects_per_image: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthScene {
    pub weather: Weather,
    pub image: ImageRgb,
    pub annotations: AnnotationSet,
}

/// Generates `cfg.count` scenes. Image ids run from 1; scene `i` is drawn
/// from its own substream, so scenes do not depend on `count`.
pub fn generate_corpus(cfg: &SynthConfig) -> Result<Vec<SynthScene>> {
    if cfg.height < 8 || cfg.width < 8 {
        return Err(Error::InvalidConfig(
            "synthetic images must be at least 8x8".into(),
        ));
    }
    (0..cfg.count).map(|i| generate_scene(cfg, i)).collect()
}

fn generate_scene(cfg: &SynthConfig, index: usize) -> Result<SynthScene> {
    let mut rng = SeededStream::substream(cfg.seed, Domain::Synthetic, index as u64);
    let weather = Weather::ALL[rng.below(Weather::ALL.len() as u64) as usize];
    let (top, bottom) = weather.gradient();
    let (h, w) = (cfg.height, cfg.width);
    let mut data = Vec::with_capacity(h * w * 3);
    for y in 0..h {
        let t = y as f64 / (h - 1) as f64;
        for x in 0..w {
            let ripple = ((x as f64 * 0.4).sin() * 4.0).round();
            for c in 0..3 {
                let v = top[c] * (1.0 - t) + bottom[c] * t + ripple;
                data.push(v.clamp(0.0, 255.0) as u8);
            }
        }
    }

    let mut boxes: Vec<BoundingBox> = Vec::new();
    let side = |rng: &mut SeededStream, n: usize| -> usize {
        let lo = (n / 8).max(2);
        let hi = (n * 3 / 8).max(lo + 1);
        lo + rng.below((hi - lo) as u64) as usize
    };
    for _ in 0..cfg.objects_per_image {
        // disjoint placement where possible, otherwise accept the last try
        let mut placed = None;
        for _ in 0..20 {
            let (bh, bw) = (side(&mut rng, h), side(&mut rng, w));
            let y = rng.below((h - bh + 1) as u64) as usize;
            let x = rng.below((w - bw + 1) as u64) as usize;
            let b = BoundingBox::new(x as f64, y as f64, bw as f64, bh as f64);
            let clear = boxes
                .iter()
                .all(|o| b.x + b.w <= o.x || o.x + o.w <= b.x || b.y + b.h <= o.y || o.y + o.h <= b.y);
            placed = Some(b);
            if clear {
                break;
            }
        }
        let b = placed.expect("at least one placement attempt");
        let light = weather.light();
        let color: Vec<u8> = (0..3)
            .map(|_| (rng.next_f64() * 255.0 * light).clamp(0.0, 255.0) as u8)
            .collect();
        for y in b.y as usize..(b.y + b.h) as usize {
            for x in b.x as usize..(b.x + b.w) as usize {
                let i = (y * w + x) * 3;
                data[i..i + 3].copy_from_slice(&color);
            }
        }
        boxes.push(b);
    }

    let image_id = index as u64 + 1;
    let annotations = AnnotationSet::new(image_id, format!("synth_{image_id:04}.png"), h as u32, w as u32)
        .with_boxes(boxes);
    Ok(SynthScene {
        weather,
        image: ImageRgb::new(h, w, data)?,
        annotations,
    })
}

/// Writes `<dir>/images/*.png` and `<dir>/annotations.json`.
pub fn write_corpus(scenes: &[SynthScene], dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    let images = dir.join("images");
    std::fs::create_dir_all(&images).map_err(|e| Error::io(&images, e))?;
    for s in scenes {
        save_image(&s.image, images.join(&s.annotations.file_name))?;
    }
    write_annotations(
        dir.join("annotations.json"),
        scenes.iter().map(|s| &s.annotations),
    )
}
