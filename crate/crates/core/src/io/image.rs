use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use image::codecs::png::PngEncoder;
use image::{ColorType, ImageEncoder, ImageFormat};

use crate::error::{Error, Result};

/// 8-bit RGB raster, interleaved, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageRgb {
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl ImageRgb {
    pub fn new(height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::shape(format!(
                "image must be non-empty, got {height}x{width}"
            )));
        }
        if data.len() != height * width * 3 {
            return Err(Error::shape(format!(
                "{height}x{width} RGB image needs {} bytes, got {}",
                height * width * 3,
                data.len()
            )));
        }
        Ok(Self { height, width, data })
    }

    /// Image filled with a single color.
    pub fn filled(height: usize, width: usize, rgb: [u8; 3]) -> Result<Self> {
        let data = rgb.iter().copied().cycle().take(height * width * 3).collect();
        Self::new(height, width, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel(&self, row: usize, col: usize) -> [u8; 3] {
        let i = (row * self.width + col) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.data.chunks_exact(3).map(|p| [p[0], p[1], p[2]])
    }

    /// Per-channel mean over all pixels.
    pub fn channel_means(&self) -> [f64; 3] {
        let mut sums = [0u64; 3];
        for p in self.pixels() {
            for (s, v) in sums.iter_mut().zip(p) {
                *s += u64::from(v);
            }
        }
        let n = (self.height * self.width) as f64;
        sums.map(|s| s as f64 / n)
    }
}

/// Reads an 8-bit RGB PNG or binary PPM (P6). Grayscale and alpha inputs are
/// rejected rather than converted.
pub fn load_image(path: impl AsRef<Path>) -> Result<ImageRgb> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let decode_err = |reason: String| Error::Decode {
        path: path.to_path_buf(),
        reason,
    };
    let format = match image::guess_format(&bytes) {
        Ok(ImageFormat::Png) => ImageFormat::Png,
        Ok(ImageFormat::Pnm) if bytes.starts_with(b"P6") => ImageFormat::Pnm,
        Ok(other) => return Err(decode_err(format!("unsupported format {other:?}"))),
        Err(e) => return Err(decode_err(e.to_string())),
    };
    let img = image::load_from_memory_with_format(&bytes, format).map_err(|e| decode_err(e.to_string()))?;
    if img.color() != ColorType::Rgb8 {
        return Err(decode_err(format!("expected 8-bit RGB, found {:?}", img.color())));
    }
    let (w, h) = (img.width() as usize, img.height() as usize);
    ImageRgb::new(h, w, img.into_bytes())
}

/// Writes a lossless PNG.
pub fn save_image(img: &ImageRgb, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let encoder = PngEncoder::new(BufWriter::new(file));
    encoder
        .write_image(
            img.data(),
            img.width() as u32,
            img.height() as u32,
            image::ExtendedColorType::Rgb8,
        )
        .map_err(|e| match e {
            image::ImageError::IoError(io) => Error::io(path, io),
            other => Error::io(path, std::io::Error::other(other.to_string())),
        })
}
