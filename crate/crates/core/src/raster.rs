//! Raster containers and image ingestion.
//!
//! All rasters are row-major with a top-left origin: pixel `(x, y)` lives at
//! index `y * width + x`.

use std::path::Path;

use image::{DynamicImage, ImageFormat};

use crate::error::{Error, Result};

fn check_dims(width: u32, height: u32, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidRaster(format!(
            "dimensions must be at least 1x1, got {width}x{height}"
        )));
    }
    let expected = width as usize * height as usize;
    if len != expected {
        return Err(Error::InvalidRaster(format!(
            "{width}x{height} raster needs {expected} samples, got {len}"
        )));
    }
    Ok(())
}

/// 8-bit RGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: u32,
    height: u32,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: u32, height: u32, pixels: Vec<[u8; 3]>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Image filled with a single color.
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self> {
        Self::new(width, height, vec![rgb; width as usize * height as usize])
    }

    /// Builds an image from interleaved `r, g, b` bytes.
    pub fn from_interleaved(width: u32, height: u32, data: &[u8]) -> Result<Self> {
        if !data.len().is_multiple_of(3) {
            return Err(Error::InvalidRaster(format!(
                "interleaved RGB buffer length {} is not a multiple of 3",
                data.len()
            )));
        }
        let pixels = data.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn to_image(&self) -> image::RgbImage {
        let raw = self.pixels.iter().flatten().copied().collect();
        image::RgbImage::from_raw(self.width, self.height, raw)
            .expect("buffer length matches dimensions")
    }
}

/// 8-bit single-channel luma raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    luma: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, luma: Vec<u8>) -> Result<Self> {
        check_dims(width, height, luma.len())?;
        Ok(Self {
            width,
            height,
            luma,
        })
    }

    pub fn filled(width: u32, height: u32, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width as usize * height as usize])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn luma(&self) -> &[u8] {
        &self.luma
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.luma[y as usize * self.width as usize + x as usize]
    }
}

/// Per-pixel boolean raster produced by every thresholding step.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        check_dims(width, height, bits.len())?;
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn filled(width: u32, height: u32, value: bool) -> Result<Self> {
        Self::new(width, height, vec![value; width as usize * height as usize])
    }

    /// Mask with `true` at each listed `(x, y)` coordinate.
    pub fn from_points(width: u32, height: u32, points: &[(u32, u32)]) -> Result<Self> {
        let mut mask = Self::filled(width, height, false)?;
        for &(x, y) in points {
            if x >= width || y >= height {
                return Err(Error::InvalidRaster(format!(
                    "point ({x}, {y}) outside {width}x{height} mask"
                )));
            }
            mask.set(x, y, true);
        }
        Ok(mask)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        let idx = y as usize * self.width as usize + x as usize;
        self.bits[idx] = value;
    }

    /// Number of `true` bits.
    pub fn count(&self) -> u64 {
        self.bits.iter().filter(|&&b| b).count() as u64
    }

    fn ensure_same_shape(&self, other: &BinaryMask) -> Result<()> {
        if self.dimensions() != other.dimensions() {
            return Err(Error::DimensionMismatch {
                expected: self.dimensions(),
                found: other.dimensions(),
            });
        }
        Ok(())
    }

    fn zip_with(&self, other: &BinaryMask, f: impl Fn(bool, bool) -> bool) -> Result<Self> {
        self.ensure_same_shape(other)?;
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Self {
            width: self.width,
            height: self.height,
            bits,
        })
    }

    pub fn and(&self, other: &BinaryMask) -> Result<Self> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn or(&self, other: &BinaryMask) -> Result<Self> {
        self.zip_with(other, |a, b| a || b)
    }

    /// `self AND NOT other`.
    pub fn and_not(&self, other: &BinaryMask) -> Result<Self> {
        self.zip_with(other, |a, b| a && !b)
    }

    /// True when every set bit of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.dimensions() == other.dimensions()
            && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    /// Dilation by a `(2r+1) x (2r+1)` square structuring element, clipped to
    /// the raster. A bit is set iff some set bit lies within Chebyshev
    /// distance `radius`.
    ///
    /// Runs in O(width * height) regardless of radius: the square element is
    /// separable, so a horizontal pass and a vertical pass each use a sliding
    /// window count.
    pub fn dilate(&self, radius: u32) -> Self {
        if radius == 0 {
            return self.clone();
        }
        let w = self.width as usize;
        let h = self.height as usize;
        let r = radius as usize;

        let mut horizontal = vec![false; w * h];
        for y in 0..h {
            let row = &self.bits[y * w..(y + 1) * w];
            sliding_any(row, r, &mut horizontal[y * w..(y + 1) * w]);
        }

        let mut column = vec![false; h];
        let mut column_out = vec![false; h];
        let mut bits = vec![false; w * h];
        for x in 0..w {
            for y in 0..h {
                column[y] = horizontal[y * w + x];
            }
            sliding_any(&column, r, &mut column_out);
            for y in 0..h {
                bits[y * w + x] = column_out[y];
            }
        }

        Self {
            width: self.width,
            height: self.height,
            bits,
        }
    }

    /// White (255) where set, black elsewhere.
    pub fn to_image(&self) -> image::GrayImage {
        let raw = self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
        image::GrayImage::from_raw(self.width, self.height, raw)
            .expect("buffer length matches dimensions")
    }
}

/// `out[i]` = any of `input[i - r ..= i + r]` (clipped).
fn sliding_any(input: &[bool], r: usize, out: &mut [bool]) {
    let n = input.len();
    // prefix[i] = number of set bits in input[..i]
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0usize);
    let mut acc = 0;
    for &b in input {
        acc += b as usize;
        prefix.push(acc);
    }
    for (i, o) in out.iter_mut().enumerate() {
        let lo = i.saturating_sub(r);
        let hi = (i + r + 1).min(n);
        *o = prefix[hi] > prefix[lo];
    }
}

/// Number of set bits in a mask.
pub fn mask_count(mask: &BinaryMask) -> u64 {
    mask.count()
}

/// Decodes a PNG or JPEG file into 8-bit RGB.
///
/// Alpha is dropped. 16-bit sources are reduced with integer division by 257.
pub fn load_image(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| Error::FileUnreadable {
        path: path.to_path_buf(),
        source,
    })?;
    decode_image(&bytes).map_err(|e| match e {
        DecodeError::Unsupported => Error::UnsupportedFormat {
            path: path.to_path_buf(),
        },
        DecodeError::Corrupt(reason) => Error::CorruptImage {
            path: path.to_path_buf(),
            reason,
        },
    })
}

enum DecodeError {
    Unsupported,
    Corrupt(String),
}

fn decode_image(bytes: &[u8]) -> std::result::Result<RgbImage, DecodeError> {
    let format = image::guess_format(bytes).map_err(|_| DecodeError::Unsupported)?;
    if !matches!(format, ImageFormat::Png | ImageFormat::Jpeg) {
        return Err(DecodeError::Unsupported);
    }
    let decoded = image::load_from_memory_with_format(bytes, format)
        .map_err(|e| DecodeError::Corrupt(e.to_string()))?;
    Ok(from_dynamic(&decoded))
}

fn from_dynamic(img: &DynamicImage) -> RgbImage {
    let (width, height) = (img.width(), img.height());
    let pixels = if img.color().bytes_per_pixel() / img.color().channel_count() > 1 {
        img.to_rgb16()
            .pixels()
            .map(|p| p.0.map(|c| (c / 257) as u8))
            .collect()
    } else {
        img.to_rgb8().pixels().map(|p| p.0).collect()
    };
    RgbImage {
        width,
        height,
        pixels,
    }
}
