//! RGB to HSV (hexcone) and RGB to BT.601 luma.

use crate::raster::{GrayImage, RgbImage};

/// Hue in degrees `[0, 360)`, saturation and value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hsv {
    pub h: f64,
    pub s: f64,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HsvImage {
    width: u32,
    height: u32,
    pixels: Vec<Hsv>,
}

impl HsvImage {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[Hsv] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> Hsv {
        self.pixels[y as usize * self.width as usize + x as usize]
    }
}

/// Hexcone conversion of one pixel. Achromatic pixels get `h = 0, s = 0`.
///
/// Ratios are taken on integer channel differences so that hues of exact
/// colors (primaries, secondaries) come out exact.
pub fn hsv_of([r, g, b]: [u8; 3]) -> Hsv {
    let (ri, gi, bi) = (r as i32, g as i32, b as i32);
    let max = ri.max(gi).max(bi);
    let min = ri.min(gi).min(bi);
    let delta = max - min;

    let v = max as f64 / 255.0;
    let s = if max == 0 {
        0.0
    } else {
        delta as f64 / max as f64
    };
    let h = if delta == 0 {
        0.0
    } else {
        let d = delta as f64;
        let sector = if max == ri {
            ((gi - bi) as f64 / d).rem_euclid(6.0)
        } else if max == gi {
            (bi - ri) as f64 / d + 2.0
        } else {
            (ri - gi) as f64 / d + 4.0
        };
        let h = 60.0 * sector;
        if h >= 360.0 {
            h - 360.0
        } else {
            h
        }
    };
    Hsv { h, s, v }
}

/// Inverse hexcone mapping back to 8-bit channels (rounded).
pub fn rgb_of(hsv: Hsv) -> [u8; 3] {
    let c = hsv.v * hsv.s;
    let hp = hsv.h / 60.0;
    let x = c * (1.0 - (hp.rem_euclid(2.0) - 1.0).abs());
    let (r1, g1, b1) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = hsv.v - c;
    [r1, g1, b1].map(|ch| ((ch + m) * 255.0).round().clamp(0.0, 255.0) as u8)
}

pub fn rgb_to_hsv(image: &RgbImage) -> HsvImage {
    HsvImage {
        width: image.width(),
        height: image.height(),
        pixels: image.pixels().iter().map(|&p| hsv_of(p)).collect(),
    }
}

/// BT.601 luma, `round(0.299 r + 0.587 g + 0.114 b)` with ties away from zero.
///
/// Computed in exact integer thousandths.
pub fn luma_of([r, g, b]: [u8; 3]) -> u8 {
    let weighted = 299 * r as u32 + 587 * g as u32 + 114 * b as u32;
    ((weighted + 500) / 1000).min(255) as u8
}

pub fn rgb_to_gray(image: &RgbImage) -> GrayImage {
    let luma = image.pixels().iter().map(|&p| luma_of(p)).collect();
    GrayImage::new(image.width(), image.height(), luma).expect("same dimensions as source")
}
