//! Synthetic field scenes with exact ground-truth labels.
//!
//! A scene is a soil-colored canvas with leaf disks painted on top and lesion
//! disks painted over leaf pixels. Colors are checked against the
//! segmentation bands before rendering so the pipeline must recover the
//! painted labels exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::colorspace::{hsv_of, luma_of, rgb_to_gray};
use crate::error::{Error, Result};
use crate::raster::{BinaryMask, RgbImage};
use crate::segmentation::{quality_score, SegmentationConfig};

pub const DEFAULT_WIDTH: u32 = 640;
pub const DEFAULT_HEIGHT: u32 = 480;
/// Dark moist soil: luma 50, hue 30.
pub const DEFAULT_SOIL: [u8; 3] = [70, 45, 20];
/// Sunlit leaf: luma 172, hue ~110.8.
pub const DEFAULT_LEAF: [u8; 3] = [110, 220, 90];
/// Brown lesion: luma 105, hue 52.5.
pub const DEFAULT_LESION: [u8; 3] = [120, 110, 40];

/// Closed disk: `(x - cx)^2 + (y - cy)^2 <= r^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Disk {
    pub cx: i64,
    pub cy: i64,
    pub r: u32,
}

impl Disk {
    pub fn new(cx: i64, cy: i64, r: u32) -> Self {
        Self { cx, cy, r }
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        let (dx, dy) = (x - self.cx, y - self.cy);
        let r = self.r as i64;
        dx * dx + dy * dy <= r * r
    }

    /// Every lattice point of the disk, including off-canvas ones.
    fn points(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        let r = self.r as i64;
        (self.cy - r..=self.cy + r).flat_map(move |y| {
            (self.cx - r..=self.cx + r)
                .map(move |x| (x, y))
                .filter(move |&(x, y)| self.contains(x, y))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub width: u32,
    pub height: u32,
    pub soil_rgb: [u8; 3],
    pub leaf_rgb: [u8; 3],
    pub lesion_rgb: [u8; 3],
    pub leaf_blobs: Vec<Disk>,
    pub lesion_spots: Vec<Disk>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub green_px: u64,
    pub defect_px: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Label {
    Soil,
    Leaf,
    Lesion,
}

fn strictly_in_green(cfg: &SegmentationConfig, rgb: [u8; 3]) -> bool {
    let p = hsv_of(rgb);
    cfg.hue_lo < p.h && p.h < cfg.hue_hi && p.s > cfg.sat_min && p.v > cfg.val_min
}

fn strictly_outside_green(cfg: &SegmentationConfig, rgb: [u8; 3]) -> bool {
    let p = hsv_of(rgb);
    p.h < cfg.hue_lo || p.h > cfg.hue_hi || p.s < cfg.sat_min || p.v < cfg.val_min
}

fn strictly_in_gray(cfg: &SegmentationConfig, rgb: [u8; 3]) -> bool {
    let l = luma_of(rgb);
    cfg.gray_lo < l && l < cfg.gray_hi
}

fn strictly_outside_gray(cfg: &SegmentationConfig, rgb: [u8; 3]) -> bool {
    let l = luma_of(rgb);
    l < cfg.gray_lo || l > cfg.gray_hi
}

impl SynthSpec {
    fn labels(&self) -> Vec<Label> {
        let (w, h) = (self.width as i64, self.height as i64);
        let mut labels = vec![Label::Soil; (w * h) as usize];
        let mut paint = |disk: &Disk, label: Label, only_over: Option<Label>| {
            let r = disk.r as i64;
            for y in (disk.cy - r).max(0)..=(disk.cy + r).min(h - 1) {
                for x in (disk.cx - r).max(0)..=(disk.cx + r).min(w - 1) {
                    if disk.contains(x, y) {
                        let cell = &mut labels[(y * w + x) as usize];
                        if only_over.is_none_or(|l| *cell == l) {
                            *cell = label;
                        }
                    }
                }
            }
        };
        for blob in &self.leaf_blobs {
            paint(blob, Label::Leaf, None);
        }
        for spot in &self.lesion_spots {
            paint(spot, Label::Lesion, Some(Label::Leaf));
        }
        labels
    }

    /// Checks color separation and lesion placement against `cfg`.
    pub fn validate(&self, cfg: &SegmentationConfig) -> Result<()> {
        let bad = |msg: String| Err(Error::SpecInvalid(msg));
        if self.width == 0 || self.height == 0 {
            return bad(format!("canvas {}x{} is empty", self.width, self.height));
        }
        if !strictly_in_green(cfg, self.leaf_rgb) {
            return bad(format!(
                "leaf color {:?} is not strictly inside the green band",
                self.leaf_rgb
            ));
        }
        if !strictly_outside_gray(cfg, self.leaf_rgb) {
            return bad(format!(
                "leaf color {:?} has luma {} inside the gray band",
                self.leaf_rgb,
                luma_of(self.leaf_rgb)
            ));
        }
        if !strictly_in_gray(cfg, self.lesion_rgb) {
            return bad(format!(
                "lesion color {:?} has luma {} not strictly inside the gray band",
                self.lesion_rgb,
                luma_of(self.lesion_rgb)
            ));
        }
        if !strictly_outside_green(cfg, self.lesion_rgb) {
            return bad(format!(
                "lesion color {:?} is not strictly outside the green band",
                self.lesion_rgb
            ));
        }
        if !strictly_outside_green(cfg, self.soil_rgb) || !strictly_outside_gray(cfg, self.soil_rgb)
        {
            return bad(format!(
                "soil color {:?} overlaps the green or gray band",
                self.soil_rgb
            ));
        }
        for (i, spot) in self.lesion_spots.iter().enumerate() {
            if let Some((x, y)) = spot
                .points()
                .find(|&(x, y)| !self.leaf_blobs.iter().any(|b| b.contains(x, y)))
            {
                return bad(format!(
                    "lesion spot {i} point ({x}, {y}) lies outside every leaf blob"
                ));
            }
        }

        // every lesion pixel must sit inside the dilated green region
        let labels = self.labels();
        let green = BinaryMask::new(
            self.width,
            self.height,
            labels.iter().map(|&l| l == Label::Leaf).collect(),
        )?;
        let plant = green.dilate(cfg.plant_dilation_radius);
        if let Some(idx) = labels
            .iter()
            .zip(plant.bits())
            .position(|(&l, &inside)| l == Label::Lesion && !inside)
        {
            let w = self.width as usize;
            return bad(format!(
                "lesion pixel ({}, {}) is farther than {} px from any leaf pixel",
                idx % w,
                idx / w,
                cfg.plant_dilation_radius
            ));
        }
        Ok(())
    }
}

/// Renders `spec` after validating it against the default segmentation bands.
pub fn generate_scene(spec: &SynthSpec) -> Result<(RgbImage, GroundTruth)> {
    generate_scene_with(spec, &SegmentationConfig::default())
}

pub fn generate_scene_with(
    spec: &SynthSpec,
    cfg: &SegmentationConfig,
) -> Result<(RgbImage, GroundTruth)> {
    spec.validate(cfg)?;
    let labels = spec.labels();
    let mut truth = GroundTruth {
        green_px: 0,
        defect_px: 0,
    };
    let pixels = labels
        .iter()
        .map(|label| match label {
            Label::Soil => spec.soil_rgb,
            Label::Leaf => {
                truth.green_px += 1;
                spec.leaf_rgb
            }
            Label::Lesion => {
                truth.defect_px += 1;
                spec.lesion_rgb
            }
        })
        .collect();
    Ok((RgbImage::new(spec.width, spec.height, pixels)?, truth))
}

/// 640x480 scene with 3 to 6 leaf blobs, each carrying 0 to 2 lesions.
///
/// Draws are repeated until the spec validates against the default bands and
/// the rendered scene clears the default quality floor.
pub fn default_spec(seed: u64) -> SynthSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = SegmentationConfig::default();
    loop {
        let spec = random_spec(&mut rng, seed);
        let Ok((image, _)) = generate_scene_with(&spec, &cfg) else {
            continue;
        };
        let sharp = quality_score(&rgb_to_gray(&image)).is_ok_and(|q| q >= cfg.quality_min);
        if sharp {
            return spec;
        }
    }
}

fn random_spec(rng: &mut ChaCha8Rng, seed: u64) -> SynthSpec {
    let (w, h) = (DEFAULT_WIDTH as i64, DEFAULT_HEIGHT as i64);
    let n_blobs = rng.gen_range(3..=6);
    let mut leaf_blobs = Vec::with_capacity(n_blobs);
    let mut lesion_spots = Vec::new();
    for _ in 0..n_blobs {
        let r = rng.gen_range(30..=90i64);
        let cx = rng.gen_range(r..w - r);
        let cy = rng.gen_range(r..h - r);
        leaf_blobs.push(Disk::new(cx, cy, r as u32));

        for _ in 0..rng.gen_range(0..=2) {
            let lr = rng.gen_range(3..=12i64);
            // keep the whole lesion disk (plus a margin) inside this blob
            let reach = r - lr - 2;
            let (dx, dy) = loop {
                let dx = rng.gen_range(-reach..=reach);
                let dy = rng.gen_range(-reach..=reach);
                if dx * dx + dy * dy <= reach * reach {
                    break (dx, dy);
                }
            };
            lesion_spots.push(Disk::new(cx + dx, cy + dy, lr as u32));
        }
    }
    SynthSpec {
        width: DEFAULT_WIDTH,
        height: DEFAULT_HEIGHT,
        soil_rgb: DEFAULT_SOIL,
        leaf_rgb: DEFAULT_LEAF,
        lesion_rgb: DEFAULT_LESION,
        leaf_blobs,
        lesion_spots,
        seed,
    }
}
