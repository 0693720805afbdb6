//! Threshold segmentation: green (healthy leaf) mask from HSV, defect mask
//! from a luma band near the leaves, their union as total leaf extent, and a
//! Laplacian-variance sharpness screen.

use serde::{Deserialize, Serialize};

use crate::colorspace::HsvImage;
use crate::error::{Error, Result};
use crate::raster::{BinaryMask, GrayImage};

/// Every threshold the pipeline uses. Missing JSON fields take the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentationConfig {
    /// Lower hue bound of the green band, degrees (inclusive).
    pub hue_lo: f64,
    /// Upper hue bound of the green band, degrees (exclusive).
    pub hue_hi: f64,
    pub sat_min: f64,
    pub val_min: f64,
    /// Defect luma band, inclusive on both ends.
    pub gray_lo: u8,
    pub gray_hi: u8,
    /// Chebyshev reach of the plant region around green pixels.
    pub plant_dilation_radius: u32,
    /// Minimum Laplacian variance for an image to be analyzed.
    pub quality_min: f64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            hue_lo: 60.0,
            hue_hi: 180.0,
            sat_min: 0.2,
            val_min: 0.1,
            gray_lo: 60,
            gray_hi: 160,
            plant_dilation_radius: 25,
            quality_min: 100.0,
        }
    }
}

fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::InvalidConfig {
        field: format!("segmentation.{field}"),
        reason: reason.into(),
    }
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.hue_lo >= 0.0 && self.hue_lo < 360.0) {
            return Err(invalid(
                "hue_lo",
                format!("{} not in [0, 360)", self.hue_lo),
            ));
        }
        if !(self.hue_hi > self.hue_lo && self.hue_hi < 360.0) {
            return Err(invalid(
                "hue_hi",
                format!("{} must satisfy hue_lo < hue_hi < 360", self.hue_hi),
            ));
        }
        if !(0.0..=1.0).contains(&self.sat_min) {
            return Err(invalid(
                "sat_min",
                format!("{} not in [0, 1]", self.sat_min),
            ));
        }
        if !(0.0..=1.0).contains(&self.val_min) {
            return Err(invalid(
                "val_min",
                format!("{} not in [0, 1]", self.val_min),
            ));
        }
        if self.gray_lo > self.gray_hi {
            return Err(invalid(
                "gray_lo",
                format!("{} exceeds gray_hi {}", self.gray_lo, self.gray_hi),
            ));
        }
        if !(self.quality_min >= 0.0 && self.quality_min.is_finite()) {
            return Err(invalid(
                "quality_min",
                format!("{} must be a finite value >= 0", self.quality_min),
            ));
        }
        Ok(())
    }

    pub fn in_green_band(&self, h: f64, s: f64, v: f64) -> bool {
        self.hue_lo <= h && h < self.hue_hi && s >= self.sat_min && v >= self.val_min
    }

    pub fn in_gray_band(&self, luma: u8) -> bool {
        self.gray_lo <= luma && luma <= self.gray_hi
    }
}

pub fn green_mask(image: &HsvImage, config: &SegmentationConfig) -> BinaryMask {
    let bits = image
        .pixels()
        .iter()
        .map(|p| config.in_green_band(p.h, p.s, p.v))
        .collect();
    BinaryMask::new(image.width(), image.height(), bits).expect("same dimensions as source")
}

/// Pixels in the luma band that are not green but lie within
/// `plant_dilation_radius` of a green pixel.
pub fn defect_mask(
    gray: &GrayImage,
    green: &BinaryMask,
    config: &SegmentationConfig,
) -> Result<BinaryMask> {
    if gray.dimensions() != green.dimensions() {
        return Err(Error::DimensionMismatch {
            expected: green.dimensions(),
            found: gray.dimensions(),
        });
    }
    let plant = green.dilate(config.plant_dilation_radius);
    let bits = gray
        .luma()
        .iter()
        .zip(green.bits())
        .zip(plant.bits())
        .map(|((&luma, &is_green), &in_plant)| in_plant && !is_green && config.in_gray_band(luma))
        .collect();
    BinaryMask::new(gray.width(), gray.height(), bits)
}

/// Total leaf extent: healthy green plus diseased tissue.
pub fn leaf_mask(green: &BinaryMask, defect: &BinaryMask) -> Result<BinaryMask> {
    green.or(defect)
}

/// Population variance of the 4-neighbour Laplacian over interior pixels.
pub fn quality_score(gray: &GrayImage) -> Result<f64> {
    let (w, h) = gray.dimensions();
    if w < 3 || h < 3 {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
        });
    }
    let w = w as usize;
    let h = h as usize;
    let luma = gray.luma();
    let at = |x: usize, y: usize| luma[y * w + x] as i32;

    let n = ((w - 2) * (h - 2)) as f64;
    let mut responses = Vec::with_capacity((w - 2) * (h - 2));
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let lap = 4 * at(x, y) - at(x - 1, y) - at(x + 1, y) - at(x, y - 1) - at(x, y + 1);
            responses.push(lap as f64);
        }
    }
    let mean = responses.iter().sum::<f64>() / n;
    let variance = responses.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    Ok(variance)
}

/// Ids whose score reaches `quality_min`, in input order.
pub fn select_images<S: Clone>(scored: &[(S, f64)], config: &SegmentationConfig) -> Vec<S> {
    scored
        .iter()
        .filter(|(_, score)| *score >= config.quality_min)
        .map(|(id, _)| id.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colorspace::rgb_to_hsv;
    use crate::raster::RgbImage;

    fn hsv_filled(rgb: [u8; 3]) -> HsvImage {
        rgb_to_hsv(&RgbImage::filled(4, 4, rgb).unwrap())
    }

    #[test]
    fn green_mask_examples() {
        let cfg = SegmentationConfig::default();
        assert_eq!(green_mask(&hsv_filled([0, 255, 0]), &cfg).count(), 16);
        assert_eq!(green_mask(&hsv_filled([139, 90, 43]), &cfg).count(), 0);
        let strict = SegmentationConfig {
            sat_min: 0.01,
            hue_lo: 0.0,
            ..cfg
        };
        assert_eq!(green_mask(&hsv_filled([90, 90, 90]), &strict).count(), 0);
    }

    #[test]
    fn hue_band_is_half_open() {
        let cfg = SegmentationConfig::default();
        // pure yellow sits exactly on 60, cyan exactly on 180
        assert_eq!(green_mask(&hsv_filled([255, 255, 0]), &cfg).count(), 16);
        assert_eq!(green_mask(&hsv_filled([0, 255, 255]), &cfg).count(), 0);
    }

    #[test]
    fn defect_excludes_green() {
        let cfg = SegmentationConfig::default();
        let gray = GrayImage::filled(4, 4, 100).unwrap();
        let green = BinaryMask::filled(4, 4, true).unwrap();
        assert_eq!(defect_mask(&gray, &green, &cfg).unwrap().count(), 0);
    }

    #[test]
    fn defect_center_pixel() {
        let cfg = SegmentationConfig {
            plant_dilation_radius: 1,
            ..Default::default()
        };
        let mut green = BinaryMask::filled(5, 5, true).unwrap();
        green.set(2, 2, false);
        let mut luma = vec![200u8; 25];
        luma[2 * 5 + 2] = 100;
        let gray = GrayImage::new(5, 5, luma).unwrap();
        let defect = defect_mask(&gray, &green, &cfg).unwrap();
        assert_eq!(defect, BinaryMask::from_points(5, 5, &[(2, 2)]).unwrap());
    }

    #[test]
    fn defect_needs_plant_region() {
        let cfg = SegmentationConfig {
            plant_dilation_radius: 1,
            ..Default::default()
        };
        let gray = GrayImage::filled(5, 5, 100).unwrap();
        let green = BinaryMask::filled(5, 5, false).unwrap();
        assert_eq!(defect_mask(&gray, &green, &cfg).unwrap().count(), 0);
    }

    #[test]
    fn zero_radius_gives_empty_defect() {
        let cfg = SegmentationConfig {
            plant_dilation_radius: 0,
            ..Default::default()
        };
        let gray = GrayImage::filled(3, 3, 100).unwrap();
        let green = BinaryMask::from_points(3, 3, &[(1, 1)]).unwrap();
        assert_eq!(defect_mask(&gray, &green, &cfg).unwrap().count(), 0);
    }

    #[test]
    fn defect_dimension_mismatch() {
        let gray = GrayImage::filled(3, 3, 100).unwrap();
        let green = BinaryMask::filled(3, 4, true).unwrap();
        let err = defect_mask(&gray, &green, &SegmentationConfig::default()).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn leaf_mask_examples() {
        let all = BinaryMask::filled(2, 2, true).unwrap();
        let none = BinaryMask::filled(2, 2, false).unwrap();
        assert_eq!(leaf_mask(&all, &none).unwrap().count(), 4);

        let left = BinaryMask::from_points(2, 2, &[(0, 0), (0, 1)]).unwrap();
        let right = BinaryMask::from_points(2, 2, &[(1, 0), (1, 1)]).unwrap();
        assert_eq!(leaf_mask(&left, &right).unwrap().count(), 4);

        let one = BinaryMask::from_points(2, 2, &[(1, 1)]).unwrap();
        assert_eq!(leaf_mask(&one, &one).unwrap().count(), 1);

        let other = BinaryMask::filled(3, 2, true).unwrap();
        assert!(leaf_mask(&one, &other).is_err());
    }

    #[test]
    fn quality_examples() {
        assert_eq!(
            quality_score(&GrayImage::filled(5, 4, 77).unwrap()).unwrap(),
            0.0
        );

        let mut spike = vec![0u8; 9];
        spike[4] = 255;
        let spike = GrayImage::new(3, 3, spike).unwrap();
        assert_eq!(quality_score(&spike).unwrap(), 0.0);

        // interior responses are -255, 255, -255, 255
        let step: Vec<u8> = (0..16).map(|i| if i % 4 >= 2 { 255 } else { 0 }).collect();
        let step = GrayImage::new(4, 4, step).unwrap();
        assert_eq!(quality_score(&step).unwrap(), 65025.0);

        let thin = GrayImage::filled(2, 5, 0).unwrap();
        assert!(matches!(
            quality_score(&thin),
            Err(Error::ImageTooSmall { .. })
        ));
    }

    #[test]
    fn select_images_examples() {
        let cfg = SegmentationConfig {
            quality_min: 1.0,
            ..Default::default()
        };
        assert_eq!(select_images(&[("a", 5.0), ("b", 0.1)], &cfg), vec!["a"]);
        let open = SegmentationConfig {
            quality_min: 0.0,
            ..Default::default()
        };
        assert_eq!(
            select_images(&[("a", 5.0), ("b", 0.0)], &open),
            vec!["a", "b"]
        );
        assert!(select_images::<&str>(&[], &cfg).is_empty());
    }

    #[test]
    fn config_validation_names_field() {
        let cfg = SegmentationConfig {
            hue_hi: 30.0,
            ..Default::default()
        };
        match cfg.validate() {
            Err(Error::InvalidConfig { field, .. }) => assert_eq!(field, "segmentation.hue_hi"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(SegmentationConfig::default().validate().is_ok());
    }
}
