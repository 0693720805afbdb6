//! Pinhole ground-sample-distance model for nadir UAV capture.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Capture geometry. Defaults: 5 m altitude, 5 mm lens, 6.17 x 4.55 mm
/// sensor, 4000 x 3000 px frames. Override the camera fields for real surveys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Calibration {
    /// Camera to canopy distance.
    pub altitude_mm: f64,
    pub focal_length_mm: f64,
    pub sensor_width_mm: f64,
    pub sensor_height_mm: f64,
    pub image_width_px: f64,
    pub image_height_px: f64,
}

impl Default for Calibration {
    fn default() -> Self {
        Self {
            altitude_mm: 5000.0,
            focal_length_mm: 5.0,
            sensor_width_mm: 6.17,
            sensor_height_mm: 4.55,
            image_width_px: 4000.0,
            image_height_px: 3000.0,
        }
    }
}

impl Calibration {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("altitude_mm", self.altitude_mm),
            ("focal_length_mm", self.focal_length_mm),
            ("sensor_width_mm", self.sensor_width_mm),
            ("sensor_height_mm", self.sensor_height_mm),
            ("image_width_px", self.image_width_px),
            ("image_height_px", self.image_height_px),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidConfig {
                    field: format!("calibration.{name}"),
                    reason: format!("{value} must be finite and > 0"),
                });
            }
        }
        Ok(())
    }

    /// Ground footprint of one pixel along x, mm.
    pub fn gsd_x(&self) -> f64 {
        self.altitude_mm * self.sensor_width_mm / (self.focal_length_mm * self.image_width_px)
    }

    /// Ground footprint of one pixel along y, mm.
    pub fn gsd_y(&self) -> f64 {
        self.altitude_mm * self.sensor_height_mm / (self.focal_length_mm * self.image_height_px)
    }
}

/// mm² covered by one pixel.
pub fn area_per_pixel(cal: &Calibration) -> f64 {
    cal.gsd_x() * cal.gsd_y()
}

pub fn pixels_to_area(count: u64, cal: &Calibration) -> f64 {
    count as f64 * area_per_pixel(cal)
}
