//! # leafquant
//!
//! Quantifies diseased leaf area in UAV crop-field images.
//!
//! The pipeline converts each image to HSV to isolate healthy green tissue,
//! to BT.601 luma to find lesions adjacent to that tissue, and converts pixel
//! counts to mm² with a pinhole ground-sample-distance model:
//!
//! ```
//! use leafquant::{default_spec, generate_scene, quantify_image, Calibration, SegmentationConfig};
//!
//! let (scene, truth) = generate_scene(&default_spec(1))?;
//! let report = quantify_image(&scene, "scene_1", &SegmentationConfig::default(), &Calibration::default())?;
//! assert_eq!(report.green_px, truth.green_px);
//! assert_eq!(report.defect_px, truth.defect_px);
//! # Ok::<(), leafquant::Error>(())
//! ```

pub mod calibration;
pub mod cli;
pub mod colorspace;
mod error;
pub mod quantify;
pub mod raster;
pub mod segmentation;
pub mod synthgen;

pub use calibration::{area_per_pixel, pixels_to_area, Calibration};
pub use colorspace::{rgb_to_gray, rgb_to_hsv, Hsv, HsvImage};
pub use error::{Error, Result};
pub use quantify::{
    aggregate_region, quantify_image, write_reports, ImageReport, RegionImage, RegionReport,
    ReportSet,
};
pub use raster::{load_image, mask_count, BinaryMask, GrayImage, RgbImage};
pub use segmentation::{
    defect_mask, green_mask, leaf_mask, quality_score, select_images, SegmentationConfig,
};
pub use synthgen::{default_spec, generate_scene, Disk, GroundTruth, SynthSpec};
