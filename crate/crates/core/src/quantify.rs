//! Per-image defect quantification, per-region aggregation and report files.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::calibration::{pixels_to_area, Calibration};
use crate::colorspace::{rgb_to_gray, rgb_to_hsv};
use crate::error::Result;
use crate::raster::{BinaryMask, RgbImage};
use crate::segmentation::{defect_mask, green_mask, leaf_mask, quality_score, SegmentationConfig};

pub const IMAGES_CSV: &str = "images.csv";
pub const REGIONS_CSV: &str = "regions.csv";
pub const REPORT_JSON: &str = "report.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageReport {
    pub image_id: String,
    pub quality: f64,
    pub green_px: u64,
    pub defect_px: u64,
    pub leaf_px: u64,
    pub leaf_area_mm2: f64,
    pub defect_area_mm2: f64,
    pub percent_defect: f64,
}

impl ImageReport {
    pub fn from_counts(
        image_id: impl Into<String>,
        quality: f64,
        green_px: u64,
        defect_px: u64,
        cal: &Calibration,
    ) -> Self {
        let leaf_px = green_px + defect_px;
        let leaf_area_mm2 = pixels_to_area(leaf_px, cal);
        let defect_area_mm2 = pixels_to_area(defect_px, cal);
        Self {
            image_id: image_id.into(),
            quality,
            green_px,
            defect_px,
            leaf_px,
            leaf_area_mm2,
            defect_area_mm2,
            percent_defect: percent(defect_area_mm2, leaf_area_mm2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionReport {
    pub region: String,
    pub n_images: u64,
    pub total_leaf_area_mm2: f64,
    pub total_defect_area_mm2: f64,
    pub percent_defect: f64,
}

/// `100 * defect / leaf`, or 0 when there is no leaf.
pub fn percent(defect: f64, leaf: f64) -> f64 {
    if leaf > 0.0 {
        100.0 * defect / leaf
    } else {
        0.0
    }
}

/// Masks produced while quantifying one image.
#[derive(Debug, Clone)]
pub struct ImageMasks {
    pub green: BinaryMask,
    pub defect: BinaryMask,
    pub leaf: BinaryMask,
}

pub fn quantify_image(
    image: &RgbImage,
    image_id: &str,
    seg: &SegmentationConfig,
    cal: &Calibration,
) -> Result<ImageReport> {
    quantify_image_with_masks(image, image_id, seg, cal).map(|(report, _)| report)
}

pub fn quantify_image_with_masks(
    image: &RgbImage,
    image_id: &str,
    seg: &SegmentationConfig,
    cal: &Calibration,
) -> Result<(ImageReport, ImageMasks)> {
    let gray = rgb_to_gray(image);
    let quality = quality_score(&gray)?;
    let hsv = rgb_to_hsv(image);
    let green = green_mask(&hsv, seg);
    let defect = defect_mask(&gray, &green, seg)?;
    let leaf = leaf_mask(&green, &defect)?;
    debug_assert_eq!(leaf.count(), green.count() + defect.count());

    let report = ImageReport::from_counts(image_id, quality, green.count(), defect.count(), cal);
    Ok((
        report,
        ImageMasks {
            green,
            defect,
            leaf,
        },
    ))
}

/// Area-weighted aggregation: percentages are ratios of summed areas.
pub fn aggregate_region(region: &str, reports: &[ImageReport]) -> RegionReport {
    let total_leaf_area_mm2: f64 = reports.iter().map(|r| r.leaf_area_mm2).sum();
    let total_defect_area_mm2: f64 = reports.iter().map(|r| r.defect_area_mm2).sum();
    RegionReport {
        region: region.to_string(),
        n_images: reports.len() as u64,
        total_leaf_area_mm2,
        total_defect_area_mm2,
        percent_defect: percent(total_defect_area_mm2, total_leaf_area_mm2),
    }
}

/// Combines already aggregated regions into one.
pub fn merge_regions(region: &str, parts: &[RegionReport]) -> RegionReport {
    let total_leaf_area_mm2: f64 = parts.iter().map(|r| r.total_leaf_area_mm2).sum();
    let total_defect_area_mm2: f64 = parts.iter().map(|r| r.total_defect_area_mm2).sum();
    RegionReport {
        region: region.to_string(),
        n_images: parts.iter().map(|r| r.n_images).sum(),
        total_leaf_area_mm2,
        total_defect_area_mm2,
        percent_defect: percent(total_defect_area_mm2, total_leaf_area_mm2),
    }
}

/// An image report tagged with the region it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionImage {
    pub region: String,
    pub report: ImageReport,
}

/// Everything written to an output directory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportSet {
    pub images: Vec<RegionImage>,
    pub regions: Vec<RegionReport>,
    /// Inputs that could not be analyzed, as display paths.
    pub skipped: Vec<String>,
    /// Inputs dropped by the quality screen.
    pub screened_out: Vec<String>,
}

/// Fixed two-decimal text, ties rounded away from zero.
pub fn fmt2(value: f64) -> String {
    let cents = (value * 100.0).round();
    let sign = if cents < 0.0 { "-" } else { "" };
    let cents = cents.abs() as u64;
    format!("{sign}{}.{:02}", cents / 100, cents % 100)
}

fn raw2(value: f64) -> Box<RawValue> {
    RawValue::from_string(fmt2(value)).expect("fixed-point text is valid JSON")
}

#[derive(Serialize)]
struct ImageRow<'a> {
    image_id: &'a str,
    region: &'a str,
    quality: Box<RawValue>,
    green_px: u64,
    defect_px: u64,
    leaf_px: u64,
    leaf_area_mm2: Box<RawValue>,
    defect_area_mm2: Box<RawValue>,
    percent_defect: Box<RawValue>,
}

#[derive(Serialize)]
struct RegionRow<'a> {
    region: &'a str,
    n_images: u64,
    total_leaf_area_mm2: Box<RawValue>,
    total_defect_area_mm2: Box<RawValue>,
    percent_defect: Box<RawValue>,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    images: Vec<ImageRow<'a>>,
    regions: Vec<RegionRow<'a>>,
    skipped: &'a [String],
    screened_out: &'a [String],
}

impl ReportSet {
    /// Sorts images by (region, image_id) and regions by name.
    pub fn sort(&mut self) {
        self.images.sort_by(|a, b| {
            (a.region.as_str(), a.report.image_id.as_str())
                .cmp(&(b.region.as_str(), b.report.image_id.as_str()))
        });
        self.regions.sort_by(|a, b| a.region.cmp(&b.region));
        self.skipped.sort();
        self.screened_out.sort();
    }

    fn images_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv_writer();
        w.write_record([
            "image_id",
            "region",
            "quality",
            "green_px",
            "defect_px",
            "leaf_px",
            "leaf_area_mm2",
            "defect_area_mm2",
            "percent_defect",
        ])?;
        for RegionImage { region, report: r } in &self.images {
            w.write_record([
                r.image_id.clone(),
                region.clone(),
                fmt2(r.quality),
                r.green_px.to_string(),
                r.defect_px.to_string(),
                r.leaf_px.to_string(),
                fmt2(r.leaf_area_mm2),
                fmt2(r.defect_area_mm2),
                fmt2(r.percent_defect),
            ])?;
        }
        finish_csv(w)
    }

    fn regions_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv_writer();
        w.write_record([
            "region",
            "n_images",
            "total_leaf_area_mm2",
            "total_defect_area_mm2",
            "percent_defect",
        ])?;
        for r in &self.regions {
            w.write_record([
                r.region.clone(),
                r.n_images.to_string(),
                fmt2(r.total_leaf_area_mm2),
                fmt2(r.total_defect_area_mm2),
                fmt2(r.percent_defect),
            ])?;
        }
        finish_csv(w)
    }

    fn report_json(&self) -> Result<Vec<u8>> {
        let doc = ReportJson {
            images: self
                .images
                .iter()
                .map(|RegionImage { region, report: r }| ImageRow {
                    image_id: &r.image_id,
                    region,
                    quality: raw2(r.quality),
                    green_px: r.green_px,
                    defect_px: r.defect_px,
                    leaf_px: r.leaf_px,
                    leaf_area_mm2: raw2(r.leaf_area_mm2),
                    defect_area_mm2: raw2(r.defect_area_mm2),
                    percent_defect: raw2(r.percent_defect),
                })
                .collect(),
            regions: self
                .regions
                .iter()
                .map(|r| RegionRow {
                    region: &r.region,
                    n_images: r.n_images,
                    total_leaf_area_mm2: raw2(r.total_leaf_area_mm2),
                    total_defect_area_mm2: raw2(r.total_defect_area_mm2),
                    percent_defect: raw2(r.percent_defect),
                })
                .collect(),
            skipped: &self.skipped,
            screened_out: &self.screened_out,
        };
        let mut out = serde_json::to_vec_pretty(&doc)?;
        out.push(b'\n');
        Ok(out)
    }

    /// Writes `images.csv`, `regions.csv` and `report.json` into `out_dir`.
    ///
    /// Files are staged as temporaries in `out_dir` and renamed into place
    /// only once all three have been written.
    pub fn write(&self, out_dir: &Path) -> Result<Vec<PathBuf>> {
        let contents = [
            (IMAGES_CSV, self.images_csv()?),
            (REGIONS_CSV, self.regions_csv()?),
            (REPORT_JSON, self.report_json()?),
        ];
        let mut staged = Vec::with_capacity(contents.len());
        for (name, bytes) in contents {
            staged.push((name, stage_file(out_dir, &bytes)?));
        }
        let mut paths = Vec::with_capacity(staged.len());
        for (name, tmp) in staged {
            let path = out_dir.join(name);
            tmp.persist(&path).map_err(|e| e.error)?;
            paths.push(path);
        }
        Ok(paths)
    }
}

/// Writes `bytes` to a temporary file inside `dir`.
pub(crate) fn stage_file(dir: &Path, bytes: &[u8]) -> Result<tempfile::NamedTempFile> {
    let mut tmp = tempfile::Builder::new()
        .prefix(".leafquant-")
        .tempfile_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    Ok(tmp)
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner()
        .map_err(|e| crate::error::Error::Io(e.into_error()))
}

/// Sorts the inputs deterministically and writes the three report files.
pub fn write_reports(
    regions: &[RegionReport],
    images: &[RegionImage],
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let mut set = ReportSet {
        images: images.to_vec(),
        regions: regions.to_vec(),
        ..Default::default()
    };
    set.sort();
    set.write(out_dir)
}
