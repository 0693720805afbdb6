//! Batch commands behind the `leafquant` binary.
//!
//! Exit codes: 0 success, 1 IO failure, 2 bad config, 3 empty input tree.

use std::collections::BTreeMap;
use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::Calibration;
use crate::error::{Error, Result};
use crate::quantify::{
    aggregate_region, quantify_image_with_masks, stage_file, ImageReport, RegionImage, ReportSet,
};
use crate::raster::{load_image, BinaryMask};
use crate::segmentation::{select_images, SegmentationConfig};
use crate::synthgen::{default_spec, generate_scene, GroundTruth};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_EMPTY_INPUT: i32 = 3;

pub const THREADS_ENV: &str = "LEAFQUANT_THREADS";
pub const TRUTH_JSON: &str = "truth.json";

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub segmentation: SegmentationConfig,
    pub calibration: Calibration,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::InvalidConfig {
            field: json_error_field(&e),
            reason: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::FileUnreadable {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.segmentation.validate()?;
        self.calibration.validate()
    }
}

/// Best-effort field name out of a serde_json error message.
fn json_error_field(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    msg.split('`')
        .nth(1)
        .filter(|_| msg.contains("field"))
        .map(str::to_string)
        .unwrap_or_else(|| format!("<document> (line {}, column {})", e.line(), e.column()))
}

#[derive(Debug, Clone, Default)]
pub struct AnalyzeOptions {
    pub input_dir: PathBuf,
    /// `None` runs with every default.
    pub config_path: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub dump_masks: bool,
    pub min_quality: Option<f64>,
}

struct Candidate {
    region: String,
    image_id: String,
    path: PathBuf,
}

enum Outcome {
    Analyzed(RegionImage),
    Skipped(String),
}

fn is_image_file(path: &Path) -> bool {
    path.is_file()
        && path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
            .unwrap_or(false)
}

fn sorted_entries(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut entries = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<Vec<_>>>()?;
    entries.sort();
    Ok(entries)
}

fn discover(input_dir: &Path) -> std::io::Result<(Vec<String>, Vec<Candidate>)> {
    let mut regions = Vec::new();
    let mut candidates = Vec::new();
    for dir in sorted_entries(input_dir)?
        .into_iter()
        .filter(|p| p.is_dir())
    {
        let Some(region) = dir.file_name().and_then(|n| n.to_str()).map(str::to_string) else {
            continue;
        };
        let files: Vec<_> = sorted_entries(&dir)?
            .into_iter()
            .filter(|p| is_image_file(p))
            .collect();
        if files.is_empty() {
            continue;
        }
        for path in files {
            let image_id = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_string();
            candidates.push(Candidate {
                region: region.clone(),
                image_id,
                path,
            });
        }
        regions.push(region);
    }
    Ok((regions, candidates))
}

fn worker_pool() -> rayon::ThreadPool {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse::<usize>().unwrap_or_else(|_| {
            eprintln!("warning: ignoring {THREADS_ENV}={v:?} (not a number)");
            0
        }),
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
}

fn encode_png(img: image::DynamicImage) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    img.write_to(&mut Cursor::new(&mut bytes), image::ImageFormat::Png)
        .map_err(|e| Error::Encode(e.to_string()))?;
    Ok(bytes)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    stage_file(dir, bytes)?
        .persist(path)
        .map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn dump_mask(dir: &Path, id: &str, kind: &str, mask: &BinaryMask) -> Result<()> {
    let bytes = encode_png(image::DynamicImage::ImageLuma8(mask.to_image()))?;
    write_atomic(&dir.join(format!("{id}_{kind}.png")), &bytes)
}

fn analyze_one(
    c: &Candidate,
    cfg: &RunConfig,
    masks_dir: Option<&Path>,
) -> std::result::Result<Outcome, Error> {
    let image = match load_image(&c.path) {
        Ok(img) => img,
        Err(e) => return Ok(Outcome::Skipped(format!("{}: {e}", c.path.display()))),
    };
    let (report, masks) =
        match quantify_image_with_masks(&image, &c.image_id, &cfg.segmentation, &cfg.calibration) {
            Ok(r) => r,
            Err(e @ Error::ImageTooSmall { .. }) => {
                return Ok(Outcome::Skipped(format!("{}: {e}", c.path.display())))
            }
            Err(e) => return Err(e),
        };
    if let Some(root) = masks_dir {
        let dir = root.join(&c.region);
        fs::create_dir_all(&dir)?;
        dump_mask(&dir, &c.image_id, "green", &masks.green)?;
        dump_mask(&dir, &c.image_id, "defect", &masks.defect)?;
    }
    Ok(Outcome::Analyzed(RegionImage {
        region: c.region.clone(),
        report,
    }))
}

/// Runs the full pipeline over `<input_dir>/<region>/*.{png,jpg,jpeg}`.
pub fn cmd_analyze(opts: &AnalyzeOptions) -> i32 {
    let mut cfg = match &opts.config_path {
        Some(path) => match RunConfig::load(path) {
            Ok(cfg) => cfg,
            Err(e) => {
                eprintln!("error: config {}: {e}", path.display());
                return EXIT_CONFIG;
            }
        },
        None => RunConfig::default(),
    };
    if let Some(q) = opts.min_quality {
        cfg.segmentation.quality_min = q;
        if let Err(e) = cfg.segmentation.validate() {
            eprintln!("error: --min-quality: {e}");
            return EXIT_CONFIG;
        }
    }

    let (regions, candidates) = match discover(&opts.input_dir) {
        Ok(found) => found,
        Err(e) => {
            eprintln!("error: cannot scan {}: {e}", opts.input_dir.display());
            return EXIT_IO;
        }
    };
    if candidates.is_empty() {
        eprintln!(
            "error: no region subdirectories with PNG/JPEG images under {}",
            opts.input_dir.display()
        );
        return EXIT_EMPTY_INPUT;
    }
    eprintln!(
        "analyzing {} images across {} regions",
        candidates.len(),
        regions.len()
    );

    if let Err(e) = fs::create_dir_all(&opts.out_dir) {
        eprintln!("error: cannot create {}: {e}", opts.out_dir.display());
        return EXIT_IO;
    }
    let masks_dir = opts.dump_masks.then(|| opts.out_dir.join("masks"));

    let outcomes: std::result::Result<Vec<Outcome>, Error> = worker_pool().install(|| {
        candidates
            .par_iter()
            .map(|c| analyze_one(c, &cfg, masks_dir.as_deref()))
            .collect()
    });
    let outcomes = match outcomes {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_IO;
        }
    };

    let mut set = ReportSet::default();
    let mut analyzed = Vec::new();
    for outcome in outcomes {
        match outcome {
            Outcome::Analyzed(img) => analyzed.push(img),
            Outcome::Skipped(msg) => {
                eprintln!("skipped: {msg}");
                set.skipped.push(msg);
            }
        }
    }

    let scored: Vec<(usize, f64)> = analyzed
        .iter()
        .enumerate()
        .map(|(i, img)| (i, img.report.quality))
        .collect();
    let keep = select_images(&scored, &cfg.segmentation);
    let mut keep_flags = vec![false; analyzed.len()];
    for i in keep {
        keep_flags[i] = true;
    }
    for (img, kept) in analyzed.into_iter().zip(keep_flags) {
        if kept {
            set.images.push(img);
        } else {
            eprintln!(
                "screened out: {}/{} (quality {:.2} < {})",
                img.region, img.report.image_id, img.report.quality, cfg.segmentation.quality_min
            );
            set.screened_out
                .push(format!("{}/{}", img.region, img.report.image_id));
        }
    }

    let mut by_region: BTreeMap<&str, Vec<ImageReport>> =
        regions.iter().map(|r| (r.as_str(), Vec::new())).collect();
    for img in &set.images {
        if let Some(v) = by_region.get_mut(img.region.as_str()) {
            v.push(img.report.clone());
        }
    }
    set.regions = by_region
        .iter()
        .map(|(region, reports)| aggregate_region(region, reports))
        .collect();
    set.sort();

    match set.write(&opts.out_dir) {
        Ok(paths) => {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: writing reports: {e}");
            EXIT_IO
        }
    }
}

fn synth_files(out_dir: &Path, count: u64, seed: u64) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut truth = BTreeMap::new();
    let mut staged = Vec::new();
    for i in 0..count {
        let spec = default_spec(seed.wrapping_add(i));
        let (image, gt): (_, GroundTruth) = generate_scene(&spec)?;
        let id = format!("scene_{i}");
        let bytes = encode_png(image::DynamicImage::ImageRgb8(image.to_image()))?;
        staged.push((format!("{id}.png"), stage_file(out_dir, &bytes)?));
        truth.insert(id, gt);
    }
    let mut json = serde_json::to_vec_pretty(&truth)?;
    json.push(b'\n');
    staged.push((TRUTH_JSON.to_string(), stage_file(out_dir, &json)?));

    let mut paths = Vec::with_capacity(staged.len());
    for (name, tmp) in staged {
        let path = out_dir.join(name);
        tmp.persist(&path).map_err(|e| Error::Io(e.error))?;
        paths.push(path);
    }
    Ok(paths)
}

/// Writes `scene_<i>.png` from `default_spec(seed + i)` plus `truth.json`.
pub fn cmd_synth(out_dir: &Path, count: u64, seed: u64) -> i32 {
    match synth_files(out_dir, count, seed) {
        Ok(paths) => {
            eprintln!("wrote {} files to {}", paths.len(), out_dir.display());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_IO
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_takes_defaults() {
        assert_eq!(RunConfig::from_json("{}").unwrap(), RunConfig::default());
        let cfg = RunConfig::from_json(r#"{"segmentation": {"gray_lo": 40}}"#).unwrap();
        assert_eq!(cfg.segmentation.gray_lo, 40);
        assert_eq!(cfg.segmentation.gray_hi, 160);
    }

    #[test]
    fn unknown_field_is_named() {
        let err = RunConfig::from_json(r#"{"segmentation": {"hue_low": 40}}"#).unwrap_err();
        match err {
            Error::InvalidConfig { field, .. } => assert_eq!(field, "hue_low"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_value_is_named() {
        let err = RunConfig::from_json(r#"{"calibration": {"altitude_mm": -1}}"#).unwrap_err();
        assert!(err.to_string().contains("calibration.altitude_mm"), "{err}");
        let err = RunConfig::from_json(r#"{"segmentation": {"sat_min": "x"}}"#).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig { .. }));
    }
}
