//! C ABI over `leafquant`.
//!
//! Images and configurations cross the boundary as opaque handles created by
//! `lq_*_new`/`lq_*_load` style constructors and released with the matching
//! `lq_*_free`. Every fallible call returns an [`LqStatus`]; on failure the
//! message is available from [`lq_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use leafquant::cli::RunConfig;
use leafquant::{
    aggregate_region, area_per_pixel, default_spec, generate_scene, load_image, quantify_image,
    Error, ImageReport, RgbImage,
};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    FileUnreadable = 3,
    UnsupportedFormat = 4,
    CorruptImage = 5,
    DimensionMismatch = 6,
    ImageTooSmall = 7,
    InvalidConfig = 8,
    SpecInvalid = 9,
    Io = 10,
    Panic = 99,
}

impl From<&Error> for LqStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::FileUnreadable { .. } => LqStatus::FileUnreadable,
            Error::UnsupportedFormat { .. } => LqStatus::UnsupportedFormat,
            Error::CorruptImage { .. } => LqStatus::CorruptImage,
            Error::InvalidRaster(_) => LqStatus::InvalidArgument,
            Error::DimensionMismatch { .. } => LqStatus::DimensionMismatch,
            Error::ImageTooSmall { .. } => LqStatus::ImageTooSmall,
            Error::InvalidConfig { .. } => LqStatus::InvalidConfig,
            Error::SpecInvalid(_) => LqStatus::SpecInvalid,
            _ => LqStatus::Io,
        }
    }
}

/// Opaque 8-bit RGB image.
pub struct LqImage {
    inner: RgbImage,
}

/// Opaque run configuration (segmentation thresholds and calibration).
pub struct LqConfig {
    inner: RunConfig,
}

/// Per-image result. The caller keeps track of which image it belongs to.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LqImageReport {
    pub quality: f64,
    pub green_px: u64,
    pub defect_px: u64,
    pub leaf_px: u64,
    pub leaf_area_mm2: f64,
    pub defect_area_mm2: f64,
    pub percent_defect: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LqRegionReport {
    pub n_images: u64,
    pub total_leaf_area_mm2: f64,
    pub total_defect_area_mm2: f64,
    pub percent_defect: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LqGroundTruth {
    pub green_px: u64,
    pub defect_px: u64,
}

impl From<&ImageReport> for LqImageReport {
    fn from(r: &ImageReport) -> Self {
        Self {
            quality: r.quality,
            green_px: r.green_px,
            defect_px: r.defect_px,
            leaf_px: r.leaf_px,
            leaf_area_mm2: r.leaf_area_mm2,
            defect_area_mm2: r.defect_area_mm2,
            percent_defect: r.percent_defect,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|cell| {
        *cell.borrow_mut() = CString::new(msg).expect("interior NULs removed");
    });
}

fn fail(status: LqStatus, msg: impl Into<String>) -> LqStatus {
    set_last_error(msg);
    status
}

fn fail_with(e: Error) -> LqStatus {
    fail(LqStatus::from(&e), e.to_string())
}

/// Runs `f`, turning panics into [`LqStatus::Panic`].
fn guarded(f: impl FnOnce() -> LqStatus) -> LqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => {
            if status == LqStatus::Ok {
                set_last_error("");
            }
            status
        }
        Err(_) => fail(LqStatus::Panic, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, LqStatus> {
    if p.is_null() {
        return Err(fail(LqStatus::NullPointer, format!("{what} is NULL")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        fail(
            LqStatus::InvalidArgument,
            format!("{what} is not valid UTF-8"),
        )
    })
}

/// Message for the most recent failure on this thread (empty after success).
///
/// The pointer stays valid until the next `lq_*` call on the same thread.
#[no_mangle]
pub extern "C" fn lq_last_error_message() -> *const c_char {
    LAST_ERROR.with(|cell| cell.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a configuration with every default.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn lq_config_new_default(out: *mut *mut LqConfig) -> LqStatus {
    guarded(|| {
        if out.is_null() {
            return fail(LqStatus::NullPointer, "out is NULL");
        }
        *out = Box::into_raw(Box::new(LqConfig {
            inner: RunConfig::default(),
        }));
        LqStatus::Ok
    })
}

/// Parses a JSON configuration with optional `segmentation` and
/// `calibration` sections.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lq_config_from_json(
    json: *const c_char,
    out: *mut *mut LqConfig,
) -> LqStatus {
    guarded(|| {
        if out.is_null() {
            return fail(LqStatus::NullPointer, "out is NULL");
        }
        let text = match str_arg(json, "json") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match RunConfig::from_json(text) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(LqConfig { inner }));
                LqStatus::Ok
            }
            Err(e) => fail_with(e),
        }
    })
}

/// # Safety
/// `config` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lq_config_free(config: *mut LqConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// mm² per pixel under the configuration's calibration.
///
/// # Safety
/// `config` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lq_config_area_per_pixel(
    config: *const LqConfig,
    out: *mut f64,
) -> LqStatus {
    guarded(|| {
        if config.is_null() || out.is_null() {
            return fail(LqStatus::NullPointer, "config or out is NULL");
        }
        *out = area_per_pixel(&(*config).inner.calibration);
        LqStatus::Ok
    })
}

/// Decodes a PNG or JPEG file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lq_image_load(path: *const c_char, out: *mut *mut LqImage) -> LqStatus {
    guarded(|| {
        if out.is_null() {
            return fail(LqStatus::NullPointer, "out is NULL");
        }
        let path = match str_arg(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        match load_image(path) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(LqImage { inner }));
                LqStatus::Ok
            }
            Err(e) => fail_with(e),
        }
    })
}

/// Copies `len` bytes of interleaved row-major RGB into a new image.
///
/// # Safety
/// `data` must point to at least `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lq_image_from_rgb(
    width: u32,
    height: u32,
    data: *const u8,
    len: usize,
    out: *mut *mut LqImage,
) -> LqStatus {
    guarded(|| {
        if data.is_null() || out.is_null() {
            return fail(LqStatus::NullPointer, "data or out is NULL");
        }
        let bytes = std::slice::from_raw_parts(data, len);
        match RgbImage::from_interleaved(width, height, bytes) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(LqImage { inner }));
                LqStatus::Ok
            }
            Err(e) => fail_with(e),
        }
    })
}

/// # Safety
/// `image` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lq_image_free(image: *mut LqImage) {
    if !image.is_null() {
        drop(Box::from_raw(image));
    }
}

/// Width in pixels, 0 for NULL.
///
/// # Safety
/// `image` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lq_image_width(image: *const LqImage) -> u32 {
    image.as_ref().map_or(0, |i| i.inner.width())
}

/// Height in pixels, 0 for NULL.
///
/// # Safety
/// `image` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lq_image_height(image: *const LqImage) -> u32 {
    image.as_ref().map_or(0, |i| i.inner.height())
}

/// Runs the full per-image pipeline. A NULL `config` uses the defaults.
///
/// # Safety
/// `image` must be a live handle, `config` NULL or live, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lq_quantify(
    image: *const LqImage,
    config: *const LqConfig,
    out: *mut LqImageReport,
) -> LqStatus {
    guarded(|| {
        if image.is_null() || out.is_null() {
            return fail(LqStatus::NullPointer, "image or out is NULL");
        }
        let default_cfg;
        let cfg = match config.as_ref() {
            Some(c) => &c.inner,
            None => {
                default_cfg = RunConfig::default();
                &default_cfg
            }
        };
        match quantify_image(&(*image).inner, "", &cfg.segmentation, &cfg.calibration) {
            Ok(report) => {
                *out = LqImageReport::from(&report);
                LqStatus::Ok
            }
            Err(e) => fail_with(e),
        }
    })
}

/// Area-weighted aggregation of `n` image reports.
///
/// # Safety
/// `reports` must point to `n` readable reports (may be NULL when `n == 0`);
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lq_aggregate(
    reports: *const LqImageReport,
    n: usize,
    out: *mut LqRegionReport,
) -> LqStatus {
    guarded(|| {
        if out.is_null() || (reports.is_null() && n > 0) {
            return fail(LqStatus::NullPointer, "reports or out is NULL");
        }
        let slice = if n == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(reports, n)
        };
        let owned: Vec<ImageReport> = slice
            .iter()
            .map(|r| ImageReport {
                image_id: String::new(),
                quality: r.quality,
                green_px: r.green_px,
                defect_px: r.defect_px,
                leaf_px: r.leaf_px,
                leaf_area_mm2: r.leaf_area_mm2,
                defect_area_mm2: r.defect_area_mm2,
                percent_defect: r.percent_defect,
            })
            .collect();
        let region = aggregate_region("", &owned);
        *out = LqRegionReport {
            n_images: region.n_images,
            total_leaf_area_mm2: region.total_leaf_area_mm2,
            total_defect_area_mm2: region.total_defect_area_mm2,
            percent_defect: region.percent_defect,
        };
        LqStatus::Ok
    })
}

/// Renders the default synthetic scene for `seed` and its ground truth.
///
/// # Safety
/// `out_image` must be writable; `out_truth` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn lq_synth_scene(
    seed: u64,
    out_image: *mut *mut LqImage,
    out_truth: *mut LqGroundTruth,
) -> LqStatus {
    guarded(|| {
        if out_image.is_null() {
            return fail(LqStatus::NullPointer, "out_image is NULL");
        }
        *out_image = ptr::null_mut();
        match generate_scene(&default_spec(seed)) {
            Ok((inner, truth)) => {
                if let Some(t) = out_truth.as_mut() {
                    *t = LqGroundTruth {
                        green_px: truth.green_px,
                        defect_px: truth.defect_px,
                    };
                }
                *out_image = Box::into_raw(Box::new(LqImage { inner }));
                LqStatus::Ok
            }
            Err(e) => fail_with(e),
        }
    })
}
