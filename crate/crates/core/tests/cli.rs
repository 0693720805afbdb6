use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use leafquant::quantify::{aggregate_region, write_reports, ImageReport, RegionImage};
use leafquant::GroundTruth;

fn leafquant() -> Command {
    Command::new(env!("CARGO_BIN_EXE_leafquant"))
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn leafquant");
    if !out.status.success() {
        eprintln!("{}", String::from_utf8_lossy(&out.stderr));
    }
    out
}

fn synth(out: &Path, count: u64, seed: u64) -> Output {
    run(leafquant().arg("synth").arg("--out").arg(out).args([
        "--count",
        &count.to_string(),
        "--seed",
        &seed.to_string(),
    ]))
}

fn analyze(input: &Path, out: &Path, extra: &[&str]) -> Output {
    run(leafquant()
        .arg("analyze")
        .arg(input)
        .arg("--out")
        .arg(out)
        .args(extra))
}

fn read_truth(dir: &Path) -> BTreeMap<String, GroundTruth> {
    serde_json::from_str(&fs::read_to_string(dir.join("truth.json")).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<BTreeMap<String, String>> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let headers = reader.headers().unwrap().clone();
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            headers
                .iter()
                .map(str::to_string)
                .zip(r.iter().map(str::to_string))
                .collect()
        })
        .collect()
}

/// Moves synth scenes into `<root>/<region>/` following `assignment`.
fn build_tree(synth_dir: &Path, root: &Path, assignment: &[(&str, &[usize])]) {
    for (region, scenes) in assignment {
        let dir = root.join(region);
        fs::create_dir_all(&dir).unwrap();
        for i in *scenes {
            let name = format!("scene_{i}.png");
            fs::copy(synth_dir.join(&name), dir.join(&name)).unwrap();
        }
    }
}

#[test]
fn synth_writes_scenes_and_truth() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(synth(&a, 5, 7).status.success());
    assert!(synth(&b, 5, 7).status.success());

    let truth = read_truth(&a);
    assert_eq!(truth.len(), 5);
    for i in 0..5 {
        let name = format!("scene_{i}.png");
        assert_eq!(
            fs::read(a.join(&name)).unwrap(),
            fs::read(b.join(&name)).unwrap()
        );
    }
    assert_eq!(
        fs::read(a.join("truth.json")).unwrap(),
        fs::read(b.join("truth.json")).unwrap()
    );

    // no temporaries left behind
    let names: Vec<_> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert!(
        names.iter().all(|n| !n.starts_with(".leafquant-")),
        "{names:?}"
    );
    assert_eq!(names.len(), 6);
}

#[test]
fn synth_zero_count() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("empty");
    assert!(synth(&out, 0, 1).status.success());
    assert!(read_truth(&out).is_empty());
}

#[test]
fn analyze_empty_tree_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    fs::create_dir_all(input.join("region_without_images")).unwrap();
    let out = analyze(&input, &tmp.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!tmp.path().join("out").join("images.csv").exists());
}

#[test]
fn analyze_bad_config_exits_2_naming_field() {
    let tmp = tempfile::tempdir().unwrap();
    let synth_dir = tmp.path().join("synth");
    synth(&synth_dir, 1, 0);
    let input = tmp.path().join("in");
    build_tree(&synth_dir, &input, &[("r1", &[0])]);

    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"segmentation": {"sat_minimum": 0.3}}"#).unwrap();
    let out = analyze(
        &input,
        &tmp.path().join("out"),
        &["--config", cfg.to_str().unwrap()],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sat_minimum"));

    fs::write(&cfg, r#"{"calibration": {"focal_length_mm": 0}}"#).unwrap();
    let out = analyze(
        &input,
        &tmp.path().join("out"),
        &["--config", cfg.to_str().unwrap()],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("calibration.focal_length_mm"));

    let missing = tmp.path().join("nope.json");
    let out = analyze(
        &input,
        &tmp.path().join("out"),
        &["--config", missing.to_str().unwrap()],
    );
    assert_eq!(out.status.code(), Some(2));

    let out = analyze(&input, &tmp.path().join("out"), &["--min-quality", "-1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_input_dir_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let out = analyze(&tmp.path().join("absent"), &tmp.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn end_to_end_counts_match_truth() {
    let tmp = tempfile::tempdir().unwrap();
    let synth_dir = tmp.path().join("synth");
    assert!(synth(&synth_dir, 6, 11).status.success());
    let truth = read_truth(&synth_dir);

    let input = tmp.path().join("in");
    build_tree(
        &synth_dir,
        &input,
        &[("vedururu", &[0, 1, 2]), ("vallur", &[3, 4, 5])],
    );
    let out_dir = tmp.path().join("out");
    let out = analyze(&input, &out_dir, &[]);
    assert_eq!(out.status.code(), Some(0));

    let images = csv_rows(&out_dir.join("images.csv"));
    assert_eq!(images.len(), 6);
    for row in &images {
        let t = &truth[&row["image_id"]];
        assert_eq!(row["green_px"].parse::<u64>().unwrap(), t.green_px);
        assert_eq!(row["defect_px"].parse::<u64>().unwrap(), t.defect_px);
        assert_eq!(
            row["leaf_px"].parse::<u64>().unwrap(),
            t.green_px + t.defect_px
        );
    }
    // sorted by (region, image_id)
    let order: Vec<_> = images.iter().map(|r| r["region"].clone()).collect();
    assert_eq!(
        order,
        ["vallur", "vallur", "vallur", "vedururu", "vedururu", "vedururu"]
    );

    let regions = csv_rows(&out_dir.join("regions.csv"));
    assert_eq!(regions.len(), 2);
    for row in &regions {
        let members: &[usize] = if row["region"] == "vedururu" {
            &[0, 1, 2]
        } else {
            &[3, 4, 5]
        };
        let (defect, leaf) = members.iter().fold((0u64, 0u64), |(d, l), i| {
            let t = &truth[&format!("scene_{i}")];
            (d + t.defect_px, l + t.green_px + t.defect_px)
        });
        let oracle = 100.0 * defect as f64 / leaf as f64;
        let got: f64 = row["percent_defect"].parse().unwrap();
        assert!((got - oracle).abs() <= 0.005 + 1e-9, "{got} vs {oracle}");
        assert_eq!(row["n_images"], "3");
    }

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["images"].as_array().unwrap().len(), 6);
    assert_eq!(report["regions"].as_array().unwrap().len(), 2);
    assert!(report["skipped"].as_array().unwrap().is_empty());
}

#[test]
fn undecodable_images_are_skipped_and_listed() {
    let tmp = tempfile::tempdir().unwrap();
    let synth_dir = tmp.path().join("synth");
    synth(&synth_dir, 1, 2);
    let input = tmp.path().join("in");
    build_tree(&synth_dir, &input, &[("r1", &[0])]);
    fs::write(input.join("r1").join("broken.png"), b"not an image").unwrap();
    fs::write(input.join("r1").join("readme.txt"), b"ignored").unwrap();

    let out_dir = tmp.path().join("out");
    let out = analyze(&input, &out_dir, &[]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("broken.png"));

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    let skipped = report["skipped"].as_array().unwrap();
    assert_eq!(skipped.len(), 1);
    assert!(skipped[0].as_str().unwrap().contains("broken.png"));
    assert_eq!(csv_rows(&out_dir.join("images.csv")).len(), 1);
}

#[test]
fn quality_floor_screens_images() {
    let tmp = tempfile::tempdir().unwrap();
    let synth_dir = tmp.path().join("synth");
    synth(&synth_dir, 2, 4);
    let input = tmp.path().join("in");
    build_tree(&synth_dir, &input, &[("r1", &[0, 1])]);

    let out_dir = tmp.path().join("out");
    let out = analyze(&input, &out_dir, &["--min-quality", "1e12"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(csv_rows(&out_dir.join("images.csv")).is_empty());
    let regions = csv_rows(&out_dir.join("regions.csv"));
    assert_eq!(regions[0]["n_images"], "0");
    assert_eq!(regions[0]["percent_defect"], "0.00");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["screened_out"].as_array().unwrap().len(), 2);
}

#[test]
fn dump_masks_match_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let synth_dir = tmp.path().join("synth");
    synth(&synth_dir, 1, 5);
    let truth = read_truth(&synth_dir)["scene_0"];
    let input = tmp.path().join("in");
    build_tree(&synth_dir, &input, &[("r1", &[0])]);

    let out_dir = tmp.path().join("out");
    assert!(analyze(&input, &out_dir, &["--dump-masks"])
        .status
        .success());
    let white = |name: &str| {
        let img = image::open(out_dir.join("masks/r1").join(name))
            .unwrap()
            .to_luma8();
        img.pixels().filter(|p| p.0[0] == 255).count() as u64
    };
    assert_eq!(white("scene_0_green.png"), truth.green_px);
    assert_eq!(white("scene_0_defect.png"), truth.defect_px);
}

#[test]
fn thread_cap_does_not_change_output() {
    let tmp = tempfile::tempdir().unwrap();
    let synth_dir = tmp.path().join("synth");
    synth(&synth_dir, 4, 21);
    let input = tmp.path().join("in");
    build_tree(&synth_dir, &input, &[("a", &[0, 1]), ("b", &[2, 3])]);

    let one = tmp.path().join("one");
    let many = tmp.path().join("many");
    assert!(run(leafquant()
        .env("LEAFQUANT_THREADS", "1")
        .arg("analyze")
        .arg(&input)
        .arg("--out")
        .arg(&one))
    .status
    .success());
    assert!(run(leafquant()
        .env("LEAFQUANT_THREADS", "0")
        .arg("analyze")
        .arg(&input)
        .arg("--out")
        .arg(&many))
    .status
    .success());
    for name in ["images.csv", "regions.csv", "report.json"] {
        assert_eq!(
            fs::read(one.join(name)).unwrap(),
            fs::read(many.join(name)).unwrap(),
            "{name}"
        );
    }
}

fn reference_regions() -> Vec<leafquant::RegionReport> {
    [
        ("Vedururu", 33, 1587.76, 275.77),
        ("Vallur", 32, 1661.37, 459.68),
        ("Gondhipalle", 33, 1740.76, 258.45),
        ("Vitlampur", 32, 1711.21, 389.94),
        ("Rughubanpalli", 33, 1842.39, 307.45),
    ]
    .into_iter()
    .map(|(name, n, leaf, defect)| {
        let mut r = aggregate_region(
            name,
            &[ImageReport {
                image_id: "total".into(),
                quality: 0.0,
                green_px: 0,
                defect_px: 0,
                leaf_px: 0,
                leaf_area_mm2: leaf,
                defect_area_mm2: defect,
                percent_defect: 100.0 * defect / leaf,
            }],
        );
        r.n_images = n;
        r
    })
    .collect()
}

#[test]
fn write_reports_reference_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let paths = write_reports(&reference_regions(), &[], tmp.path()).unwrap();
    assert_eq!(paths.len(), 3);
    let text = fs::read_to_string(tmp.path().join("regions.csv")).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(
        lines[0],
        "region,n_images,total_leaf_area_mm2,total_defect_area_mm2,percent_defect"
    );
    assert_eq!(lines.len(), 6);
    let vedururu = lines.iter().find(|l| l.starts_with("Vedururu,")).unwrap();
    assert_eq!(*vedururu, "Vedururu,33,1587.76,275.77,17.37");
    assert!(!text.contains('\r'));

    let first = fs::read(tmp.path().join("report.json")).unwrap();
    write_reports(&reference_regions(), &[], tmp.path()).unwrap();
    assert_eq!(first, fs::read(tmp.path().join("report.json")).unwrap());
    let json = String::from_utf8(first).unwrap();
    assert!(json.contains("\"percent_defect\": 17.37"), "{json}");
}

#[test]
fn write_reports_empty_is_headers_only() {
    let tmp = tempfile::tempdir().unwrap();
    write_reports(&[], &[], tmp.path()).unwrap();
    assert_eq!(
        fs::read_to_string(tmp.path().join("images.csv")).unwrap(),
        "image_id,region,quality,green_px,defect_px,leaf_px,leaf_area_mm2,defect_area_mm2,percent_defect\n"
    );
    assert_eq!(
        fs::read_to_string(tmp.path().join("regions.csv")).unwrap(),
        "region,n_images,total_leaf_area_mm2,total_defect_area_mm2,percent_defect\n"
    );
}

#[test]
fn write_reports_sorts_images() {
    let tmp = tempfile::tempdir().unwrap();
    let cal = leafquant::Calibration::default();
    let img = |region: &str, id: &str| RegionImage {
        region: region.into(),
        report: ImageReport::from_counts(id, 150.0, 90, 10, &cal),
    };
    let images = [img("b", "x"), img("a", "z"), img("a", "y")];
    write_reports(&[], &images, tmp.path()).unwrap();
    let ids: Vec<String> = csv_rows(&tmp.path().join("images.csv"))
        .into_iter()
        .map(|r| format!("{}/{}", r["region"], r["image_id"]))
        .collect();
    assert_eq!(ids, ["a/y", "a/z", "b/x"]);
}
