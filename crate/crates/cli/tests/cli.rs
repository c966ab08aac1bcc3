use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fg_core::raster::write_raw;
use fg_core::segment::{write_prediction, Prediction};
use fg_core::synth::CorpusManifest;
use fg_core::{Date, GridCoord, ProbabilityMask, Satellite};

fn fg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fg")).args(args).output().expect("spawn fg")
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stdout_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stdout);
    serde_json::from_str(text.lines().next().unwrap_or("null")).unwrap()
}

fn stderr_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.lines().next().expect("an error line")).unwrap()
}

fn small_corpus(dir: &Path) {
    let out = fg(&[
        "synth",
        "--scenes",
        "3",
        "--seed",
        "5",
        "--out-dir",
        s(dir),
        "--months",
        "2020-07,2020-08",
        "--landsat8-dates",
        "1",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn synth_catalog_counts_agree() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    small_corpus(&corpus);
    let manifest = CorpusManifest::read(corpus.join("manifest.json")).unwrap();
    assert_eq!(manifest.scenes.len(), 3);
    let out = fg(&["catalog", "--data-dir", s(&corpus.join("tiles")), "--out", s(&dir.path().join("c.json"))]);
    assert!(out.status.success());
    let summary = stdout_json(&out);
    assert_eq!(summary["records"], manifest.file_count());
    assert_eq!(summary["skipped"], 0);
}

#[test]
fn zero_scenes_is_an_empty_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let out = fg(&["synth", "--scenes", "0", "--out-dir", s(dir.path())]);
    assert!(out.status.success());
    assert_eq!(stdout_json(&out)["files"], 0);
    let queries = fs::read_to_string(dir.path().join("queries.csv")).unwrap();
    assert_eq!(queries.trim(), "lat,lon,year,month");
}

#[test]
fn query_without_imagery_is_no_data_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let masks = dir.path().join("masks");
    fs::create_dir_all(&masks).unwrap();
    let p = Prediction::new(
        ProbabilityMask::filled(256, 256, 1.0).unwrap(),
        Satellite::Sentinel2,
        Date::new(2020, 8, 3).unwrap(),
        GridCoord::longitude("-54.80").unwrap(),
        GridCoord::latitude("-3.67").unwrap(),
        "fixture",
        0.5,
    );
    write_prediction(&p, &masks, "a").unwrap();
    let queries = dir.path().join("q.csv");
    fs::write(&queries, "lat,lon,year,month\n-3.67,-54.80,2020,8\n-3.67,-54.80,2020,9\n").unwrap();
    let fused = dir.path().join("fused");
    let out = fg(&["fuse", "--masks", s(&masks), "--queries", s(&queries), "--out-dir", s(&fused)]);
    assert_eq!(out.status.code(), Some(2));
    let summary = stdout_json(&out);
    assert_eq!(summary["no_data"][0], "-54.80_-3.67_2020_09");
    assert_eq!(summary["written"][0], "deforestation_-54.80_-3.67_2020_08.png");
    assert!(fused.join("deforestation_-54.80_-3.67_2020_08.json").exists());
    assert!(fused.join("summary.json").exists());
}

#[test]
fn evaluate_against_itself_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    small_corpus(&corpus);
    let tiles = corpus.join("tiles");
    let report = dir.path().join("report.json");
    let out = fg(&["evaluate", "--pred", s(&tiles), "--truth", s(&tiles), "--out", s(&report)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    assert_eq!(v["queries"].as_array().unwrap().len(), 6);
    for key in ["pixel_accuracy", "f1", "iou"] {
        assert_eq!(v["aggregate"][key], 1.0);
    }
}

#[test]
fn full_chain_on_a_small_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name);
    small_corpus(&d("corpus"));
    assert!(fg(&["catalog", "--data-dir", s(&d("corpus")), "--out", s(&d("catalog.json"))]).status.success());
    let out = fg(&["preprocess", "--catalog", s(&d("catalog.json")), "--out-dir", s(&d("stacks"))]);
    assert!(out.status.success());
    // per scene and month: 1 SAR, 2 Sentinel-2, 1 Landsat 8, maybe 1 outlier
    let stacks = stdout_json(&out)["written"].as_array().unwrap().len();
    assert!((24..=30).contains(&stacks), "{stacks}");

    let out = fg(&["predict", "--method", "index", "--stacks", s(&d("stacks")), "--out-dir", s(&d("masks"))]);
    assert!(out.status.success());
    let summary = stdout_json(&out);
    assert_eq!(summary["skipped"].as_array().unwrap().len(), 6, "SAR stacks are skipped");
    assert_eq!(summary["written"].as_array().unwrap().len(), stacks - 6);

    let out = fg(&[
        "fuse",
        "--masks",
        s(&d("masks")),
        "--queries",
        s(&d("corpus/queries.csv")),
        "--out-dir",
        s(&d("fused")),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let out = fg(&["evaluate", "--pred", s(&d("fused")), "--truth", s(&d("corpus")), "--out", s(&d("r.json"))]);
    assert!(out.status.success());
    assert!(stdout_json(&out)["iou"].as_f64().unwrap() > 0.8);
}

#[test]
fn import_accepts_valid_masks_and_reports_bad_ones() {
    let dir = tempfile::tempdir().unwrap();
    let ext = dir.path().join("ext");
    fs::create_dir_all(&ext).unwrap();
    let p = Prediction::new(
        ProbabilityMask::filled(256, 256, 0.25).unwrap(),
        Satellite::Sentinel1,
        Date::new(2021, 2, 9).unwrap(),
        GridCoord::longitude("-55.00").unwrap(),
        GridCoord::latitude("-4.00").unwrap(),
        "unet",
        0.5,
    );
    write_prediction(&p, &ext, "good").unwrap();
    write_raw(&ProbabilityMask::filled(256, 256, 0.5).unwrap(), ext.join("orphan.fgpm")).unwrap();
    let out_dir = dir.path().join("masks");
    let out = fg(&["predict", "--method", "import", "--masks-dir", s(&ext), "--out-dir", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(2));
    let summary = stdout_json(&out);
    assert_eq!(summary["written"][0], "good.fgpm");
    assert_eq!(summary["failed"][0]["item"], "orphan.fgpm");
    assert_eq!(stderr_json(&out)["error"], "io");
    assert_eq!(fs::read(ext.join("good.fgpm")).unwrap(), fs::read(out_dir.join("good.fgpm")).unwrap());
}

#[test]
fn malformed_config_is_a_machine_readable_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"fusion": {"k1": 3, "unknown": 1}}"#).unwrap();
    let out = fg(&["catalog", "--data-dir", s(dir.path()), "--out", s(&dir.path().join("c.json")), "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "json");
    assert!(err["message"].as_str().unwrap().contains("unknown"));
}

#[test]
fn missing_inputs_fail() {
    let dir = tempfile::tempdir().unwrap();
    let out = fg(&["catalog", "--data-dir", s(&dir.path().join("nope")), "--out", s(&dir.path().join("c.json"))]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "io");
    assert!(!fg(&["predict", "--method", "index", "--out-dir", "x"]).status.success());
    assert!(!fg(&["fuse"]).status.success());
}
