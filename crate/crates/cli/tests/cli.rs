#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use evsim_core::io;
use serde_json::Value;

fn evsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evsim"))
        .args(args)
        .output()
        .expect("run evsim")
}

fn ok(args: &[&str]) -> Output {
    let out = evsim(args);
    assert!(
        out.status.success(),
        "evsim {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn evsf_count(dir: &Path) -> usize {
    fs::read_dir(dir)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "evsf"))
        .count()
}

fn synth_blob(dir: &Path, name: &str, seed: &str) -> PathBuf {
    let out = dir.join(name);
    ok(&[
        "synth", "--scene", "moving_blob", "--frames", "20", "--width", "24", "--height", "24",
        "--seed", seed, "--out", p(&out),
    ]);
    out
}

#[test]
fn synth_writes_clean_noisy_and_oracle() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ramp");
    ok(&["synth", "--scene", "ramp", "--frames", "10", "--width", "16", "--height", "8", "--out", p(&out)]);
    assert_eq!(evsf_count(&out.join("clean")), 10);
    assert_eq!(evsf_count(&out.join("noisy")), 10);
    assert!(out.join("oracle.csv").exists());
    let prov = read_json(&out.join("provenance.json"));
    assert_eq!(prov["command"]["synth"]["frames"], 10);
    assert_eq!(prov["command"]["synth"]["spp"], 32);
    let manifest = read_json(&out.join("noisy/manifest.json"));
    assert_eq!(manifest["spp"], 32);
    assert_eq!(manifest["frames"].as_array().unwrap().len(), 10);
}

#[test]
fn synth_is_byte_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let a = synth_blob(tmp.path(), "a", "5");
    let b = synth_blob(tmp.path(), "b", "5");
    for rel in ["noisy/frame_00007.evsf", "clean/manifest.json", "oracle.csv", "oracle.meta.json", "scene.json"] {
        assert_eq!(fs::read(a.join(rel)).unwrap(), fs::read(b.join(rel)).unwrap(), "{rel}");
    }
    let c = synth_blob(tmp.path(), "c", "6");
    assert_ne!(
        fs::read(a.join("noisy/frame_00007.evsf")).unwrap(),
        fs::read(c.join("noisy/frame_00007.evsf")).unwrap()
    );
}

#[test]
fn unknown_scene_and_method_are_usage_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let out = evsim(&["synth", "--scene", "teapot", "--out", p(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    let out = evsim(&["detect", "--method", "magic", "--in", p(tmp.path()), "--out", "x.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_input_is_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = evsim(&["detect", "--in", p(&tmp.path().join("nope")), "--out", p(&tmp.path().join("e.csv"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope"));
}

#[test]
fn constant_clean_input_gives_empty_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let params = tmp.path().join("still.json");
    fs::write(&params, r#"{"velocity": [0.0, 0.0]}"#).unwrap();
    let out = tmp.path().join("still");
    ok(&[
        "synth", "--scene", "moving_blob", "--frames", "6", "--width", "16", "--height", "16",
        "--params", p(&params), "--out", p(&out),
    ]);
    for method in ["esim", "wlr-esim", "reduced-wlr"] {
        let events = tmp.path().join(format!("{method}.csv"));
        ok(&["detect", "--method", method, "--in", p(&out.join("clean")), "--out", p(&events)]);
        assert_eq!(fs::read_to_string(&events).unwrap(), "t,x,y,p\n", "{method}");
    }
}

#[test]
fn detect_stats_and_thread_independence() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth_blob(tmp.path(), "blob", "1");
    let mut csvs = Vec::new();
    for threads in ["1", "3", "1"] {
        let events = tmp.path().join(format!("ev{}.csv", csvs.len()));
        ok(&["--threads", threads, "detect", "--in", p(&data.join("noisy")), "--out", p(&events)]);
        csvs.push(fs::read(&events).unwrap());
        let stats = read_json(&events.with_extension("stats.json"));
        for key in ["frames", "pixels", "solves", "events_pos", "events_neg", "wall_seconds", "solve_fraction"] {
            assert!(stats.get(key).is_some(), "missing {key}");
        }
        assert_eq!(stats["frames"], 20);
    }
    assert_eq!(csvs[0], csvs[1]);
    assert_eq!(csvs[0], csvs[2]);
}

#[test]
fn eval_self_comparison_and_curve() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth_blob(tmp.path(), "blob", "2");
    let oracle = data.join("oracle.csv");
    let report = tmp.path().join("self.json");
    let curve = tmp.path().join("curve.csv");
    ok(&["eval", "--ref", p(&oracle), "--test", p(&oracle), "--out", p(&report), "--curve", p(&curve)]);
    let r = read_json(&report);
    assert_eq!((r["precision"].as_f64(), r["recall"].as_f64()), (Some(1.0), Some(1.0)));
    assert_eq!((r["f1"].as_f64(), r["chamfer"].as_f64()), (Some(1.0), Some(0.0)));
    let text = fs::read_to_string(&curve).unwrap();
    assert!(text.starts_with("tau,precision,recall,f1\n"));
    assert_eq!(text.lines().count(), 11);

    let bad = evsim(&[
        "eval", "--ref", p(&oracle), "--test", p(&oracle), "--curve", p(&curve), "--taus", "0.01,0.001",
    ]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn eval_rejects_mismatched_metadata() {
    let tmp = tempfile::tempdir().unwrap();
    let a = synth_blob(tmp.path(), "a", "1");
    let b = tmp.path().join("b");
    ok(&["synth", "--scene", "moving_blob", "--frames", "20", "--width", "20", "--height", "24", "--out", p(&b)]);
    let out = evsim(&["eval", "--ref", p(&a.join("oracle.csv")), "--test", p(&b.join("oracle.csv"))]);
    assert_eq!(out.status.code(), Some(2));
}

/// The F1 of reduced-WLR against the oracle on this seeded fixture, as
/// computed by the brute-force pairwise oracle when the fixture was created.
const GOLDEN_F1: f64 = 0.7497206703910614;

#[test]
fn eval_matches_golden_and_brute_force() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth_blob(tmp.path(), "blob", "7");
    let events = tmp.path().join("reduced.csv");
    ok(&["detect", "--in", p(&data.join("noisy")), "--out", p(&events)]);
    let report = tmp.path().join("report.json");
    ok(&["eval", "--ref", p(&data.join("oracle.csv")), "--test", p(&events), "--out", p(&report)]);
    let f1 = read_json(&report)["f1"].as_f64().unwrap();

    let detected = io::read_events(&events).unwrap();
    let reference = io::read_events(&data.join("oracle.csv")).unwrap();
    let brute = common::brute_metrics(&detected, &reference, evsim_core::DEFAULT_TAU);
    assert!((f1 - brute.f1).abs() <= 1e-12, "cli {f1} vs brute {}", brute.f1);
    assert!((f1 - GOLDEN_F1).abs() <= 1e-12, "cli {f1} vs golden {GOLDEN_F1}");
}

fn write_events_csv(path: &Path, rows: &str) {
    fs::write(path, format!("t,x,y,p\n{rows}")).unwrap();
    fs::write(
        io::meta_path(path),
        r#"{"width": 4, "height": 3, "duration": 0.3, "frame_count": 4, "dt": 0.1}"#,
    )
    .unwrap();
}

fn load_png(path: &Path) -> image::RgbImage {
    image::open(path).unwrap().to_rgb8()
}

#[test]
fn render_colors_and_tie_rule() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty.csv");
    write_events_csv(&empty, "");
    let out = tmp.path().join("empty_png");
    ok(&["render", "--events", p(&empty), "--out", p(&out)]);
    for i in 0..4 {
        let img = load_png(&out.join(format!("bin_{i:05}.png")));
        assert_eq!(img.dimensions(), (4, 3));
        assert!(img.pixels().all(|px| px.0 == [255, 255, 255]));
    }

    let single = tmp.path().join("single.csv");
    write_events_csv(&single, "0.2,1,2,1\n");
    let out = tmp.path().join("single_png");
    ok(&["render", "--events", p(&single), "--out", p(&out)]);
    let img = load_png(&out.join("bin_00002.png"));
    let red: Vec<_> = img.enumerate_pixels().filter(|(_, _, px)| px.0 == [255, 0, 0]).map(|(x, y, _)| (x, y)).collect();
    assert_eq!(red, vec![(1, 2)]);
    assert!(load_png(&out.join("bin_00001.png")).pixels().all(|px| px.0 == [255, 255, 255]));

    let tie = tmp.path().join("tie.csv");
    write_events_csv(&tie, "0.1,0,0,1\n0.12,0,0,-1\n0.1,3,0,-1\n0.1,3,0,1\n");
    let out = tmp.path().join("tie_png");
    ok(&["render", "--events", p(&tie), "--out", p(&out)]);
    let img = load_png(&out.join("bin_00001.png"));
    assert_eq!(img.get_pixel(0, 0).0, [0, 0, 255]);
    assert_eq!(img.get_pixel(3, 0).0, [255, 0, 0]);
}

#[test]
fn render_without_metadata_needs_dimensions() {
    let tmp = tempfile::tempdir().unwrap();
    let bare = tmp.path().join("bare.csv");
    fs::write(&bare, "t,x,y,p\n0.05,1,1,-1\n").unwrap();
    let out = evsim(&["render", "--events", p(&bare), "--out", p(&tmp.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
    ok(&[
        "render", "--events", p(&bare), "--width", "2", "--height", "2", "--fps", "10", "--out",
        p(&tmp.path().join("o")),
    ]);
    assert_eq!(load_png(&tmp.path().join("o/bin_00000.png")).get_pixel(1, 1).0, [0, 0, 255]);
}

#[test]
fn sweep_writes_one_row_per_combination() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth_blob(tmp.path(), "blob", "3");
    let table = tmp.path().join("sweep.csv");
    ok(&[
        "sweep", "--in", p(&data), "--methods", "esim,reduced-wlr", "--c", "0.5,1.0", "--spp", "16,64", "--out",
        p(&table),
    ]);
    let text = fs::read_to_string(&table).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "spp,method,contrast,events,precision,recall,f1,chamfer,solves,solve_fraction");
    assert_eq!(lines.len(), 1 + 2 * 2 * 2);
    assert!(table.with_extension("provenance.json").exists());
}
