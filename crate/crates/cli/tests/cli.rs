//! Exercises the binary: exit codes, conversions, reports, phantoms.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bodymetrics::io::{read_depth, read_ply};
use bodymetrics::phantom::{make_humanoid, HumanoidPose};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bodymetrics"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn bodymetrics")
}

fn expect_success(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn make_phantom_cloud(dir: &Path) -> PathBuf {
    let cloud = dir.join("body.ply");
    let out = run(&[
        "phantom",
        "--shape",
        "humanoid",
        "--height",
        "1.75",
        "--seed",
        "7",
        "--cloud-out",
        path_str(&cloud),
    ]);
    expect_success(&out);
    cloud
}

#[test]
fn convert_round_trips_through_ascii() {
    let dir = TempDir::new().unwrap();
    let src = make_phantom_cloud(dir.path());
    let ascii = dir.path().join("a.ply");
    let binary = dir.path().join("b.ply");

    expect_success(&run(&[
        "convert", "--input", path_str(&src), "--output", path_str(&ascii), "--format", "ascii",
    ]));
    expect_success(&run(&[
        "convert", "--input", path_str(&ascii), "--output", path_str(&binary), "--format",
        "binary",
    ]));

    let original = read_ply(&src).unwrap();
    let round = read_ply(&binary).unwrap();
    assert_eq!(original.len(), round.len());
    for (a, b) in original.iter().zip(round.iter()) {
        assert!((*a - *b).norm() <= 1e-6);
    }
}

#[test]
fn convert_depth_to_ply_counts_in_band_pixels() {
    let dir = TempDir::new().unwrap();
    let depth = dir.path().join("frame.pgm");
    let intr = dir.path().join("intr.json");
    expect_success(&run(&[
        "phantom",
        "--seed",
        "3",
        "--depth-out",
        path_str(&depth),
        "--intrinsics-out",
        path_str(&intr),
    ]));

    let ply = dir.path().join("cloud.ply");
    expect_success(&run(&[
        "convert",
        "--input",
        path_str(&depth),
        "--intrinsics",
        path_str(&intr),
        "--output",
        path_str(&ply),
        "--band-lo",
        "1.0",
        "--band-hi",
        "1.95",
    ]));

    // pixel-count oracle: nonzero samples whose depth is in band
    let frame = read_depth(&depth, &intr).unwrap();
    let expected = frame
        .data
        .iter()
        .filter(|&&d| {
            let z = d as f64 * frame.intrinsics.depth_scale;
            d != 0 && (1.0..=1.95).contains(&z)
        })
        .count();
    let cloud = read_ply(&ply).unwrap();
    assert_eq!(cloud.len(), expected);
}

#[test]
fn missing_intrinsics_is_a_usage_error_naming_the_path() {
    let dir = TempDir::new().unwrap();
    let depth = dir.path().join("frame.pgm");
    fs::write(&depth, b"P5\n1 1\n65535\n\x00\x00").unwrap();
    let missing = dir.path().join("nope.json");
    let out = run(&[
        "convert",
        "--input",
        path_str(&depth),
        "--intrinsics",
        path_str(&missing),
        "--output",
        path_str(&dir.path().join("o.ply")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("nope.json"), "stderr: {stderr}");
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = TempDir::new().unwrap();
    let src = make_phantom_cloud(dir.path());
    let out = run(&[
        "convert",
        "--input",
        path_str(&src),
        "--output",
        "/nonexistent-dir/out.ply",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn estimate_emits_a_schema_complete_report() {
    let dir = TempDir::new().unwrap();
    let src = make_phantom_cloud(dir.path());
    let out = run(&["estimate", "--input", path_str(&src)]);
    expect_success(&out);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).expect("stdout is JSON");
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["tool"]["name"], "bodymetrics");
    assert_eq!(report["input"]["kind"], "ply");
    assert_eq!(report["input"]["sha256"].as_str().unwrap().len(), 64);
    for key in [
        "band_lo", "band_hi", "ransac", "sor_k", "sor_alpha", "voxel", "axis", "n_slabs",
        "min_slab_points", "trim", "density", "seed", "mirror",
    ] {
        assert!(
            report["config"].get(key).is_some(),
            "config echo is missing {key}"
        );
    }
    assert!(report["estimate"]["volume"].is_number());
    assert!(report["estimate"]["height"].is_number());
    assert!(report["estimate"]["weight"].is_number());
    assert!(report["stages"].as_array().unwrap().len() >= 4);
    // prose goes to stderr, json to stdout
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("height"));
}

#[test]
fn estimate_matches_phantom_ground_truth() {
    let dir = TempDir::new().unwrap();
    let cloud = dir.path().join("body.ply");
    let truth = dir.path().join("truth.json");
    expect_success(&run(&[
        "phantom",
        "--height",
        "1.75",
        "--seed",
        "11",
        "--cloud-out",
        path_str(&cloud),
        "--truth-out",
        path_str(&truth),
    ]));
    let truth: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&truth).unwrap()).unwrap();
    let gt_volume = truth["volume_m3"].as_f64().unwrap();
    let gt_height = truth["height_m"].as_f64().unwrap();

    // the ground-truth file carries the analytic sum of the scene solids
    let scene = make_humanoid(1.75, 1.0, HumanoidPose::ArmsDown).unwrap();
    assert_eq!(gt_volume, scene.ground_truth.volume);

    let out = run(&["estimate", "--input", path_str(&cloud)]);
    expect_success(&out);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let volume = report["estimate"]["volume"].as_f64().unwrap();
    let height = report["estimate"]["height"].as_f64().unwrap();
    let weight = report["estimate"]["weight"].as_f64().unwrap();
    assert!((volume - gt_volume).abs() / gt_volume < 0.05);
    assert!((height - gt_height).abs() < 0.02);
    assert!((weight - volume * 1000.0).abs() < 1e-9);
}

#[test]
fn bad_config_values_cite_the_field() {
    let dir = TempDir::new().unwrap();
    let src = make_phantom_cloud(dir.path());

    let config = dir.path().join("bad.json");
    fs::write(&config, r#"{"n_slabs": 0}"#).unwrap();
    let out = run(&[
        "estimate", "--input", path_str(&src), "--config", path_str(&config),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_slabs"));

    // unknown keys are rejected too
    fs::write(&config, r#"{"slab_count": 10}"#).unwrap();
    let out = run(&[
        "estimate", "--input", path_str(&src), "--config", path_str(&config),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("slab_count"));

    // and flags are validated the same way
    let out = run(&["estimate", "--input", path_str(&src), "--trim", "0.9"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("trim"));
}

#[test]
fn pipeline_failures_exit_4_and_name_the_stage() {
    let dir = TempDir::new().unwrap();
    let src = make_phantom_cloud(dir.path());
    // a band that excludes the whole cloud empties it at the band stage
    let out = run(&[
        "estimate",
        "--input",
        path_str(&src),
        "--band-lo",
        "5.0",
        "--band-hi",
        "6.0",
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("band_filter"));
}

#[test]
fn phantom_outputs_are_seed_reproducible() {
    let dir = TempDir::new().unwrap();
    let mut outputs = Vec::new();
    for tag in ["one", "two"] {
        let cloud = dir.path().join(format!("{tag}.ply"));
        let depth = dir.path().join(format!("{tag}.pgm"));
        let intr = dir.path().join(format!("{tag}.json"));
        let truth = dir.path().join(format!("{tag}.truth.json"));
        expect_success(&run(&[
            "phantom",
            "--height",
            "1.75",
            "--seed",
            "7",
            "--cloud-out",
            path_str(&cloud),
            "--depth-out",
            path_str(&depth),
            "--intrinsics-out",
            path_str(&intr),
            "--truth-out",
            path_str(&truth),
        ]));
        outputs.push((
            fs::read(&cloud).unwrap(),
            fs::read(&depth).unwrap(),
            fs::read(&truth).unwrap(),
        ));
    }
    assert_eq!(outputs[0].0, outputs[1].0, "clouds differ");
    assert_eq!(outputs[0].1, outputs[1].1, "frames differ");
    assert_eq!(outputs[0].2, outputs[1].2, "ground truths differ");
}

#[test]
fn estimate_depth_frame_end_to_end() {
    let dir = TempDir::new().unwrap();
    let depth = dir.path().join("frame.pgm");
    let intr = dir.path().join("intr.json");
    let truth = dir.path().join("truth.json");
    expect_success(&run(&[
        "phantom",
        "--height",
        "1.75",
        "--bed",
        "0.6,1.05",
        "--seed",
        "4",
        "--depth-out",
        path_str(&depth),
        "--intrinsics-out",
        path_str(&intr),
        "--truth-out",
        path_str(&truth),
    ]));
    let out = run(&[
        "estimate",
        "--input",
        path_str(&depth),
        "--intrinsics",
        path_str(&intr),
        "--band-lo",
        "1.0",
        "--band-hi",
        "2.05",
        "--ransac",
        "--ransac-thresh",
        "0.015",
        "--mirror",
        "--sor-k",
        "0",
        "--voxel",
        "0.01",
        "--trim",
        "0",
        "--seed",
        "4",
    ]);
    expect_success(&out);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let truth: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&truth).unwrap()).unwrap();
    let height = report["estimate"]["height"].as_f64().unwrap();
    let weight = report["estimate"]["weight"].as_f64().unwrap();
    assert!((height - truth["height_m"].as_f64().unwrap()).abs() < 0.02);
    assert!((weight - truth["volume_m3"].as_f64().unwrap() * 1000.0).abs() < 3.0);
}
