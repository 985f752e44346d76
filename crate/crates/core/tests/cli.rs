//! End-to-end tests of the `plaquemesh` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use plaquemesh::analysis::{PlaqueReport, PlaqueStatus};
use plaquemesh::volume::{write_nrrd, IntensityVolume, LabelVolume, VolumeGeometry};
use serde_json::Value;

fn plaquemesh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plaquemesh")).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes a phantom into `dir` and returns the label path.
fn phantom(dir: &Path, extra: &[&str]) -> PathBuf {
    let mut args = vec!["phantom", "--out", s(dir), "--voxel", "0.3", "--length", "30"];
    args.extend_from_slice(extra);
    let out = plaquemesh(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    dir.join("labels.nrrd")
}

fn report(path: &Path) -> PlaqueReport {
    PlaqueReport::from_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn healthy_tube_reports_no_plaque_and_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let labels = phantom(&tmp.path().join("ph"), &[]);
    let out = tmp.path().join("run");
    let status = plaquemesh(&["run", "--labels", s(&labels), "--out", s(&out)]).status;
    assert_eq!(status.code(), Some(0));
    let r = report(&out.join("report.json"));
    assert_eq!(r.plaque, PlaqueStatus::None);
    assert!(r.geometry.is_none());
    assert!(out.join("inner.ply").exists() && out.join("outer.ply").exists());
    for absent in ["plaque.ply", "unfolded.svg", "unfolded.ply", "histogram.csv"] {
        assert!(!out.join(absent).exists(), "{absent}");
    }
}

#[test]
fn bump_phantom_writes_every_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let ph = tmp.path().join("ph");
    let labels = phantom(&ph, &["--bump-amplitude", "2", "--bump-position", "15", "--with-intensity"]);
    let out = tmp.path().join("run");
    let status = plaquemesh(&[
        "run",
        "--labels",
        s(&labels),
        "--intensity",
        s(&ph.join("intensity.nrrd")),
        "--out",
        s(&out),
        "--debug-stages",
        "--ascii-ply",
        "--vwt-range",
        "0",
        "4",
        "--bin-width",
        "5",
    ])
    .status;
    assert_eq!(status.code(), Some(0));
    let r = report(&out.join("report.json"));
    assert_eq!(r.plaque, PlaqueStatus::Extracted);
    let geometry = r.geometry.unwrap();
    assert!(geometry.volume_mm3 > 0.0 && geometry.compactness <= 1.0);
    assert_eq!(r.histogram_bin_width, Some(5.0));
    let unfold = r.unfold.expect("unfold summary");
    assert_eq!(unfold.flipped_triangles, 0);

    let csv = std::fs::read_to_string(out.join("histogram.csv")).unwrap();
    assert!(csv.starts_with("bin_lower,bin_upper,count\n"));
    let counted: usize = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(Some(counted), r.inside_voxels);

    let ply = std::fs::read(out.join("plaque.ply")).unwrap();
    assert!(String::from_utf8_lossy(&ply[..40]).contains("format ascii 1.0"));
    let svg = std::fs::read_to_string(out.join("unfolded.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert!(svg.contains(">4 mm<"), "color bar maximum label");
    assert!(std::fs::read_dir(out.join("stages")).unwrap().count() > 3);
}

#[test]
fn both_modes_write_side_by_side_results() {
    let tmp = tempfile::tempdir().unwrap();
    let labels = phantom(&tmp.path().join("ph"), &["--bump-amplitude", "2", "--bump-position", "15"]);
    let out = tmp.path().join("run");
    let output = plaquemesh(&["run", "--labels", s(&labels), "--out", s(&out), "--threshold-mode", "both"]);
    assert!(output.status.success());
    let table = String::from_utf8_lossy(&output.stdout);
    assert!(table.contains("global") && table.contains("case-specific"));
    let cmp: Value = serde_json::from_str(&std::fs::read_to_string(out.join("comparison.json")).unwrap()).unwrap();
    assert_eq!(cmp.as_array().unwrap().len(), 2);
    assert_eq!(report(&out.join("global/report.json")).threshold.pt, 1.496);
    assert!(out.join("case-specific/report.json").exists());
}

#[test]
fn several_arteries_run_in_parallel_into_subdirectories() {
    let tmp = tempfile::tempdir().unwrap();
    let a = phantom(&tmp.path().join("a"), &[]);
    let b = phantom(&tmp.path().join("b"), &["--seed", "4", "--noise", "0.03"]);
    let (a2, b2) = (tmp.path().join("left.nrrd"), tmp.path().join("right.nrrd"));
    std::fs::copy(&a, &a2).unwrap();
    std::fs::copy(&b, &b2).unwrap();
    let out = tmp.path().join("run");
    let status = plaquemesh(&["run", "--labels", s(&a2), s(&b2), "--out", s(&out), "--jobs", "2"]).status;
    assert_eq!(status.code(), Some(0));
    assert!(out.join("left/report.json").exists() && out.join("right/report.json").exists());
}

#[test]
fn input_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let labels = phantom(&tmp.path().join("ph"), &[]);
    let out = s(tmp.path()).to_string() + "/run";
    let missing = plaquemesh(&["run", "--labels", "/nonexistent.nrrd", "--out", &out]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nonexistent"));
    assert_eq!(plaquemesh(&["run", "--labels", s(&labels), "--out", &out, "--bogus"]).status.code(), Some(2));
    assert_eq!(plaquemesh(&["run", "--labels", s(&labels), "--out", &out, "--k", "-1"]).status.code(), Some(2));

    // intensity on a different grid
    let geometry = VolumeGeometry::new([4, 4, 4], [1.0; 3], [0.0; 3]).unwrap();
    let other = tmp.path().join("other.nrrd");
    write_nrrd(&IntensityVolume::new(geometry, vec![1.0; 64]).unwrap(), &other).unwrap();
    let mismatch = plaquemesh(&["run", "--labels", s(&labels), "--intensity", s(&other), "--out", &out]);
    assert_eq!(mismatch.status.code(), Some(2));
    let count = plaquemesh(&["run", "--labels", s(&labels), s(&labels), "--intensity", s(&other), "--out", &out]);
    assert_eq!(count.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let labels = phantom(&tmp.path().join("ph"), &[]);
    let blocker = tmp.path().join("blocker");
    std::fs::write(&blocker, b"file").unwrap();
    let out = blocker.join("run");
    assert_eq!(plaquemesh(&["run", "--labels", s(&labels), "--out", s(&out)]).status.code(), Some(1));
}

#[test]
fn empty_label_volume_fails_a_stage_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let geometry = VolumeGeometry::new([8, 8, 8], [0.5; 3], [0.0; 3]).unwrap();
    let labels = tmp.path().join("empty.nrrd");
    write_nrrd(&LabelVolume::new(geometry, vec![0; 512]).unwrap(), &labels).unwrap();
    let out = plaquemesh(&["run", "--labels", s(&labels), "--out", s(&tmp.path().join("run"))]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stage `"));
}

#[test]
fn compare_reports_deltas_and_rejects_bad_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let small = phantom(&tmp.path().join("small"), &["--bump-amplitude", "1.6", "--bump-position", "15"]);
    let large = phantom(&tmp.path().join("large"), &["--bump-amplitude", "2.2", "--bump-position", "15"]);
    let healthy = phantom(&tmp.path().join("healthy"), &[]);
    for (labels, name) in [(&small, "r1"), (&large, "r2"), (&healthy, "r3")] {
        assert!(plaquemesh(&["run", "--labels", s(labels), "--out", s(&tmp.path().join(name))]).status.success());
    }
    let r = |n: &str| tmp.path().join(n).join("report.json");
    let delta_path = tmp.path().join("delta.json");
    let out = plaquemesh(&["compare", s(&r("r1")), s(&r("r2")), "--out", s(&delta_path)]);
    assert_eq!(out.status.code(), Some(0));
    let delta: Value = serde_json::from_str(&std::fs::read_to_string(&delta_path).unwrap()).unwrap();
    assert_eq!(delta["status"], "both-extracted");
    let volume = &delta["metrics"][0];
    assert_eq!(volume["name"], "volume_mm3");
    assert!(volume["delta"].as_f64().unwrap() > 0.0);

    let out = plaquemesh(&["compare", s(&r("r1")), s(&r("r3"))]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("plaque resolved below threshold"));

    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, r#"{"schema_version": 99}"#).unwrap();
    assert_eq!(plaquemesh(&["compare", s(&bad), s(&r("r1"))]).status.code(), Some(2));
}

#[test]
fn phantom_command_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["--bump-amplitude", "1.5", "--noise", "0.04", "--seed", "9", "--with-intensity"];
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    phantom(&a, &args);
    phantom(&b, &args);
    for file in ["labels.nrrd", "intensity.nrrd", "spec.json", "ground_truth.json"] {
        assert_eq!(std::fs::read(a.join(file)).unwrap(), std::fs::read(b.join(file)).unwrap(), "{file}");
    }
    // the written spec regenerates the same volume
    let c = tmp.path().join("c");
    let spec = a.join("spec.json");
    phantom(&c, &["--spec", s(&spec)]);
    assert_eq!(std::fs::read(a.join("labels.nrrd")).unwrap(), std::fs::read(c.join("labels.nrrd")).unwrap());
}
