//! End-to-end checks of the `sfc` binary: artifact round trips and the
//! documented exit-code contract.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sfc_core::GridSize;
use sfc_tools::curve_file::read_curve;

fn sfc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sfc"))
}

fn run(args: &[&str]) -> Output {
    sfc().args(args).output().expect("binary runs")
}

fn write_pgm_fixtures(dir: &Path, count: usize) -> PathBuf {
    let images = dir.join("images");
    std::fs::create_dir_all(&images).unwrap();
    let size = GridSize::new(8, 8).unwrap();
    for k in 0..count {
        let data: Vec<f64> = (0..64)
            .map(|i| ((i * (k + 3) + k) % 64) as f64 / 63.0)
            .collect();
        let image = sfc_core::GrayImage::new(size, data).unwrap();
        sfc_tools::pgm::write_pgm(images.join(format!("im{k:02}.pgm")), &image).unwrap();
    }
    images
}

#[test]
fn unknown_subcommand_exits_1() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("Usage"), "stderr should carry usage text: {err}");
}

#[test]
fn missing_data_exits_2() {
    let out = run(&[
        "metrics",
        "--source",
        "/nonexistent/path.idx",
        "--lag",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn curve_emission_and_validation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hilbert.curve");
    let out = run(&[
        "curve",
        "--kind",
        "hilbert",
        "--size",
        "32",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let curve = read_curve(&path).unwrap();
    assert_eq!(curve.order.len(), 1024);
    assert_eq!(curve.kind, "hilbert");

    // Hilbert on a non-power-of-two grid is a data error.
    let out = run(&[
        "curve",
        "--kind",
        "hilbert",
        "--size",
        "12",
        "--out",
        dir.path().join("nope.curve").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dataset_pipeline_metrics_compress_render() {
    let dir = tempfile::tempdir().unwrap();
    let images = write_pgm_fixtures(dir.path(), 4);
    let images = images.to_str().unwrap();

    // mean-dafner curve from the pgm directory
    let curve_path = dir.path().join("set.curve");
    let out = run(&[
        "curve",
        "--kind",
        "mean-dafner",
        "--source",
        images,
        "--out",
        curve_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{:?}", out);
    let curve = read_curve(&curve_path).unwrap();
    assert!(curve.order.is_adjacency_valid());

    // metrics over builtins + the emitted curve
    let csv_path = dir.path().join("metrics.csv");
    let out = run(&[
        "metrics",
        "--source",
        images,
        "--curve",
        curve_path.to_str().unwrap(),
        "--lag",
        "2,6",
        "--threads",
        "2",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("order,rho2,rho6"));
    assert_eq!(csv.lines().count(), 1 + 4); // raster, serpentine, hilbert, set

    // compress along the curve
    let out = run(&[
        "compress",
        "--source",
        images,
        "--curve",
        curve_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("bytes"));

    // scale the curve to 16x16
    let scaled_path = dir.path().join("set-x2.curve");
    let out = run(&[
        "scale",
        "--curve",
        curve_path.to_str().unwrap(),
        "--out",
        scaled_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let scaled = read_curve(&scaled_path).unwrap();
    assert_eq!(scaled.order.len(), 4 * 64);

    // render overlay + strip
    let svg_path = dir.path().join("overlay.svg");
    let out = run(&[
        "render",
        "--source",
        images,
        "--curve",
        curve_path.to_str().unwrap(),
        "--mode",
        "overlay",
        "--out",
        svg_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(std::fs::read_to_string(&svg_path).unwrap().contains("<polyline"));

    let strip_path = dir.path().join("strip.pgm");
    let out = run(&[
        "render",
        "--source",
        images,
        "--curve",
        curve_path.to_str().unwrap(),
        "--mode",
        "strip",
        "--out",
        strip_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let strip = std::fs::read(&strip_path).unwrap();
    assert!(strip.starts_with(b"P5\n64 1\n255\n"));
}

#[test]
fn train_writes_checkpoint_and_generated_curve_loads_it() {
    let dir = tempfile::tempdir().unwrap();
    let images = write_pgm_fixtures(dir.path(), 6);
    let images = images.to_str().unwrap();
    let ckpt = dir.path().join("gen.sfcw");
    let history = dir.path().join("history.csv");
    // A deliberately tiny run; this exercises the wiring, not the learning.
    let out = sfc()
        .args([
            "train",
            "--source",
            images,
            "--heldout",
            "2",
            "--iterations",
            "3",
            "--seed",
            "5",
            "--out",
            ckpt.to_str().unwrap(),
            "--history-out",
            history.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{:?}", out);
    assert!(ckpt.exists());
    let csv = std::fs::read_to_string(&history).unwrap();
    assert!(csv.starts_with("iteration,generator_loss,evaluator_loss"));
    assert_eq!(csv.lines().count(), 1 + 3);

    let curve_path = dir.path().join("gen.curve");
    let out = run(&[
        "curve",
        "--kind",
        "generated",
        "--source",
        images,
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--out",
        curve_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{:?}", out);
    let curve = read_curve(&curve_path).unwrap();
    assert!(curve.order.is_adjacency_valid());
}

#[test]
fn annealed_curve_records_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let images = write_pgm_fixtures(dir.path(), 3);
    let curve_path = dir.path().join("annealed.curve");
    let out = run(&[
        "curve",
        "--kind",
        "annealed",
        "--source",
        images.to_str().unwrap(),
        "--objective",
        "ac",
        "--lag",
        "4",
        "--steps",
        "200",
        "--seed",
        "9",
        "--out",
        curve_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{:?}", out);
    let curve = read_curve(&curve_path).unwrap();
    assert_eq!(curve.objective.as_deref(), Some("ac4"));
    assert_eq!(curve.seed, Some(9));
}
