use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scene(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenes").join(name)
}

fn camoscat(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_camoscat"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn json(path: PathBuf) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn homogeneous_cell_gives_scaled_identity() {
    let dir = tempfile::tempdir().unwrap();
    let s = scene("homogeneous_cell.json");
    let out = camoscat(&["homogenize", "--scene", s.to_str().unwrap(), "--n-grid", "32x32"], dir.path());
    assert!(out.status.success());
    let report = json(dir.path().join("report.json"));
    assert_eq!(report["subcommand"], "homogenize");
    let a = &report["results"]["A"];
    for (k, j, want) in [(0, 0, 0.5), (1, 1, 0.5), (0, 1, 0.0), (1, 0, 0.0)] {
        let got = a[k][j].as_f64().unwrap();
        assert!((got - want).abs() < 1e-12, "A[{k}][{j}] = {got}");
    }
    assert!((report["results"]["eps_minus"].as_f64().unwrap() - 3.0).abs() < 1e-12);
    assert!(dir.path().join("homogenized.json").exists());
}

#[test]
fn layer_coeffs_writes_all_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let s = scene("buried_disc.json");
    let out = camoscat(
        &["layer-coeffs", "--scene", s.to_str().unwrap(), "--n-grid", "32x8"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let coeffs = json(dir.path().join("coefficients.json"));
    for key in ["s", "psi", "phi1", "phi2", "phi3", "xi", "omega"] {
        assert!(!coeffs[key].is_null(), "missing {key}");
    }
    let report = json(dir.path().join("report.json"));
    assert!(report["timings"].is_object());
}

#[test]
fn zero_contrast_scatter_passes() {
    let dir = tempfile::tempdir().unwrap();
    let s = scene("zero_contrast.json");
    let out = camoscat(
        &["scatter", "--scene", s.to_str().unwrap(), "--nodes", "32", "--grid", "-0.5:0.5:3,-3.4:0.5:4"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(dir.path().join("report.json"));
    assert_eq!(report["results"]["pass"], true);
    let csv = std::fs::read_to_string(dir.path().join("field.csv")).unwrap();
    assert!(csv.starts_with("x1,x2,re,im,abs"));
    assert_eq!(csv.lines().count(), 1 + 3 * 4);
}

#[test]
fn background_csv_has_one_row_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let s = scene("buried_disc.json");
    let out = camoscat(
        &["background", "--scene", s.to_str().unwrap(), "--grid", "-1:1:5,-1:1:6"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("background.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 5 * 6);
}

#[test]
fn missing_scene_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = camoscat(&["homogenize", "--scene", "/nonexistent/scene.json"], dir.path());
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn invalid_scene_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let mut scene = json(scene("buried_disc.json"));
    scene["materials"]["mu_host"] = serde_json::json!(-1.0);
    std::fs::write(&path, scene.to_string()).unwrap();
    let out = camoscat(&["homogenize", "--scene", path.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn out_of_range_options_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let s = scene("buried_disc.json");
    let out = camoscat(&["homogenize", "--scene", s.to_str().unwrap(), "--tol", "0.5"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}
