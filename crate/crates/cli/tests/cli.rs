use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_minkdiff"))
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "bad json ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    dir: TempDir,
    euclidean: PathBuf,
    ellipsoid: PathBuf,
    sphere: PathBuf,
}

fn fixture() -> Fixture {
    let dir = TempDir::new().unwrap();
    let euclidean = write(&dir, "euclidean.json", r#"{"family":"euclidean","params":{}}"#);
    let ellipsoid = write(&dir, "ellipsoid.json", r#"{"family":"ellipsoid","params":{"a":2.0,"b":1.0,"c":1.0}}"#);
    let sphere = write(&dir, "sphere.json", r#"{"family":"sphere","params":{"r":1.0}}"#);
    Fixture {
        dir,
        euclidean,
        ellipsoid,
        sphere,
    }
}

#[test]
fn norm_check_euclidean() {
    let f = fixture();
    let out = run(&["norm", "check", "--norm", s(&f.euclidean)]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["m"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((v["m_bar"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(v["admissible"], Value::Bool(true));
}

#[test]
fn pure_l4_is_not_admissible() {
    let f = fixture();
    let l4 = write(&f.dir, "l4.json", r#"{"family":"l2-l4-blend","params":{"t":1.0}}"#);
    let out = run(&["norm", "check", "--norm", s(&l4)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["admissible"], Value::Bool(false));
}

#[test]
fn perimeter_euclidean_is_two_pi() {
    let f = fixture();
    let out = run(&["perimeter", "--norm", s(&f.euclidean), "--samples", "16"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let tau = std::f64::consts::TAU;
    assert!((v["rho"].as_f64().unwrap() - tau).abs() < 1e-2 * tau);
    assert!((v["bound"].as_f64().unwrap() - tau).abs() < 1e-9);
    assert_eq!(v["pass"], Value::Bool(true));
}

#[test]
fn malformed_json_reports_position() {
    let f = fixture();
    let bad = write(&f.dir, "bad.json", "{\"family\": \"euclidean\",\n  \"params\": {,}}");
    let out = run(&["norm", "check", "--norm", s(&bad)]);
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
    assert!(err.contains("column"), "{err}");
}

#[test]
fn missing_params_names_the_field() {
    let f = fixture();
    let bad = write(&f.dir, "bad.json", r#"{"family":"ellipsoid"}"#);
    let out = run(&["norm", "check", "--norm", s(&bad)]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("params"));
}

#[test]
fn asymmetric_custom_gauge_is_rejected_with_witness() {
    let f = fixture();
    let bad = write(
        &f.dir,
        "custom.json",
        r#"{"family":"custom","params":{"gauge":"sqrt(x^2 + y^2 + z^2) + 0.3 * x"}}"#,
    );
    let out = run(&["norm", "check", "--norm", s(&bad)]);
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("not symmetric") && err.contains("x = ["), "{err}");
}

#[test]
fn missing_file_and_bad_flags_are_input_errors() {
    let f = fixture();
    let missing = f.dir.path().join("nope.json");
    assert_eq!(run(&["norm", "check", "--norm", s(&missing)]).status.code(), Some(4));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(4));
    assert_eq!(
        run(&["norm", "check", "--norm", s(&f.euclidean), "--tol", "-1"]).status.code(),
        Some(4)
    );
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn curvature_csv_table() {
    let f = fixture();
    let out = run(&[
        "surface",
        "curvature",
        "--norm",
        s(&f.ellipsoid),
        "--surface",
        s(&f.sphere),
        "--at",
        "1.0,0.5",
        "--at",
        "2.0,3.0",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!(header.contains(&"K") && header.contains(&"H") && header.contains(&"Ke"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn scalar_csv_is_key_value() {
    let f = fixture();
    let out = run(&["norm", "check", "--norm", s(&f.euclidean), "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("key,value"));
    assert!(text.lines().any(|l| l.starts_with("admissible,true")));
}

#[test]
fn minimal_check_distinguishes_helicoid_from_sphere() {
    let f = fixture();
    let helicoid = write(&f.dir, "helicoid.json", r#"{"family":"helicoid","params":{"pitch":1.0}}"#);
    let out = run(&["surface", "minimal-check", "--norm", s(&f.euclidean), "--surface", s(&helicoid), "--grid", "7"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["minimal"], Value::Bool(true));
    let out = run(&["surface", "minimal-check", "--norm", s(&f.euclidean), "--surface", s(&f.sphere), "--grid", "7"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn variation_matches_formula() {
    let f = fixture();
    let out = run(&[
        "surface",
        "variation",
        "--norm",
        s(&f.ellipsoid),
        "--surface",
        s(&f.sphere),
        "--rect",
        "0.5,1.5,0.2,1.4",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let (a, b) = (v["numeric"].as_f64().unwrap(), v["formula"].as_f64().unwrap());
    assert!((a - b).abs() <= 1e-4 * b.abs());
}

#[test]
fn geodesic_on_sphere() {
    let f = fixture();
    let out = run(&[
        "geodesic",
        "--norm",
        s(&f.euclidean),
        "--surface",
        s(&f.sphere),
        "--from",
        "1.5707963267948966,0",
        "--to",
        "1.5707963267948966,1",
        "--resolution",
        "32",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["d"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!(v["samples"].as_array().unwrap().len() > 2);
}

#[test]
fn diameter_is_deterministic() {
    let f = fixture();
    let a = f.dir.path().join("a.json");
    let b = f.dir.path().join("b.json");
    for out in [&a, &b] {
        let o = run(&[
            "diameter",
            "--norm",
            s(&f.ellipsoid),
            "--surface",
            s(&f.sphere),
            "--samples",
            "3",
            "--resolution",
            "16",
            "--seed",
            "7",
            "--out",
            s(out),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn bonnet_on_torus_violates_hypothesis() {
    let f = fixture();
    let torus = write(&f.dir, "torus.json", r#"{"family":"torus","params":{"R":2.0,"rho":0.5}}"#);
    let out = run(&[
        "diameter",
        "--norm",
        s(&f.euclidean),
        "--surface",
        s(&torus),
        "--epsilon",
        "0.1",
        "--resolution",
        "16",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("hypothesis"));
}

#[test]
fn width_verify_report() {
    let f = fixture();
    let out = run(&[
        "width", "verify", "--norm", s(&f.euclidean), "--width", "2", "--epsilon", "0.05", "--grid", "16", "--samples", "40",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert!(v["width_deviation_max"].as_f64().unwrap() <= 1e-8);
    assert!(v["identity_residual_max"].as_f64().unwrap() <= 1e-4);
    assert!(v["umbilic_pairs"].is_u64());
    assert_eq!(v["convex"], Value::Bool(true));
}

#[test]
fn width_epsilon_too_large_is_input_error() {
    let f = fixture();
    let out = run(&["width", "verify", "--norm", s(&f.euclidean), "--epsilon", "5", "--grid", "16"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn acceptance_single_criterion() {
    let out = run(&["acceptance", "--suite", "2,3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["samples"].as_array().unwrap().len(), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.lines().filter(|l| l.starts_with("PASS")).count() == 2);
}
