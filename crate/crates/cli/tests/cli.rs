use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const PI_3: &str = "1.0471975511965976";

fn bclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bclab")).args(args).output().expect("spawn bclab")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all: Vec<&str> = args.to_vec();
    all.extend(["--out", dir.to_str().unwrap()]);
    bclab(&all)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|_| panic!("{}", String::from_utf8_lossy(&out.stderr)))
}

fn suite<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["suites"].as_array().unwrap().iter().find(|s| s["name"] == name).unwrap()
}

#[test]
fn generate_rotational_manifest_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["generate", "--family", "rotational", "--p", "2", "--q", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["n"], 5);
    assert_eq!(m["ambient"], 6);
    assert_eq!(m["surface"]["family"], "rotational");
    assert_eq!(m["config_digest"].as_str().unwrap().len(), 64);
    assert!(m["tolerances"]["pole_tol"].is_number());
    let csv = std::fs::read_to_string(dir.path().join("profile.csv")).unwrap();
    assert!(csv.starts_with("s,psi,phi,theta,kappa\n"));
    assert_eq!(csv.lines().count(), 202);
}

#[test]
fn generate_cylinder_three_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["generate", "--family", "cylinder", "--p", "3", "--q", "1", "--mesh"]);
    assert_eq!(out.status.code(), Some(0));
    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["n"], 5);
    assert_eq!(m["surface"]["p"], 3);
    assert_eq!(m["surface"]["q"], 1);
    assert_eq!(m["mesh"], "mesh.obj");
    let obj = std::fs::read_to_string(dir.path().join("mesh.obj")).unwrap();
    assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 32 * 32);
    assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 31 * 31);
}

#[test]
fn zero_p_is_rejected_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["generate", "--family", "rotational", "--p", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["message"], "p must be ≥ 1");
    assert_eq!(err["code"], 2);
    assert!(!dir.path().join("manifest.json").exists());
}

#[test]
fn verify_generated_surface_passes() {
    let dir = tempfile::tempdir().unwrap();
    let gen = run_in(dir.path(), &["generate", "--family", "rotational", "--theta0", PI_3]);
    assert_eq!(gen.status.code(), Some(0));
    let manifest = dir.path().join("manifest.json");
    let out = run_in(dir.path(), &["verify", "--manifest", manifest.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&dir.path().join("verify.json"));
    assert_eq!(r["pass"], true);
    for name in ["h_condition", "codazzi", "structural_identity", "slice_sphericity", "unit_speed"] {
        assert_eq!(suite(&r, name)["status"], "pass", "{name}");
        assert!(dir.path().join(format!("verify_{name}.csv")).exists());
    }
    assert!(suite(&r, "h_condition")["note"].is_null());
}

#[test]
fn ellipsoid_fails_h_but_passes_codazzi() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["verify", "--family", "ellipsoid", "--suites", "h_condition,codazzi"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(stderr_json(&out)["code"], 4);
    let r = json(&dir.path().join("verify.json"));
    assert_eq!(suite(&r, "h_condition")["status"], "fail");
    assert!(suite(&r, "h_condition")["max"].as_f64().unwrap() > 1e-2);
    assert_eq!(suite(&r, "codazzi")["status"], "pass");
    assert_eq!(r["suites"].as_array().unwrap().len(), 2);
}

#[test]
fn sphere_passes_vacuously() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["verify", "--family", "sphere", "--grid", "6,4"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&dir.path().join("verify.json"));
    assert_eq!(suite(&r, "h_condition")["note"], "∇s1 ≈ 0");
    assert_eq!(suite(&r, "unit_speed")["status"], "skipped");
}

#[test]
fn lambda_scan_on_round_cylinder() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["scan-lambda", "--family", "round-cylinder"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&dir.path().join("scan_lambda.json"));
    assert!(r["scan"]["lambda_spread"].as_f64().unwrap() < 1e-8);
    assert_eq!(r["scan"]["candidate"], true);
}

#[test]
fn lambda_scan_reports_generic_spread() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["scan-lambda", "--family", "rotational", "--theta0", PI_3, "--grid", "6,3"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&dir.path().join("scan_lambda.json"));
    assert!(r["scan"]["lambda_spread"].as_f64().unwrap().is_finite());
}

#[test]
fn lambda_scan_on_minimal_surface_is_a_precondition_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["scan-lambda", "--family", "plane"]);
    assert_eq!(out.status.code(), Some(5));
    assert_eq!(stderr_json(&out)["kind"], "MeanCurvatureVanishes");
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"family": "rotational", "p": 1, "q": 3, "s-max": 0.3}"#).unwrap();
    let out = run_in(dir.path(), &["generate", "--config", cfg.to_str().unwrap(), "--p", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["surface"]["p"], 2);
    assert_eq!(m["surface"]["q"], 3);
    assert_eq!(m["surface"]["s_max"].as_f64(), Some(0.3));
}

#[test]
fn malformed_config_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"famly": "rotational"}"#).unwrap();
    let out = run_in(dir.path(), &["generate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tampered_manifest_is_a_precondition_failure() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_in(dir.path(), &["generate", "--family", "cylinder"]).status.code(), Some(0));
    let path = dir.path().join("manifest.json");
    let mut m = json(&path);
    m["profile"]["samples_digest"] = Value::String("0".repeat(64));
    std::fs::write(&path, serde_json::to_string(&m).unwrap()).unwrap();
    let out = run_in(dir.path(), &["verify", "--manifest", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn missing_manifest_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let out = run_in(dir.path(), &["verify", "--manifest", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["kind"], "io");
}

#[test]
fn classify_labels() {
    let dir = tempfile::tempdir().unwrap();
    for (family, label) in [
        ("rotational", "h_hypersurface_rotational_type"),
        ("cylinder", "h_hypersurface_cylinder_type"),
        ("sphere", "umbilical"),
        ("ellipsoid", "generic"),
    ] {
        let sub = dir.path().join(family);
        let out = run_in(&sub, &["classify", "--family", family, "--theta0", PI_3, "--grid", "8,3"]);
        assert_eq!(out.status.code(), Some(0));
        assert_eq!(json(&sub.join("classify.json"))["label"], label, "{family}");
    }
}

#[test]
fn report_writes_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["report", "--family", "torus", "--grid", "5,2", "--mesh", "--mesh-res", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("curvature.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("u0,u1,u2,k1,k2,k3,s1,s2,h_residual,grad_s1_norm"));
    assert_eq!(csv.lines().count(), 11);
    let r = json(&dir.path().join("report.json"));
    assert_eq!(r["points"], 10);
    assert!(r["tolerances"].is_object());
}

#[test]
fn invalid_thread_cap_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_bclab"))
        .args(["classify", "--family", "sphere", "--out", dir.path().to_str().unwrap()])
        .env("BCLAB_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn thread_count_does_not_change_reports() {
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for threads in ["1", "3"] {
        let sub = dir.path().join(threads);
        let out = Command::new(env!("CARGO_BIN_EXE_bclab"))
            .args(["verify", "--family", "cylinder", "--theta0", PI_3, "--grid", "6,3", "--out"])
            .arg(&sub)
            .env("BCLAB_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        bytes.push(std::fs::read(sub.join("verify.json")).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
}
