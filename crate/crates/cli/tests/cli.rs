use serde_json::Value;
use std::process::{Command, Output};

fn kornlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kornlab")).args(args).output().expect("spawn kornlab")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&kornlab(&["--help"])), 0);
    assert_eq!(code(&kornlab(&["--version"])), 0);
    assert_eq!(code(&kornlab(&["constants", "--help"])), 0);
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(code(&kornlab(&["bogus"])), 64);
    assert_eq!(code(&kornlab(&["constants", "--primitive", "unit_cube", "--no-such-flag"])), 64);
    assert_eq!(code(&kornlab(&["constants"])), 64);
    assert_eq!(code(&kornlab(&["constants", "--primitive", "dodecahedron"])), 64);
    let o = Command::new(env!("CARGO_BIN_EXE_kornlab"))
        .args(["validate", "--primitive", "unit_cube", "--n", "1"])
        .env("KORNLAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&o), 64);
}

#[test]
fn generated_mesh_validates() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cube.km");
    let p = path.to_str().unwrap();
    let g = kornlab(&["gen", "--primitive", "unit_cube", "--n", "2", "--out", p]);
    assert_eq!(code(&g), 0, "{}", String::from_utf8_lossy(&g.stderr));
    let v = kornlab(&["validate", "--mesh", p]);
    assert_eq!(code(&v), 0);
    let j = json(&v);
    assert_eq!(j["valid"], Value::Bool(true));
    assert_eq!(j["summary"]["tets"], 48);
    assert_eq!(j["summary"]["vertices"], 27);
}

#[test]
fn malformed_mesh_is_a_validation_failure() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.km");
    std::fs::write(&path, "this is not a mesh\n").unwrap();
    assert_eq!(code(&kornlab(&["validate", "--mesh", path.to_str().unwrap()])), 2);
}

#[test]
fn missing_mesh_file_is_a_computational_error() {
    assert_eq!(code(&kornlab(&["validate", "--mesh", "/nonexistent/mesh.km"])), 1);
}

#[test]
fn constants_report_has_sorted_keys_and_consistent_records() {
    let o = kornlab(&["constants", "--primitive", "unit_cube", "--n", "2", "--direct"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let j = json(&o);
    let keys: Vec<&String> = j.as_object().unwrap().keys().collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    for k in ["c_p", "c_k_s", "c_k_t", "c_m", "c_hat", "c_direct", "harmonic_dim", "records", "verdicts"] {
        assert!(j.get(k).is_some(), "missing {k}");
    }
    for r in j["records"].as_array().unwrap() {
        let lam = r["eigenvalue"].as_f64().unwrap();
        let val = r["value"].as_f64().unwrap();
        assert!((val - 1.0 / lam.sqrt()).abs() <= 1e-14 * val, "{r}");
    }
    assert!(j["verdicts"].as_object().unwrap().values().all(|v| v == &Value::Bool(true)));
}

#[test]
fn constants_is_byte_identical_across_runs_and_threads() {
    let args = ["constants", "--primitive", "slab_mixed", "--n", "2", "--direct", "--samples", "3"];
    let a = kornlab(&args);
    let b = Command::new(env!("CARGO_BIN_EXE_kornlab")).args(args).env("KORNLAB_THREADS", "1").output().unwrap();
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn identity_coefficient_and_scaling() {
    let base = json(&kornlab(&["constants", "--primitive", "unit_cube", "--n", "2"]));
    let id = json(&kornlab(&["constants", "--primitive", "unit_cube", "--n", "2", "--coefficient", "identity"]));
    let two = json(&kornlab(&["constants", "--primitive", "unit_cube", "--n", "2", "--coefficient", "scale=2"]));
    let ck = base["c_k_irrot"].as_f64().unwrap();
    assert!((id["c_k_F"].as_f64().unwrap() - ck).abs() <= 1e-10);
    assert!((two["c_k_F"].as_f64().unwrap() - ck / 2.0).abs() <= 1e-10);
    let c_hat = base["c_hat"].as_f64().unwrap();
    assert!((id["c_hat_F"].as_f64().unwrap() - c_hat).abs() <= 1e-10);
}

#[test]
fn nonpositive_coefficient_is_rejected() {
    let o =
        kornlab(&["constants", "--primitive", "unit_cube", "--n", "1", "--coefficient", "matrix=1,0,0,0,1,0,0,0,-1"]);
    assert_eq!(code(&o), 2);
    assert_eq!(code(&kornlab(&["constants", "--primitive", "unit_cube", "--coefficient", "diag=1,2"])), 64);
}

#[test]
fn certify_passes_on_the_slab() {
    let o = kornlab(&["certify", "--primitive", "slab_mixed", "--n", "2", "--samples", "5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let j = json(&o);
    assert_eq!(j["certificates"].as_array().unwrap().len(), 5);
    assert_eq!(j["verdicts"]["certify"], Value::Bool(true));
}

#[test]
fn harmonics_of_the_tunnel_is_one_dimensional() {
    let o = kornlab(&["harmonics", "--primitive", "cube_with_tunnel", "--n", "2", "--gamma-t", "none"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["harmonic_dim"], 1);
}

#[test]
fn decompose_parts_are_orthogonal() {
    let o = kornlab(&["decompose", "--primitive", "cube_with_tunnel", "--n", "2", "--gamma-t", "none", "--seed", "3"]);
    assert_eq!(code(&o), 0);
    let j = json(&o);
    assert_eq!(j["verdicts"]["orthogonal"], Value::Bool(true));
    assert!(j["sum_residual"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn identities_csv_passes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ids.csv");
    let o = kornlab(&["identities", "--fields", "10", "--alphas", "5", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("check,kind,cases,skipped,worst,tolerance,pass"));
    let rows: Vec<&str> = lines.collect();
    assert!(rows.iter().any(|l| l.starts_with("estimate_E14,")));
    assert!(rows.iter().all(|l| l.ends_with(",true")), "{text}");
}

#[test]
fn study_writes_csv_for_each_level() {
    let o = kornlab(&["study", "--primitive", "unit_cube", "--levels", "1,2"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.len(), 3);
    assert!(data[0].starts_with("level,h,c_p"));
}
