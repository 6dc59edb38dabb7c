use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use recykl::experiments::standard_methods;
use recykl::linalg::SparseSpdMatrix;
use recykl::problems::{load_sequence_manifest, mm};

fn recykl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_recykl")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate(dir: &Path, extra: &[&str]) {
    let mut args = vec!["generate", "--out-dir", s(dir), "--nx", "8", "--ny", "8", "--p", "4"];
    args.extend_from_slice(extra);
    let out = recykl(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn generate_writes_loadable_sequence() {
    let tmp = tempfile::tempdir().unwrap();
    generate(tmp.path(), &["--outputs", "3"]);
    let seq = load_sequence_manifest(&tmp.path().join("manifest.json")).unwrap();
    assert_eq!(seq.len(), 4);
    assert_eq!(seq.n(), 64);
    assert_eq!(seq.output.as_ref().unwrap().rows(), 3);
}

#[test]
fn identity_system_takes_one_iteration() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    mm::write_sparse(&d.join("A.mtx"), &SparseSpdMatrix::identity(4)).unwrap();
    mm::write_vector(&d.join("b.mtx"), &[1.0, 2.0, 3.0, 4.0]).unwrap();
    fs::write(d.join("m.json"), r#"{"n": 4, "systems": [{"matrix": "A.mtx", "rhs": "b.mtx", "tol": 1e-10}]}"#).unwrap();
    let methods: Vec<_> = standard_methods(50).into_iter().take(1).collect();
    fs::write(d.join("methods.json"), serde_json::to_string(&methods).unwrap()).unwrap();
    let out_dir = d.join("out");
    let out = recykl(&["run", "--manifest", s(&d.join("m.json")), "--methods", s(&d.join("methods.json")), "--out-dir", s(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_path(out_dir.join("runs.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let col = headers.iter().position(|h| h == "stage3_iters").unwrap();
    let rows: Vec<_> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][col], "1");
    assert!(out_dir.join("summary.json").is_file());
}

#[test]
fn tolerance_sweep_emits_six_rows_per_method() {
    let tmp = tempfile::tempdir().unwrap();
    generate(tmp.path(), &[]);
    let methods: Vec<_> = standard_methods(50).into_iter().take(2).collect();
    let mpath = tmp.path().join("methods.json");
    fs::write(&mpath, serde_json::to_string(&methods).unwrap()).unwrap();
    let out_dir = tmp.path().join("out");
    let out = recykl(&[
        "run",
        "--manifest",
        s(&tmp.path().join("manifest.json")),
        "--methods",
        s(&mpath),
        "--tol-sweep",
        "--out-dir",
        s(&out_dir),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    let rows = summary.as_array().unwrap();
    assert_eq!(rows.len(), 12);
    for m in &methods {
        assert_eq!(rows.iter().filter(|r| r["method"] == m.name.as_str()).count(), 6);
    }
}

#[test]
fn missing_manifest_is_a_configuration_error() {
    let out = recykl(&["run", "--manifest", "/nonexistent/manifest.json"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!out.stderr.is_empty());
}

#[test]
fn output_error_requires_output_matrix() {
    let tmp = tempfile::tempdir().unwrap();
    generate(tmp.path(), &[]);
    let out = recykl(&["output-error", "--manifest", s(&tmp.path().join("manifest.json")), "--out-dir", s(&tmp.path().join("o"))]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn output_error_writes_table() {
    let tmp = tempfile::tempdir().unwrap();
    generate(tmp.path(), &["--outputs", "4"]);
    let o = tmp.path().join("o");
    let out = recykl(&["output-error", "--manifest", s(&tmp.path().join("manifest.json")), "--taus", "1e-2,1e-4", "--out-dir", s(&o)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let n = csv::Reader::from_path(o.join("output_error.csv")).unwrap().records().count();
    assert_eq!(n, 2 * 6);
}

#[test]
fn fixtures_check_passes() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    let out = recykl(&["fixtures", "--dir", s(&dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bad_precond_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    generate(tmp.path(), &[]);
    let out = recykl(&["run", "--manifest", s(&tmp.path().join("manifest.json")), "--precond", "ilu", "--out-dir", s(&tmp.path().join("o"))]);
    assert_eq!(out.status.code(), Some(3));
}
