use std::path::Path;
use std::process::{Command, Output};

use mapcones::maps::{identity_map, transpose_map};
use serde_json::Value;

fn mapcones(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mapcones"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn csv_rows(text: &str) -> Vec<(f64, f64, bool)> {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("param,min_eig,fired"));
    lines
        .map(|line| {
            let cols: Vec<&str> = line.split(',').collect();
            (
                cols[0].parse().unwrap(),
                cols[1].parse().unwrap(),
                cols[2].parse().unwrap(),
            )
        })
        .collect()
}

fn flip_brackets(rows: &[(f64, f64, bool)]) -> Vec<(f64, f64)> {
    rows.windows(2)
        .filter(|w| w[0].2 != w[1].2)
        .map(|w| (w[0].0, w[1].0))
        .collect()
}

#[test]
fn classify_transpose_superoperator() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "t.json",
        &serde_json::to_string(&transpose_map(2)).unwrap(),
    );
    let report = json(&mapcones(&["classify", &input]));
    assert_ne!(report["p_k"][0]["verdict"], "ViolationFound");
    assert_eq!(report["p_k"][1]["verdict"], "ViolationFound");
    assert_eq!(
        report["p_k"][1]["witness_vector"]["dims"],
        serde_json::json!([2, 2])
    );
    assert_eq!(report["ccp"]["verdict"], "MembershipProven");
    assert_eq!(report["cp"]["verdict"], "ViolationFound");
}

#[test]
fn classify_identity_choi_without_repr() {
    let dir = tempfile::tempdir().unwrap();
    let choi = identity_map(3).choi();
    let input = write(
        dir.path(),
        "id.json",
        &serde_json::to_string(&choi).unwrap(),
    );
    let report = json(&mapcones(&["classify", &input]));
    assert_eq!(report["cp"]["verdict"], "MembershipProven");
    assert_eq!(report["s_k"]["lower"], 3);
    assert_eq!(report["s_k"]["upper"], 3);
}

#[test]
fn classify_kraus_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "k.json",
        r#"{"kraus":[{"dim":2,"re":[[1,0],[0,0]],"im":[[0,0],[0,0]]},{"dim":2,"re":[[0,0],[0,1]],"im":[[0,0],[0,0]]}]}"#,
    );
    let report = json(&mapcones(&["classify", &input]));
    assert_eq!(report["cp"]["verdict"], "MembershipProven");
    assert_eq!(report["s_k"]["upper"], 1);
}

#[test]
fn classify_errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let malformed = write(dir.path(), "bad.json", "{\"dim\": 4, \"re\": [[1,");
    assert_eq!(mapcones(&["classify", &malformed]).status.code(), Some(2));

    let missing = dir.path().join("missing.json");
    assert_eq!(
        mapcones(&["classify", missing.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );

    let non_hermitian = write(
        dir.path(),
        "nh.json",
        r#"{"dim":4,"re":[[1,1,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]],"im":[[0,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]]}"#,
    );
    let out = mapcones(&["classify", &non_hermitian]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!out.stderr.is_empty());

    let bad_repr = write(
        dir.path(),
        "r.json",
        r#"{"dim":1,"re":[[1]],"im":[[0]],"repr":"kraus"}"#,
    );
    assert_eq!(mapcones(&["classify", &bad_repr]).status.code(), Some(2));
}

#[test]
fn classify_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "t.json",
        &serde_json::to_string(&transpose_map(3)).unwrap(),
    );
    let a = mapcones(&["classify", &input, "--seed", "9"]);
    let b = mapcones(&["classify", &input, "--seed", "9"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);

    let out = dir.path().join("report.json");
    let c = mapcones(&[
        "classify",
        &input,
        "--seed",
        "9",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(c.status.success());
    assert!(c.stdout.is_empty());
    assert_eq!(std::fs::read(&out).unwrap(), a.stdout);
}

#[test]
fn scan_reduction_brackets_one_half() {
    let out = mapcones(&[
        "scan",
        "--family",
        "reduction:3",
        "--k",
        "2",
        "--grid",
        "0.3:0.7:41",
    ]);
    assert!(out.status.success());
    let rows = csv_rows(std::str::from_utf8(&out.stdout).unwrap());
    assert_eq!(rows.len(), 41);
    let flips = flip_brackets(&rows);
    assert_eq!(flips.len(), 1);
    assert!(flips[0].0 <= 0.5 && 0.5 <= flips[0].1);
}

#[test]
fn scan_isotropic_brackets_one_third() {
    let out = mapcones(&[
        "scan",
        "--family",
        "isotropic:3",
        "--k",
        "1",
        "--grid",
        "0.2:0.5:31",
    ]);
    let rows = csv_rows(std::str::from_utf8(&out.stdout).unwrap());
    let flips = flip_brackets(&rows);
    assert_eq!(flips.len(), 1);
    assert!(flips[0].0 <= 1.0 / 3.0 && 1.0 / 3.0 <= flips[0].1);
}

#[test]
fn scan_werner_crosses_at_one_third() {
    let out = mapcones(&["scan", "--family", "werner", "--grid", "0:1:11"]);
    let rows = csv_rows(std::str::from_utf8(&out.stdout).unwrap());
    for (p, min_eig, _) in &rows {
        assert!((min_eig - (1.0 - 3.0 * p) / 4.0).abs() < 1e-14);
    }
    let sign_changes = rows
        .windows(2)
        .filter(|w| (w[0].1 >= 0.0) != (w[1].1 >= 0.0))
        .map(|w| (w[0].0, w[1].0))
        .collect::<Vec<_>>();
    assert_eq!(sign_changes.len(), 1);
    assert!(sign_changes[0].0 < 1.0 / 3.0 && 1.0 / 3.0 < sign_changes[0].1);
}

#[test]
fn scan_rejects_bad_specs() {
    for args in [
        &["scan", "--family", "ghz:3", "--grid", "0:1:3"][..],
        &["scan", "--family", "werner", "--grid", "0:1"],
        &["scan", "--family", "isotropic:3", "--grid", "1:0:3"],
        &[
            "scan",
            "--family",
            "isotropic:3",
            "--k",
            "5",
            "--grid",
            "0:1:3",
        ],
        &["scan", "--family", "isotropic:3", "--grid", "0:2:3"],
    ] {
        assert_eq!(mapcones(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn fuzz_duality_passes_at_k1_and_k2() {
    for k in ["1", "2"] {
        let summary = json(&mapcones(&[
            "fuzz", "duality", "--n", "500", "--dim", "3", "--k", k,
        ]));
        assert_eq!(summary["passed"], 500);
        assert_eq!(summary["failed"], 0);
    }
}

#[test]
fn fuzz_bijection_and_composition() {
    let summary = json(&mapcones(&["fuzz", "bijection", "--n", "1000"]));
    assert_eq!(summary["passed"], 1000);
    let summary = json(&mapcones(&[
        "fuzz",
        "composition",
        "--n",
        "100",
        "--dim",
        "3",
        "--k",
        "2",
    ]));
    assert_eq!(summary["passed"], 100);
    assert!(summary["max_error"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn fuzz_output_is_deterministic_and_validated() {
    let a = mapcones(&["fuzz", "adjoint", "--n", "64", "--seed", "5"]);
    let b = mapcones(&["fuzz", "adjoint", "--n", "64", "--seed", "5"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(mapcones(&["fuzz", "nonsense"]).status.code(), Some(2));
    assert_eq!(
        mapcones(&["fuzz", "duality", "--n", "0"]).status.code(),
        Some(2)
    );
}

#[test]
fn config_file_is_applied_and_validated() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "t.json",
        &serde_json::to_string(&transpose_map(2)).unwrap(),
    );
    let config = write(
        dir.path(),
        "c.json",
        r#"{"seed": 3, "restarts": 2, "crosscheck": true}"#,
    );
    let report = json(&mapcones(&["classify", &input, "--config", &config]));
    assert_eq!(report["p_k"][1]["crosscheck"]["consistent"], true);

    let typo = write(dir.path(), "typo.json", r#"{"restart": 2}"#);
    assert_eq!(
        mapcones(&["classify", &input, "--config", &typo])
            .status
            .code(),
        Some(2)
    );
    let negative = write(dir.path(), "neg.json", r#"{"tol": -1}"#);
    assert_eq!(
        mapcones(&["classify", &input, "--config", &negative])
            .status
            .code(),
        Some(2)
    );
}
