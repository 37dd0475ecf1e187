use std::io::Write;
use std::process::{Command, Output};

fn cpi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpi")).args(args).output().unwrap()
}

fn example() -> String {
    format!("{}/../../models/example.cpi", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn synthesize_within_bound() {
    let out = cpi(&["synthesize", &example(), "--bound", "155,7.5"]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["expected_impact"], serde_json::json!([151.0, 6.6]));
    assert_eq!(json["expected_impact_exact"], serde_json::json!(["151", "6.6"]));
}

#[test]
fn synthesize_below_every_assignment() {
    let out = cpi(&["synthesize", &example(), "--bound", "100,1"]);
    assert_eq!(out.status.code(), Some(1));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["exists"], serde_json::json!(false));
}

#[test]
fn all_engines_agree() {
    for (bound, code) in [("155,7.5", 0), ("131,7.5", 1), ("161,9.6", 0)] {
        let out = cpi(&["synthesize", &example(), "--bound", bound, "--engine", "all"]);
        assert_eq!(out.status.code(), Some(code), "{bound}");
        let out = cpi(&["decide", &example(), "--bound", bound]);
        assert_eq!(out.status.code(), Some(code), "{bound}");
    }
}

#[test]
fn broken_model_reports_position() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "A[1, 2]{{1}},\n(B[1, 2]{{1}} / [C] D[1]{{1}})").unwrap();
    let out = cpi(&["validate", file.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("2:"), "{err}");
    assert!(err.contains("inconsistent impact dimension"), "{err}");
}

#[test]
fn validate_accepts_example() {
    let out = cpi(&["validate", &example()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("ok:"));
}

#[test]
fn budget_breach_exits_3() {
    let out = cpi(&["synthesize", &example(), "--bound", "155,7.5", "--node-cap", "10"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn dimension_mismatch_exits_2() {
    let out = cpi(&["synthesize", &example(), "--bound", "155"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dot_outputs() {
    for flag in [None, Some("--spin"), Some("--board")] {
        let mut args = vec!["dot", "--text", "A[1]{1}, (B[1]{1} ^ [N: 1/2] C[2]{1})"];
        args.extend(flag);
        let out = cpi(&args);
        assert_eq!(out.status.code(), Some(0));
        assert!(String::from_utf8(out.stdout).unwrap().starts_with("digraph"));
    }
    let out = cpi(&["synthesize", &example(), "--bound", "155,7.5", "--format", "dot"]);
    assert!(String::from_utf8(out.stdout).unwrap().contains("rank 0"));
}

#[test]
fn bench_sweep_passes() {
    let out = cpi(&["bench", "--seeds", "30", "--bounds", "10"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("0 disagreements"));
}
