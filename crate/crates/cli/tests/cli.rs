use std::io::Write;
use std::process::{Command, Output};

use tempfile::NamedTempFile;

const GREAT: &str = r#"{
  "ambient_n": 3,
  "K": {"kind": "great_subsphere", "k": 1, "axes": [0, 1]},
  "L": {"kind": "great_subsphere", "k": 1, "axes": [2, 3]},
  "method": "main"
}"#;

fn spec_file(text: &str) -> NamedTempFile {
    let mut f = NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

fn sphlink(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sphlink")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn link_reports_linking_number_one() {
    let f = spec_file(GREAT);
    let o = sphlink(&["link", f.path().to_str().unwrap(), "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["result"]["nearest_integer"], 1);
    assert_eq!(v["result"]["linking_number"], 1);
    assert_eq!(v["spec"]["method"], "main");
    assert!(v.get("wall_time_seconds").is_none());
}

#[test]
fn human_summary_and_timing() {
    let f = spec_file(GREAT);
    let o = sphlink(&["link", f.path().to_str().unwrap(), "--timing"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("linking number 1"), "{out}");
    assert!(out.contains("wall time"));
}

#[test]
fn dimension_mismatch_exits_one_and_cites_the_rule() {
    let f = spec_file(&GREAT.replace("\"ambient_n\": 3", "\"ambient_n\": 4"));
    let o = sphlink(&["link", f.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("k + l = n - 1"), "{}", stderr(&o));
}

#[test]
fn malformed_json_names_the_position() {
    let f = spec_file("{\n  \"ambient_n\": 3,\n  \"K\": [\n");
    let o = sphlink(&["link", f.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));
}

#[test]
fn unconverged_runs_exit_two() {
    let f = spec_file(GREAT);
    let o = sphlink(&["link", f.path().to_str().unwrap(), "--grid", "k=2,l=2", "--max-level", "0", "--tol", "1e-300"]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
}

#[test]
fn overrides_are_echoed_in_the_report() {
    let f = spec_file(GREAT);
    let o = sphlink(&["link", f.path().to_str().unwrap(), "--json", "--grid", "k=16,l=24", "--min-alpha", "0.02"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["config"]["base_grid"], serde_json::json!([16, 24]));
    assert_eq!(v["config"]["thresholds"]["min_alpha"], 0.02);
    assert_eq!(v["spec"]["grid"]["k"], 16);
}

#[test]
fn bad_flags_are_validation_errors() {
    let f = spec_file(GREAT);
    let o = sphlink(&["link", f.path().to_str().unwrap(), "--grid", "q=3"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(sphlink(&["nonsense"]).status.code(), Some(1));
    assert_eq!(sphlink(&["--help"]).status.code(), Some(0));
}

#[test]
fn oracle_subcommand_agrees() {
    let f = spec_file(GREAT);
    let o = sphlink(&["oracle", f.path().to_str().unwrap(), "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["result"]["method"], "gauss_oracle");
    assert_eq!(v["result"]["linking_number"], 1);
    assert_eq!(v["pole"].as_array().unwrap().len(), 4);
}

#[test]
fn phi_table_csv() {
    let o = sphlink(&["phi", "--k", "1", "--l", "1", "--points", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "alpha,phi,kernel_ratio,convolution");
    assert_eq!(lines.len(), 6);
    // phi_{1,1}(π/2) = 1/2
    assert!(lines[3].starts_with("1.5707963267948966e0,5.0000000000000000e-1"), "{}", lines[3]);
    let o = sphlink(&["phi", "--k", "2", "--l", "2", "--kernel-mode", "closed_form"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn convergence_table() {
    let f = spec_file(GREAT);
    let o = sphlink(&["convergence", f.path().to_str().unwrap(), "--levels", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("level,nodes,value,error_estimate,converged"));
    assert_eq!(out.lines().count(), 4);
}

#[test]
fn catalog_listing() {
    let o = sphlink(&["catalog"]);
    let out = stdout(&o);
    for kind in ["great_subsphere", "hopf_fiber", "clifford_torus_curve"] {
        assert!(out.contains(kind));
    }
    let o = sphlink(&["catalog", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let clifford = v
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["kind"] == "clifford_torus_curve")
        .unwrap();
    let names: Vec<&str> = clifford["parameters"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["name"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"p") && names.contains(&"q") && names.contains(&"phase"));
}

#[test]
fn worker_count_does_not_change_reports() {
    let f = spec_file(&GREAT.replace(
        "\"K\": {\"kind\": \"great_subsphere\", \"k\": 1, \"axes\": [0, 1]}",
        "\"K\": {\"kind\": \"clifford_torus_curve\", \"p\": 2, \"q\": 3}",
    ));
    let run = |workers: &str| {
        Command::new(env!("CARGO_BIN_EXE_sphlink"))
            .args(["link", f.path().to_str().unwrap(), "--json"])
            .env("SPHLINK_WORKERS", workers)
            .output()
            .unwrap()
    };
    let a = run("1");
    let b = run("8");
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn reads_spec_from_stdin() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_sphlink"))
        .args(["link", "-"])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(GREAT.as_bytes()).unwrap();
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(0));
}
