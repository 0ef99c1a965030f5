// SPDX-License-Identifier: Apache-2.0

//! End-to-end runs of the `rtlfix` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_rtlfix");

fn design(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/designs").join(format!("{name}.v"))
}

fn rtlfix(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).output().expect("run rtlfix")
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))).unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const WALK_SEED: &str = r#"[{"reset":1,"in":"0x00"},{"reset":0,"in":"0x00"},{"reset":0,"in":"0x00"}]"#;

fn oracle_arg() -> String {
    format!("{BIN} stub-oracle")
}

#[test]
fn simulate_reports_the_reset_branch_at_cycle_zero() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("inputs.json"), WALK_SEED).unwrap();
    let o = rtlfix(d.path(), &["simulate", design("listing1").to_str().unwrap(), "inputs.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let trace = json(d.path().join("trace.json"));
    assert_eq!(trace[0]["branches"], serde_json::json!(["B_1"]));
    assert_eq!(trace.as_array().unwrap().len(), 3);
    assert!(d.path().join("trace.jsonl").exists());
    assert!(stdout(&o).contains("cycle 0: [B_1]"));
}

#[test]
fn metrics_with_all_correct_samples_is_one() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("results.csv"), "problem,n,c\np1,10,10\np2,5,5\np3,7,7\n").unwrap();
    let o = rtlfix(d.path(), &["metrics", "results.csv", "--k", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(d.path().join("metrics.json"))["pass@5"], 1.0);
}

#[test]
fn metrics_rejects_k_above_n() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("results.csv"), "problem,n,c\np1,3,1\n").unwrap();
    let o = rtlfix(d.path(), &["metrics", "results.csv", "--k", "5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn concolic_from_the_walk_seed_reaches_full_coverage() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("seed.json"), WALK_SEED).unwrap();
    let o = rtlfix(d.path(), &["concolic", design("listing1").to_str().unwrap(), "--seed", "seed.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(d.path().join("coverage.json"))["coverage_pct"], 100.0);
    let inputs = json(d.path().join("full_inputs.json"));
    assert!(inputs.as_array().unwrap().len() >= 2);
}

#[test]
fn diff_fails_listing1_and_passes_listing2() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("seed.json"), WALK_SEED).unwrap();
    let o = rtlfix(d.path(), &["concolic", design("listing1").to_str().unwrap(), "--seed", "seed.json"]);
    assert_eq!(o.status.code(), Some(0));

    let o = rtlfix(d.path(), &["diff", design("listing1").to_str().unwrap(), "full_inputs.json", "--oracle", &oracle_arg(), "--jobs", "2"]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("Expected out=1, Got out=0"), "{}", stdout(&o));
    let v = json(d.path().join("verdict.json"));
    assert_eq!(v["verdict"], "fail");

    let o = rtlfix(d.path(), &["prompt", "trace", design("listing1").to_str().unwrap(), "verdict.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let md = std::fs::read_to_string(d.path().join("trace-debug.md")).unwrap();
    assert!(md.contains("Expected out=0x1, Got out=0x0"), "{md}");

    let o = rtlfix(d.path(), &["diff", design("listing2").to_str().unwrap(), "full_inputs.json", "--oracle", &oracle_arg()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn parse_reports_diagnostics_with_exit_one() {
    let d = tempfile::tempdir().unwrap();
    let broken = std::fs::read_to_string(design("listing2")).unwrap().replacen("counter <= 8'h00;", "counter <= 8'h00", 1);
    std::fs::write(d.path().join("broken.v"), broken).unwrap();
    let o = rtlfix(d.path(), &["parse", "broken.v"]);
    assert_eq!(o.status.code(), Some(1));
    let diags = json(d.path().join("diagnostics.json"));
    assert_eq!(diags["ok"], false);
    assert!(stdout(&o).contains("broken.v:"), "{}", stdout(&o));

    let o = rtlfix(d.path(), &["prompt", "syntax", "broken.v"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(d.path().join("syntax-debug.md").exists());

    let o = rtlfix(d.path(), &["parse", design("listing2").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn instrument_writes_rtl_and_branch_map() {
    let d = tempfile::tempdir().unwrap();
    let o = rtlfix(d.path(), &["instrument", design("listing1").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let map = json(d.path().join("listing1.branches.json"));
    assert_eq!(map.as_object().unwrap().len(), 7);
    let v = std::fs::read_to_string(d.path().join("listing1.instrumented.v")).unwrap();
    assert!(v.contains("$display(\"B_7\")"));
}

#[test]
fn usage_and_tool_errors_exit_two() {
    let d = tempfile::tempdir().unwrap();
    let o = rtlfix(d.path(), &["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    let o = rtlfix(d.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    let o = rtlfix(d.path(), &["simulate", "missing.v", "inputs.json"]);
    assert_eq!(o.status.code(), Some(2));
    let o = rtlfix(d.path(), &["diff", design("listing1").to_str().unwrap(), "x.json"]);
    assert_eq!(o.status.code(), Some(2));
}

fn write_loop_fixture(dir: &Path, responses: &[&str]) {
    std::fs::copy(design("listing1"), dir.join("listing1.v")).unwrap();
    std::fs::write(
        dir.join("ports.json"),
        r#"{"ports":[{"name":"clock","direction":"input","width":1},{"name":"reset","direction":"input","width":1},{"name":"in","direction":"input","width":8},{"name":"out","direction":"output","width":1}]}"#,
    )
    .unwrap();
    std::fs::write(dir.join("seed.json"), WALK_SEED).unwrap();
    std::fs::write(dir.join("responses.json"), serde_json::to_string(responses).unwrap()).unwrap();
    std::fs::write(dir.join("run.toml"), "[repair]\nmax_functional_iterations = 2\nredundancy = \"off\"\n").unwrap();
    let manifest = format!(
        "problem = \"counter\"\nrtl = \"listing1.v\"\nport_spec = \"ports.json\"\noracle = [\"{BIN}\", \"stub-oracle\"]\nseed = \"seed.json\"\nconfig = \"run.toml\"\noutput_dir = \"out\"\n"
    );
    std::fs::write(dir.join("run.toml.manifest"), manifest).unwrap();
}

#[test]
fn loop_with_scripted_responses_verifies_listing1() {
    let d = tempfile::tempdir().unwrap();
    let fixed = std::fs::read_to_string(design("listing2")).unwrap();
    write_loop_fixture(d.path(), &[&format!("Here is the fix:\n```verilog\n{fixed}```\n")]);
    let o = rtlfix(d.path(), &["loop", "run.toml.manifest", "--mock-responses", "responses.json"]);
    assert_eq!(o.status.code(), Some(0), "{}\n{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    let out = json(d.path().join("out/outcome.json"));
    assert_eq!(out["status"], "verified");
    assert_eq!(out["problem"], "counter");
    assert_eq!(out["iterations"].as_array().unwrap().len(), 1);
    assert!(d.path().join("out/final.v").exists());
    assert!(d.path().join("out/prompts/01-trace-debug.md").exists());
    assert_eq!(json(d.path().join("out/coverage.json"))["coverage_pct"], 100.0);
}

#[test]
fn loop_that_never_fixes_exhausts_with_exit_one() {
    let d = tempfile::tempdir().unwrap();
    let same = std::fs::read_to_string(design("listing1")).unwrap();
    write_loop_fixture(d.path(), &[&same, &same, &same]);
    let o = rtlfix(d.path(), &["loop", "run.toml.manifest", "--mock-responses", "responses.json"]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    let out = json(d.path().join("out/outcome.json"));
    assert_eq!(out["status"], "functional-exhausted");
    assert_eq!(out["iterations"].as_array().unwrap().len(), 2);
}

#[test]
fn loop_rejects_manifest_with_missing_files() {
    let d = tempfile::tempdir().unwrap();
    write_loop_fixture(d.path(), &[]);
    std::fs::remove_file(d.path().join("seed.json")).unwrap();
    let o = rtlfix(d.path(), &["loop", "run.toml.manifest", "--mock-responses", "responses.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));
}
