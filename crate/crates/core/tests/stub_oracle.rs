// SPDX-License-Identifier: Apache-2.0

//! Drives the stub oracle binary through the process-level harness.

use rtlfix_core::concolic::InputSet;
use rtlfix_core::corpus::load;
use rtlfix_core::oracle::{differential_check, run_reference, CheckError, ModelSpec, OracleError, Verdict};
use rtlfix_core::sim::InputVector;

fn stub(extra: &[&str]) -> ModelSpec {
    let mut cmd = vec![env!("CARGO_BIN_EXE_rtlfix-stub-oracle").to_string()];
    cmd.extend(extra.iter().map(|s| s.to_string()));
    ModelSpec::new(&cmd)
}

fn walk_right() -> InputVector {
    let d = load("listing1");
    InputVector::from_rows(
        &d.design.input_ports(),
        &[&[("reset", 1), ("in", 0)], &[("reset", 0), ("in", 2)], &[("reset", 0), ("in", 0)]],
    )
}

#[test]
fn counter_session_over_the_wire() {
    let d = load("listing2");
    let t = run_reference(&stub(&["--tags"]), &d.design.input_ports(), &d.design.output_ports(), &walk_right()).unwrap();
    let outs: Vec<u64> = t.cycles.iter().map(|c| c.outputs["out"].value).collect();
    assert_eq!(outs, vec![0, 1, 0]);
    assert_eq!(t.cycles[1].tags, vec!["S_INC".to_string()]);
}

#[test]
fn listing1_fails_and_listing2_passes_over_processes() {
    let set = InputSet::seeds(vec![walk_right()]);
    let v1 = differential_check(&load("listing1"), &stub(&[]), &set, 2).unwrap();
    assert_eq!(v1.mismatches()[0].summary(), "cycle 1: Expected out=1, Got out=0");
    assert_eq!(differential_check(&load("listing2"), &stub(&[]), &set, 2).unwrap(), Verdict::Pass { vacuous: false });
}

#[test]
fn rtl_mode_serves_a_verilog_file() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/designs/listing2.v");
    let set = InputSet::seeds(vec![walk_right()]);
    assert!(differential_check(&load("listing2"), &stub(&["--rtl", path]), &set, 1).unwrap().is_pass());
    assert!(!differential_check(&load("listing1"), &stub(&["--rtl", path]), &set, 1).unwrap().is_pass());
}

#[test]
fn injected_faults_surface_as_errors() {
    let d = load("listing2");
    let (i, o) = (d.design.input_ports(), d.design.output_ports());
    let e = run_reference(&stub(&["--malformed-at", "1"]), &i, &o, &walk_right()).unwrap_err();
    assert!(matches!(e, OracleError::Protocol { line: 3, .. }), "{e}");
    let e = run_reference(&stub(&["--crash-at", "2"]), &i, &o, &walk_right()).unwrap_err();
    assert!(matches!(e, OracleError::Crashed { cycle: 2, .. }), "{e}");
    let e = run_reference(&stub(&["--error-at", "0"]), &i, &o, &walk_right()).unwrap_err();
    assert!(matches!(e, OracleError::Reference { cycle: 0, .. }), "{e}");
    let e = run_reference(&stub(&["--drop-output", "out"]), &i, &o, &walk_right()).unwrap_err();
    assert!(e.to_string().contains("missing output `out`"));
}

#[test]
fn crash_in_a_set_names_vector_and_cycle() {
    let d = load("listing2");
    let set = InputSet::seeds(vec![InputVector::reset_seed(&d.design.input_ports(), 2), walk_right()]);
    let e = differential_check(&d, &stub(&["--crash-at", "2"]), &set, 2).unwrap_err();
    // Only the second vector has a third cycle.
    assert!(matches!(e, CheckError::Oracle { index: 1, source: OracleError::Crashed { cycle: 2, .. } }), "{e}");
}

#[test]
fn flipped_output_is_a_mismatch_not_an_error() {
    let set = InputSet::seeds(vec![walk_right()]);
    let v = differential_check(&load("listing2"), &stub(&["--flip-at", "2"]), &set, 1).unwrap();
    assert_eq!(v.mismatches()[0].cycle, 2);
}
