// SPDX-License-Identifier: Apache-2.0

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::stub::{run_in_process, serve, ServeEnd};
use super::*;
use crate::concolic::{random_vector, InputSet};
use crate::corpus::load;

fn walk_right(d: &InstrumentedDesign) -> InputVector {
    InputVector::from_rows(
        &d.design.input_ports(),
        &[&[("reset", 1), ("in", 0)], &[("reset", 0), ("in", 2)], &[("reset", 0), ("in", 0)]],
    )
}

fn counter() -> InProcess<fn() -> CounterModel> {
    InProcess(CounterModel::default)
}

fn outs(t: &RefTrace) -> Vec<u64> {
    t.cycles.iter().map(|c| c.outputs["out"].value).collect()
}

#[test]
fn counter_model_on_walkthrough_right_column() {
    let d = load("listing2");
    let t = run_in_process(&mut CounterModel::default(), &walk_right(&d)).unwrap();
    // `out` rises on the edge where the counter becomes one.
    assert_eq!(outs(&t), vec![0, 1, 0]);
    let tags: Vec<&str> = t.cycles.iter().map(|c| c.tags[0].as_str()).collect();
    assert_eq!(tags, vec!["S_RESET", "S_INC", "S_DEC"]);
}

#[test]
fn counter_model_matches_listing2_rtl() {
    let d = load("listing2");
    let ports = d.design.input_ports();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut rtl = RtlModel::new(Arc::clone(&d.design));
    for _ in 0..300 {
        // Small input alphabet so the matched and latched arms all occur.
        let mut v = random_vector(&ports, 12, &mut rng);
        for (i, row) in v.cycles.iter_mut().enumerate() {
            let pick = [0x00, 0x02, 0xFF, 0x05][(i * 7 + row["in"].value as usize) % 4];
            row["in"].value = pick;
        }
        let a = run_in_process(&mut CounterModel::default(), &v).unwrap();
        let b = run_in_process(&mut rtl, &v).unwrap();
        assert_eq!(outs(&a), outs(&b), "{v}");
    }
}

#[test]
fn listing1_fails_where_counter_reaches_one() {
    let d = load("listing1");
    let set = InputSet::seeds(vec![walk_right(&d)]);
    let Verdict::Fail(m) = differential_check(&d, &counter(), &set, 2).unwrap() else { panic!("expected fail") };
    assert_eq!(m.len(), 1);
    let r = &m[0];
    assert_eq!(r.cycle, 1);
    assert_eq!(r.trace.records[1].regs["counter"].value, 1);
    assert_eq!(r.diffs.len(), 1);
    assert_eq!((r.diffs[0].expected.value, r.diffs[0].observed.value), (1, 0));
    assert_eq!(r.summary(), "cycle 1: Expected out=1, Got out=0");
}

#[test]
fn verdict_json_round_trips() {
    let d = load("listing1");
    let set = InputSet::seeds(vec![walk_right(&d)]);
    let v = differential_check(&d, &counter(), &set, 1).unwrap();
    let back = Verdict::from_json(&v.to_json(), &d.design).unwrap();
    let (a, b) = (&v.mismatches()[0], &back.mismatches()[0]);
    assert_eq!((a.index, a.cycle, &a.vector, &a.diffs, &a.reference), (b.index, b.cycle, &b.vector, &b.diffs, &b.reference));
    let strip = |t: &Trace| t.records.iter().map(|r| (r.cycle, r.branches.clone(), r.regs.clone(), r.outs.clone())).collect::<Vec<_>>();
    assert_eq!(strip(&a.trace), strip(&b.trace));
    let pass = Verdict::Pass { vacuous: true };
    assert_eq!(Verdict::from_json(&pass.to_json(), &d.design).unwrap(), pass);
    assert!(Verdict::from_json(&serde_json::json!({"verdict": "maybe"}), &d.design).is_err());
}

#[test]
fn listing2_passes() {
    let d = load("listing2");
    let set = InputSet::seeds(vec![walk_right(&d)]);
    assert_eq!(differential_check(&d, &counter(), &set, 4).unwrap(), Verdict::Pass { vacuous: false });
}

#[test]
fn first_divergence_is_minimal() {
    let d = load("listing1");
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let vs: Vec<InputVector> = (0..50).map(|_| random_vector(&d.design.input_ports(), 10, &mut rng)).collect();
    let set = InputSet::seeds(vs);
    for m in differential_check(&d, &counter(), &set, 4).unwrap().mismatches() {
        for c in 0..m.cycle {
            assert_eq!(m.trace.records[c].outs["out"], m.reference.cycles[c].outputs["out"]);
        }
        assert!(m.diffs.iter().all(|x| x.expected != x.observed));
    }
}

#[test]
fn empty_set_passes_vacuously() {
    let d = load("listing1");
    assert_eq!(differential_check(&d, &counter(), &InputSet::default(), 1).unwrap(), Verdict::Pass { vacuous: true });
}

#[test]
fn check_is_deterministic_across_job_counts() {
    let d = load("listing1");
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let set = InputSet::seeds((0..40).map(|_| random_vector(&d.design.input_ports(), 6, &mut rng)).collect());
    let one = differential_check(&d, &counter(), &set, 1).unwrap();
    assert_eq!(one, differential_check(&d, &counter(), &set, 8).unwrap());
}

fn session(lines: &[&str], faults: &Faults, tags: bool) -> (String, ServeEnd) {
    let input = lines.join("\n");
    let mut out = Vec::new();
    let end = serve(&mut CounterModel::default(), input.as_bytes(), &mut out, faults, tags).unwrap();
    (String::from_utf8(out).unwrap(), end)
}

const INIT: &str = r#"{"type":"init","ports":{"reset":{"direction":"input","width":1},"in":{"direction":"input","width":8},"out":{"direction":"output","width":1}}}"#;

#[test]
fn wire_session_is_byte_exact() {
    let (out, end) = session(
        &[
            INIT,
            r#"{"type":"cycle","n":0,"inputs":{"reset":"0x1","in":"0x00"}}"#,
            r#"{"type":"cycle","n":1,"inputs":{"reset":"0x0","in":"0x02"}}"#,
            r#"{"type":"end"}"#,
        ],
        &Faults::default(),
        true,
    );
    assert_eq!(end, ServeEnd::Done);
    assert_eq!(
        out,
        concat!(
            "{\"type\":\"ok\"}\n",
            "{\"type\":\"out\",\"n\":0,\"outputs\":{\"out\":\"0x0\"},\"tags\":[\"S_RESET\"]}\n",
            "{\"type\":\"out\",\"n\":1,\"outputs\":{\"out\":\"0x1\"},\"tags\":[\"S_INC\"]}\n",
        )
    );
}

#[test]
fn request_lines_match_the_wire_format() {
    let d = load("listing1");
    let ports = protocol::port_table(&d.design.input_ports(), &d.design.output_ports());
    assert_eq!(Request::Init { ports }.to_line(), INIT);
    assert_eq!(Request::End.to_line(), r#"{"type":"end"}"#);
    let r: Response = serde_json::from_str(r#"{"type":"out","n":3,"outputs":{"out":"0x1"}}"#).unwrap();
    assert_eq!(r, Response::Out { n: 3, outputs: [("out".to_string(), "0x1".to_string())].into(), tags: None });
}

#[test]
fn serve_reports_harness_violations() {
    let (out, end) = session(&[r#"{"type":"cycle","n":0,"inputs":{}}"#], &Faults::default(), false);
    assert!(matches!(end, ServeEnd::Violation(_)));
    assert_eq!(out, "{\"type\":\"error\",\"message\":\"cycle before init\"}\n");
    let (out, end) = session(&["nonsense"], &Faults::default(), false);
    assert!(matches!(end, ServeEnd::Violation(_)));
    assert!(out.starts_with("{\"type\":\"error\",\"message\":\"bad request"), "{out}");
    let (out, end) = session(&[r#"{"type":"end"}"#], &Faults::default(), false);
    assert_eq!((out.as_str(), end), ("", ServeEnd::Done));
}

fn sh(script: &str) -> ModelSpec {
    let mut m = ModelSpec::new(&["sh", "-c", script]);
    m.timeout_ms = 5_000;
    m
}

type Ports = Vec<(String, u32)>;

fn ports1() -> (Ports, Ports) {
    (vec![("reset".into(), 1), ("in".into(), 8)], vec![("out".into(), 1)])
}

fn two_cycles() -> InputVector {
    let (i, _) = ports1();
    InputVector::from_rows(&i, &[&[("reset", 1), ("in", 0)], &[("reset", 0), ("in", 0)]])
}

#[test]
fn scripted_model_round_trip() {
    let (i, o) = ports1();
    let m = sh(r#"read l; echo '{"type":"ok"}'; read l; echo '{"type":"out","n":0,"outputs":{"out":"0x0"}}'; read l; echo '{"type":"out","n":1,"outputs":{"out":"0x1"},"tags":["A"]}'; read l"#);
    let t = run_reference(&m, &i, &o, &two_cycles()).unwrap();
    assert_eq!(outs(&t), vec![0, 1]);
    assert_eq!(t.cycles[1].tags, vec!["A".to_string()]);
}

#[test]
fn malformed_line_names_its_line_number() {
    let (i, o) = ports1();
    let m = sh(r#"read l; echo '{"type":"ok"}'; read l; echo 'garbage here'"#);
    let e = run_reference(&m, &i, &o, &two_cycles()).unwrap_err();
    assert!(matches!(e, OracleError::Protocol { line: 2, .. }), "{e}");
}

#[test]
fn missing_output_is_a_protocol_violation() {
    let (i, o) = ports1();
    let m = sh(r#"read l; echo '{"type":"ok"}'; read l; echo '{"type":"out","n":0,"outputs":{}}'"#);
    let e = run_reference(&m, &i, &o, &two_cycles()).unwrap_err();
    assert!(e.to_string().contains("missing output `out`"), "{e}");
}

#[test]
fn crash_mid_vector_names_the_cycle() {
    let (i, o) = ports1();
    let m = sh(r#"read l; echo '{"type":"ok"}'; read l; echo '{"type":"out","n":0,"outputs":{"out":"0x0"}}'; read l; echo boom >&2; exit 4"#);
    let e = run_reference(&m, &i, &o, &two_cycles()).unwrap_err();
    assert_eq!(e, OracleError::Crashed { cycle: 1, stderr: "boom\n".into() });
}

#[test]
fn reference_exception_is_surfaced_verbatim() {
    let (i, o) = ports1();
    let m = sh(r#"read l; echo '{"type":"ok"}'; read l; echo '{"type":"error","message":"ZeroDivisionError: x"}'"#);
    let e = run_reference(&m, &i, &o, &two_cycles()).unwrap_err();
    assert_eq!(e, OracleError::Reference { cycle: 0, message: "ZeroDivisionError: x".into() });
}

#[test]
fn zero_cycle_vector_gives_empty_trace() {
    let (i, o) = ports1();
    let m = sh(r#"read l; echo '{"type":"ok"}'; read l"#);
    assert!(run_reference(&m, &i, &o, &InputVector::default()).unwrap().is_empty());
}

#[test]
fn unlaunchable_model_is_reported() {
    let (i, o) = ports1();
    let e = run_reference(&ModelSpec::new(&["/nonexistent/model"]), &i, &o, &two_cycles()).unwrap_err();
    assert!(matches!(e, OracleError::Launch { .. }));
}

#[test]
fn error_through_differential_check_names_the_vector() {
    let d = load("listing1");
    let crash_second = sh(r#"read l; echo '{"type":"ok"}'; read l; exit 1"#);
    let set = InputSet::seeds(vec![walk_right(&d)]);
    let e = differential_check(&d, &crash_second, &set, 1).unwrap_err();
    assert!(matches!(e, CheckError::Oracle { index: 0, source: OracleError::Crashed { cycle: 0, .. } }), "{e}");
}
