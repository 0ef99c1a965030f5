// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use super::*;
use crate::concolic::{classify, explore, BranchCoverage, ExploreBudget, InputSet};
use crate::corpus::{load, source, LISTING1_RAW};
use crate::oracle::{differential_check, CounterModel, InProcess};
use crate::sim::{InputVector, Trace};
use crate::verilog::parse_module;

fn listing1_mismatch() -> MismatchReport {
    let d = load("listing1");
    let v = InputVector::from_rows(
        &d.design.input_ports(),
        &[&[("reset", 1), ("in", 0)], &[("reset", 0), ("in", 2)], &[("reset", 0), ("in", 0)]],
    );
    let verdict = differential_check(&d, &InProcess(CounterModel::default), &InputSet::seeds(vec![v]), 1).unwrap();
    verdict.mismatches()[0].clone()
}

#[test]
fn trace_debug_has_three_sections() {
    let p = build_trace_debug_prompt(LISTING1_RAW, &listing1_mismatch());
    assert_eq!(p.kind, PromptKind::TraceDebug);
    let titles: Vec<String> = p.sections().into_iter().map(|(t, _)| t).collect();
    assert_eq!(titles, vec!["Original Code", "Verification Failure Report", "Trace Feedback"]);
}

#[test]
fn trace_feedback_shows_counter_one_while_out_stays_low() {
    let p = build_trace_debug_prompt(LISTING1_RAW, &listing1_mismatch());
    let s = p.sections();
    let fail = &s[1].1;
    assert!(fail.contains("First divergent cycle: 1"));
    assert!(fail.contains("Expected out=0x1, Got out=0x0"));
    let trace = &s[2].1;
    assert!(trace.contains("### Execution Paths"));
    assert!(trace.contains("- cycle 1: B_3, B_7  <-- first mismatch"));
    assert!(trace.contains("### Internal State Snapshots"));
    assert!(trace.contains("- cycle 1: regs [counter=0x01 out=0x0] outputs [out=0x0]"), "{trace}");
}

#[test]
fn zero_cycle_trace_says_no_cycles() {
    let mut r = listing1_mismatch();
    r.trace = Trace { design_hash: r.trace.design_hash.clone(), records: vec![] };
    let p = build_trace_debug_prompt(LISTING1_RAW, &r);
    let s = p.sections();
    assert_eq!(s.len(), 3);
    assert!(s[2].1.contains("no cycles"));
}

#[test]
fn code_with_hash_headers_does_not_break_splitting() {
    let code = "module m;\n## not a header\nendmodule";
    let p = build_trace_debug_prompt(code, &listing1_mismatch());
    assert_eq!(p.sections().len(), 3);
    assert!(p.sections()[0].1.contains("## not a header"));
}

#[test]
fn syntax_prompt_pairs_code_and_diagnostics() {
    let bad = LISTING1_RAW.replacen("counter <= 8'h00;", "counter <= 8'h00", 1);
    let errs = parse_module(&bad).unwrap_err();
    let p = build_syntax_prompt(&bad, errs.diagnostics());
    let s = p.sections();
    assert_eq!(s[0].0, "Original Code");
    assert_eq!(s[1].0, "Compiler Diagnostics");
    assert!(s[1].1.starts_with("1. error at line "), "{}", s[1].1);
    assert!(s[1].1.contains("source: `"));
    assert_eq!(p.data["diagnostics"].as_array().unwrap().len(), errs.diagnostics().len());
}

fn dead_report() -> (crate::instrument::InstrumentedDesign, CoverageReport) {
    let d = load("dead_branch");
    let seeds = InputSet::seeds(vec![InputVector::reset_seed(&d.design.input_ports(), 3)]);
    let out = explore(&d, &seeds, ExploreBudget::default()).unwrap();
    (d, out.report)
}

#[test]
fn redundancy_prompt_lists_dead_branch_with_location() {
    let (d, r) = dead_report();
    let p = build_redundancy_prompt(source("dead_branch").unwrap(), &r, &d.branch_map, &d.design);
    assert_eq!(p.kind, PromptKind::Redundancy);
    let listed = listed_branches(&p.text);
    assert_eq!(listed.len(), 1);
    let info = d.branch_map.get(listed[0]).unwrap();
    assert!(p.text.contains(&format!("at line {}, column {} (if arm): `x > 8'hFF`", info.pos.line, info.pos.column)));
    assert!(p.text.contains("without altering the functionality of reachable branches"));
    assert!(p.text.contains("FSM default states"));
}

#[test]
fn redundancy_prompt_names_a_dead_case_default() {
    let src = "module m(input wire clk, input wire [1:0] s, output reg [1:0] q);\n\
               always @(posedge clk) begin\n\
                 case (s)\n\
                   2'd0: q <= 2'd1;\n\
                   2'd1: q <= 2'd2;\n\
                   2'd2: q <= 2'd3;\n\
                   2'd3: q <= 2'd0;\n\
                   default: q <= 2'd0;\n\
                 endcase\n\
               end\nendmodule\n";
    let d = crate::instrument::InstrumentedDesign::from_module(parse_module(src).unwrap()).unwrap();
    let seeds = InputSet::seeds(vec![InputVector::from_rows(&d.design.input_ports(), &[&[("s", 0)], &[("s", 0)]])]);
    let out = explore(&d, &seeds, ExploreBudget::default()).unwrap();
    let p = build_redundancy_prompt(src, &out.report, &d.branch_map, &d.design);
    assert_eq!(listed_branches(&p.text), vec![BranchId(5)]);
    assert!(p.text.contains("- B_5 at line 8,"), "{}", p.text);
    assert!(p.text.contains("(case default)"));
}

#[test]
fn unknown_branches_are_not_candidates_and_empty_is_noop() {
    let d = load("listing1");
    let mut hits = BTreeMap::new();
    for b in d.branch_map.ids() {
        hits.insert(b, 1);
    }
    hits.insert(BranchId(5), 0);
    let r = classify(&hits, &[]);
    assert_eq!(r.branches[&BranchId(5)], BranchCoverage { hits: 0, class: BranchClass::Unknown });
    let p = build_redundancy_prompt(LISTING1_RAW, &r, &d.branch_map, &d.design);
    assert_eq!(p.kind, PromptKind::NoOp);
    assert!(listed_branches(&p.text).is_empty());
    assert_eq!(p.data["candidates"], json!([]));
}

#[test]
fn coverage_message_reuses_renderer() {
    let all = vec!["S_RESET".to_string(), "S_INC".into(), "S_HOLD".into()];
    let p = build_coverage_message("class Counter: ...", &all, &["S_RESET".to_string()], 33.3);
    assert_eq!(p.kind, PromptKind::CoverageMessage);
    let titles: Vec<String> = p.sections().into_iter().map(|(t, _)| t).collect();
    assert_eq!(titles, vec!["Original Code", "Uncovered Regions", "Instructions"]);
    assert!(p.text.contains("- S_INC at reference model"));
    assert!(!p.text.contains("- S_RESET"));
    assert_eq!(build_coverage_message("x", &all, &all, 100.0).kind, PromptKind::NoOp);
}

#[test]
fn artifact_writes_markdown_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let p = build_trace_debug_prompt(LISTING1_RAW, &listing1_mismatch());
    let (md, js) = p.write(dir.path(), "debug").unwrap();
    assert_eq!(std::fs::read_to_string(md).unwrap(), p.text);
    let side: Value = serde_json::from_str(&std::fs::read_to_string(js).unwrap()).unwrap();
    assert_eq!(side["kind"], "trace-debug");
    assert_eq!(side["data"]["mismatch"]["cycle"], 1);
}

#[test]
fn splitter_round_trips_every_kind() {
    let (d, r) = dead_report();
    let arts = vec![
        build_trace_debug_prompt(LISTING1_RAW, &listing1_mismatch()),
        build_redundancy_prompt(source("dead_branch").unwrap(), &r, &d.branch_map, &d.design),
        build_syntax_prompt("module m\nendmodule", parse_module("module m\nendmodule").unwrap_err().diagnostics()),
        build_coverage_message("m", &["A".into()], &[], 0.0),
    ];
    for a in arts {
        let (pre, secs) = split_sections(&a.text);
        let mut rebuilt = format!("{pre}\n\n");
        for (t, b) in &secs {
            rebuilt.push_str(&format!("## {t}\n\n{b}\n\n"));
        }
        assert_eq!(split_sections(&rebuilt), (pre, secs));
    }
}
