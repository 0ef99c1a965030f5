// SPDX-License-Identifier: Apache-2.0

use std::io::{BufRead, BufReader, Read, Write};
use std::sync::Arc;
use std::time::Duration;

use super::*;
use crate::corpus::{load, LISTING1_RAW};
use crate::oracle::{CounterModel, InProcess, RtlModel};

fn counter() -> InProcess<fn() -> CounterModel> {
    InProcess(CounterModel::default)
}

fn source(name: &str) -> &'static str {
    crate::corpus::source(name).unwrap()
}

fn listing2() -> &'static str {
    source("listing2")
}

fn spec_of(rtl: &str) -> PortSpec {
    PortSpec::from_module(&parse_module(rtl).unwrap())
}

fn fast() -> LoopConfig {
    LoopConfig { jobs: 2, ..LoopConfig::default() }
}

#[test]
fn listing1_is_fixed_in_one_functional_iteration() {
    let spec = spec_of(LISTING1_RAW);
    let mut mock = MockClient::new([listing2()]);
    let out = run_loop(LISTING1_RAW, &spec, &fast(), &mut mock, &counter(), &InputSet::default());
    assert_eq!(out.status, LoopStatus::Verified, "{:?}", out.log);
    assert_eq!(out.count(PromptKind::TraceDebug), 1);
    assert_eq!(out.count(PromptKind::SyntaxDebug), 0);
    assert!(listing2().ends_with(&out.final_rtl));
    assert_eq!(out.verdict, Some(Verdict::Pass { vacuous: false }));
    // The one prompt carried the failing trace.
    assert!(mock.prompts[0].contains("## Trace Feedback"));
    assert!(mock.prompts[0].contains("Expected out=0x1, Got out=0x0"), "{}", mock.prompts[0]);
    assert_eq!(out.log[0].verdict, StepVerdict::Fail);
}

#[test]
fn verified_design_passes_its_full_input_set() {
    let spec = spec_of(LISTING1_RAW);
    let mut mock = MockClient::new([listing2()]);
    let out = run_loop(LISTING1_RAW, &spec, &fast(), &mut mock, &counter(), &InputSet::default());
    let d = front_end(&out.final_rtl, &spec).unwrap();
    let v = differential_check(&d, &counter(), out.inputs.as_ref().unwrap(), 1).unwrap();
    assert_eq!(v, Verdict::Pass { vacuous: false });
}

#[test]
fn functional_budget_is_exact() {
    let spec = spec_of(LISTING1_RAW);
    let mut mock = MockClient::new(vec![LISTING1_RAW; 10]);
    let config = LoopConfig { max_functional_iterations: 3, ..fast() };
    let out = run_loop(LISTING1_RAW, &spec, &config, &mut mock, &counter(), &InputSet::default());
    assert_eq!(out.status, LoopStatus::FunctionalExhausted);
    assert_eq!(out.count(PromptKind::TraceDebug), 3);
    assert_eq!(mock.prompts.len(), 3);
    assert_eq!(mock.remaining(), 7);
    assert!(!out.verdict.unwrap().is_pass());
}

#[test]
fn missing_semicolon_is_fixed_in_one_syntax_iteration() {
    let broken = listing2().replacen("counter <= next_counter;", "counter <= next_counter", 1);
    assert_ne!(broken, listing2());
    let spec = spec_of(listing2());
    let mut mock = MockClient::new([listing2()]);
    let out = run_loop(&broken, &spec, &fast(), &mut mock, &counter(), &InputSet::default());
    assert_eq!(out.status, LoopStatus::Verified, "{:?}", out.log);
    assert_eq!(out.count(PromptKind::SyntaxDebug), 1);
    assert_eq!(out.count(PromptKind::TraceDebug), 0);
    assert!(mock.prompts[0].contains("## Compiler Diagnostics"));
}

#[test]
fn syntax_budget_is_exact() {
    let broken = listing2().replacen("endcase", "endcas", 1);
    let spec = spec_of(listing2());
    let mut mock = MockClient::new(vec![broken.clone(); 10]);
    let config = LoopConfig { max_syntax_iterations: 2, ..fast() };
    let out = run_loop(&broken, &spec, &config, &mut mock, &counter(), &InputSet::default());
    assert_eq!(out.status, LoopStatus::SyntaxExhausted);
    assert_eq!(out.count(PromptKind::SyntaxDebug), 2);
    assert_eq!(mock.prompts.len(), 2);
}

#[test]
fn syntax_then_functional_fix() {
    let broken = LISTING1_RAW.replacen("counter <= 8'h00;", "counter <= 8'h00", 1);
    let spec = spec_of(LISTING1_RAW);
    let mut mock = MockClient::new([LISTING1_RAW, listing2()]);
    let out = run_loop(&broken, &spec, &fast(), &mut mock, &counter(), &InputSet::default());
    assert_eq!(out.status, LoopStatus::Verified);
    let kinds: Vec<PromptKind> = out.log.iter().map(|r| r.kind).collect();
    assert_eq!(kinds, vec![PromptKind::SyntaxDebug, PromptKind::TraceDebug]);
}

#[test]
fn interface_mismatch_goes_through_syntax_repair() {
    let wrong = listing2().replace("output reg        out", "output reg  [1:0] out");
    let spec = spec_of(listing2());
    let mut mock = MockClient::new([listing2()]);
    let out = run_loop(&wrong, &spec, &fast(), &mut mock, &counter(), &InputSet::default());
    assert_eq!(out.status, LoopStatus::Verified);
    assert!(mock.prompts[0].contains("interface: out"), "{}", mock.prompts[0]);
}

#[test]
fn client_failure_ends_the_functional_phase() {
    let spec = spec_of(LISTING1_RAW);
    let mut mock = MockClient::new(Vec::<String>::new());
    let out = run_loop(LISTING1_RAW, &spec, &fast(), &mut mock, &counter(), &InputSet::default());
    assert_eq!(out.status, LoopStatus::FunctionalExhausted);
    assert_eq!(out.log.last().unwrap().verdict, StepVerdict::Error);
    assert!(out.log.last().unwrap().note.contains("client failure"));
}

#[test]
fn oracle_failure_is_logged() {
    let spec = spec_of(listing2());
    let broken = ModelSpec::new(&["/nonexistent/golden"]);
    let mut mock = MockClient::default();
    let out = run_loop(listing2(), &spec, &fast(), &mut mock, &broken, &InputSet::default());
    assert_eq!(out.status, LoopStatus::FunctionalExhausted);
    assert_eq!(out.log.len(), 1);
    assert!(out.log[0].note.contains("oracle failure"), "{}", out.log[0].note);
    assert!(mock.prompts.is_empty());
}

#[test]
fn loop_is_deterministic_with_a_mock() {
    let spec = spec_of(LISTING1_RAW);
    let go = || {
        let mut mock = MockClient::new([LISTING1_RAW, listing2()]);
        let out = run_loop(LISTING1_RAW, &spec, &fast(), &mut mock, &counter(), &InputSet::default());
        (out.to_json(), mock.prompts)
    };
    assert_eq!(go(), go());
}

#[test]
fn log_never_exceeds_budgets() {
    let spec = spec_of(LISTING1_RAW);
    for (s, f) in [(1, 1), (2, 3), (3, 2)] {
        let broken = LISTING1_RAW.replacen("endmodule", "endmodul", 1);
        let responses: Vec<&str> = [broken.as_str(), LISTING1_RAW].iter().cycle().take(20).copied().collect();
        let mut mock = MockClient::new(responses);
        let config = LoopConfig { max_syntax_iterations: s, max_functional_iterations: f, ..fast() };
        let out = run_loop(&broken, &spec, &config, &mut mock, &counter(), &InputSet::default());
        assert!(out.count(PromptKind::SyntaxDebug) <= s);
        assert!(out.count(PromptKind::TraceDebug) <= f);
        assert!(out.log.len() <= s + f + config.max_redundancy_iterations + 1);
    }
}

// Trial deletion.

fn dead_branch() -> (AstModule, BranchId, BranchId, InputSet) {
    let d = load("dead_branch");
    let m = parse_module(source("dead_branch")).unwrap();
    let find = |c: &str| d.branch_map.ids().find(|b| d.branch_map.get(*b).unwrap().condition == c).unwrap();
    let (dead, live) = (find("x > 8'hFF"), find("x > 8'hFE"));
    let seed = InputSet::seeds(vec![InputVector::reset_seed(&d.design.input_ports(), 3)]);
    let full = explore(&d, &seed, ExploreBudget::default()).unwrap();
    assert_eq!(full.report.with_class(BranchClass::PotentiallyUnreachable), vec![dead]);
    (m, dead, live, full.inputs)
}

fn rtl_oracle(m: &AstModule) -> InProcess<impl Fn() -> RtlModel + Sync> {
    let d = crate::instrument::instrument(m).unwrap().design;
    InProcess(move || RtlModel::new(Arc::clone(&d)))
}

#[test]
fn dead_arm_is_pruned_and_live_arm_restored() {
    let (m, dead, live, full) = dead_branch();
    let oracle = rtl_oracle(&m);
    let t = trial_delete(&m, &[dead, live], &oracle, &full, ExploreBudget::default(), 2).unwrap();
    assert_eq!(t.kept, vec![dead]);
    assert_eq!(t.restored, vec![live]);
    assert!(t.skipped.is_empty());
    assert!(t.verdict.is_pass());
    let text = pretty_print(&t.module);
    assert!(!text.contains("8'hFF") && !text.contains("8'haa") && !text.contains("8'hAA"), "{text}");
    assert!(text.contains("8'hFE") || text.contains("8'hfe"), "{text}");
    // Pruned module still checks out against the original on the old set.
    let d = crate::instrument::instrument(&t.module).unwrap();
    assert!(differential_check(&d, &oracle, &full, 2).unwrap().is_pass());
}

#[test]
fn empty_candidate_list_leaves_module_unchanged() {
    let (m, _, _, full) = dead_branch();
    let t = trial_delete(&m, &[], &rtl_oracle(&m), &full, ExploreBudget::default(), 1).unwrap();
    assert_eq!(pretty_print(&t.module), pretty_print(&m));
    assert!(t.kept.is_empty() && t.restored.is_empty());
    assert!(t.verdict.is_pass());
}

#[test]
fn removing_a_case_default_deletes_the_arm() {
    let mut m = parse_module(LISTING1_RAW).unwrap();
    assert!(pretty_print(&m).contains("default"));
    // Decision 0 is the reset `if`, decision 1 the case with three items.
    assert_eq!(remove_arm(&mut m, 1, 3), Removal::Removed);
    let text = pretty_print(&m);
    assert!(!text.contains("default"), "{text}");
    assert!(text.contains("8'hFF") || text.contains("8'hff"));
    assert!(parse_module(&text).is_ok());
}

#[test]
fn implicit_arms_cannot_be_removed() {
    let mut m = parse_module(listing2()).unwrap();
    let before = pretty_print(&m);
    assert_eq!(remove_arm(&mut m, 0, 3), Removal::Implicit);
    assert_eq!(remove_arm(&mut m, 9, 0), Removal::NotFound);
    assert_eq!(pretty_print(&m), before);
}

#[test]
fn removing_an_if_arm_keeps_the_other() {
    let mut m = parse_module(source("dead_branch")).unwrap();
    // Decision 1 is `x > 8'hFF`; dropping its else leaves the then body.
    assert_eq!(remove_arm(&mut m, 1, 1), Removal::Removed);
    let text = pretty_print(&m);
    assert!(!text.contains("8'hFF") && !text.contains("y <= x"), "{text}");
    assert!(parse_module(&text).is_ok());
}

#[test]
fn implicit_candidate_is_skipped() {
    let m = parse_module(listing2()).unwrap();
    let d = crate::instrument::instrument(&m).unwrap();
    let implicit = d.branch_map.ids().nth(3).unwrap();
    let seed = InputSet::seeds(vec![InputVector::reset_seed(&d.design.input_ports(), 3)]);
    let t = trial_delete(&m, &[implicit], &counter(), &seed, ExploreBudget::default(), 1).unwrap();
    assert_eq!(t.skipped, vec![implicit]);
    assert_eq!(pretty_print(&t.module), pretty_print(&m));
}

#[test]
fn both_arms_of_one_if_are_not_both_deleted() {
    let (m, dead, _, full) = dead_branch();
    let sibling = BranchId(dead.0 + 1);
    let t = trial_delete(&m, &[dead, sibling], &rtl_oracle(&m), &full, ExploreBudget::default(), 1).unwrap();
    // The else arm is live and comes back; the dead arm then goes.
    assert_eq!(t.restored, vec![sibling]);
    assert_eq!(t.kept, vec![dead]);
    assert!(t.verdict.is_pass());
}

#[test]
fn loop_prunes_with_trial_deletion() {
    let rtl = source("dead_branch");
    let m = parse_module(rtl).unwrap();
    let spec = PortSpec::from_module(&m);
    let config = LoopConfig { redundancy: RedundancyMode::TrialDelete, ..fast() };
    let mut mock = MockClient::default();
    let out = run_loop(rtl, &spec, &config, &mut mock, &rtl_oracle(&m), &InputSet::default());
    assert_eq!(out.status, LoopStatus::Verified);
    assert_eq!(out.count(PromptKind::Redundancy), 1);
    assert!(!out.final_rtl.contains("8'hFF"), "{}", out.final_rtl);
    assert!(mock.prompts.is_empty());
    assert!(out.coverage.unwrap().with_class(BranchClass::PotentiallyUnreachable).is_empty());
}

#[test]
fn client_pruning_that_breaks_behaviour_is_rejected() {
    let rtl = source("dead_branch");
    let m = parse_module(rtl).unwrap();
    let spec = PortSpec::from_module(&m);
    // Drops the live saturation logic as well.
    let bad = rtl.replace("sat <= 1'b1;", "sat <= 1'b0;");
    let config = LoopConfig { max_redundancy_iterations: 2, ..fast() };
    let mut mock = MockClient::new([bad.as_str(), bad.as_str()]);
    let out = run_loop(rtl, &spec, &config, &mut mock, &rtl_oracle(&m), &InputSet::default());
    assert_eq!(out.status, LoopStatus::Verified);
    assert_eq!(out.final_rtl, rtl);
    assert_eq!(out.count(PromptKind::Redundancy), 2);
    assert!(mock.prompts[0].contains("## Potentially Unreachable Branches"));
}

#[test]
fn client_pruning_that_holds_is_accepted() {
    let rtl = source("dead_branch");
    let m = parse_module(rtl).unwrap();
    let spec = PortSpec::from_module(&m);
    let pruned = rtl.replace("if (x > 8'hFF)\n                y <= 8'hAA;\n            else\n                y <= x;", "y <= x;");
    assert_ne!(pruned, rtl);
    let mut mock = MockClient::new([format!("Here you go:\n```verilog\n{pruned}```\n")]);
    let out = run_loop(rtl, &spec, &fast(), &mut mock, &rtl_oracle(&m), &InputSet::default());
    assert_eq!(out.status, LoopStatus::Verified);
    assert_eq!(out.final_rtl.trim(), pruned.trim());
    // Nothing left to prune, so no second prompt.
    assert_eq!(out.count(PromptKind::Redundancy), 1);
}

// Clients.

#[test]
fn extract_module_prefers_fenced_code() {
    let t = "Sure.\n```verilog\nmodule a(); endmodule\n```\nDone.";
    assert_eq!(extract_module(t), "module a(); endmodule\n");
    let t = "The fix:\nmodule a(); endmodule\nHope this helps";
    assert_eq!(extract_module(t), "module a(); endmodule\n");
    assert_eq!(extract_module("no code"), "no code");
}

#[test]
fn mock_reads_a_response_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("r.json");
    std::fs::write(&p, r#"["one", "two"]"#).unwrap();
    let mut m = MockClient::from_file(&p).unwrap();
    assert_eq!(m.complete("a").unwrap(), "one");
    assert_eq!(m.complete("b").unwrap(), "two");
    assert_eq!(m.complete("c"), Err(ClientError::Exhausted(3)));
}

#[test]
fn command_client_pipes_prompt_through() {
    let mut c = CommandClient { command: vec!["sh".into(), "-c".into(), "tr a-z A-Z".into()], timeout: Duration::from_secs(5) };
    assert_eq!(c.complete("module m").unwrap(), "MODULE M");
}

#[test]
fn command_client_times_out_and_reports_failure() {
    let mut c = CommandClient { command: vec!["sleep".into(), "5".into()], timeout: Duration::from_millis(100) };
    assert_eq!(c.complete("x"), Err(ClientError::Timeout(100)));
    let mut c = CommandClient { command: vec!["sh".into(), "-c".into(), "echo nope >&2; exit 3".into()], timeout: Duration::from_secs(5) };
    let e = c.complete("x").unwrap_err();
    assert!(matches!(&e, ClientError::Transport(m) if m.contains("nope")), "{e}");
}

#[test]
fn http_client_posts_prompt_and_reads_text() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let server = std::thread::spawn(move || {
        let (mut s, _) = listener.accept().unwrap();
        let mut r = BufReader::new(s.try_clone().unwrap());
        let mut len = 0;
        loop {
            let mut line = String::new();
            r.read_line(&mut line).unwrap();
            if line == "\r\n" {
                break;
            }
            if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                len = v.trim().parse().unwrap();
            }
        }
        let mut body = vec![0; len];
        r.read_exact(&mut body).unwrap();
        let req: serde_json::Value = serde_json::from_slice(&body).unwrap();
        let reply = serde_json::json!({"text": format!("echo: {}", req["prompt"].as_str().unwrap())}).to_string();
        write!(s, "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}", reply.len())
            .unwrap();
    });
    let mut c = HttpClient { url: format!("http://{addr}/complete"), timeout: Duration::from_secs(5) };
    assert_eq!(c.complete("hi").unwrap(), "echo: hi");
    server.join().unwrap();
}

#[test]
fn client_spec_parses_from_config() {
    let s: ClientSpec = toml::from_str("form = \"command\"\ncommand = [\"cat\"]").unwrap();
    assert_eq!(s, ClientSpec::Command { command: vec!["cat".into()], timeout_ms: 120_000 });
    let s: ClientSpec = serde_json::from_str(r#"{"form":"http","url":"http://x"}"#).unwrap();
    assert!(matches!(s, ClientSpec::Http { .. }));
}

#[test]
fn config_defaults_and_validation() {
    let c: LoopConfig = toml::from_str("max_functional_iterations = 3").unwrap();
    assert_eq!((c.max_syntax_iterations, c.max_functional_iterations, c.max_redundancy_iterations), (5, 3, 3));
    assert!(c.validate().is_ok());
    let c = LoopConfig { max_syntax_iterations: 0, ..LoopConfig::default() };
    assert!(c.validate().unwrap_err().contains("max_syntax_iterations"));
}
