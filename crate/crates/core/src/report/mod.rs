// SPDX-License-Identifier: Apache-2.0

//! Feedback prompts for the repair loop, and evaluation metrics.
//!
//! Prompts are plain markdown. Top-level sections start with `## ` so they
//! can be addressed positionally; [`split_sections`] reads them back.

pub mod metrics;

use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cfg::{BranchId, BranchMap, EdgeLabel};
use crate::concolic::{BranchClass, CoverageReport};
use crate::oracle::MismatchReport;
use crate::sim::Design;
use crate::verilog::Diagnostic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptKind {
    SyntaxDebug,
    TraceDebug,
    Redundancy,
    CoverageMessage,
    /// Nothing to ask for.
    NoOp,
}

impl fmt::Display for PromptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PromptKind::SyntaxDebug => "syntax-debug",
            PromptKind::TraceDebug => "trace-debug",
            PromptKind::Redundancy => "redundancy",
            PromptKind::CoverageMessage => "coverage-message",
            PromptKind::NoOp => "no-op",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptArtifact {
    pub kind: PromptKind,
    pub text: String,
    /// Structured source data, written as the `.json` sidecar.
    pub data: Value,
}

impl PromptArtifact {
    /// Writes `<stem>.md` and `<stem>.json` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> std::io::Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let md = dir.join(format!("{stem}.md"));
        let js = dir.join(format!("{stem}.json"));
        std::fs::write(&md, &self.text)?;
        let sidecar = json!({"kind": self.kind.to_string(), "data": self.data});
        std::fs::write(&js, serde_json::to_string_pretty(&sidecar).expect("json") + "\n")?;
        Ok((md, js))
    }

    pub fn sections(&self) -> Vec<(String, String)> {
        split_sections(&self.text).1
    }
}

/// Splits prompt text into the preamble and `(title, body)` pairs at `## `
/// headers. Headers inside fenced code blocks are ignored.
pub fn split_sections(text: &str) -> (String, Vec<(String, String)>) {
    let mut preamble = String::new();
    let mut sections: Vec<(String, String)> = Vec::new();
    let mut fenced = false;
    for line in text.lines() {
        if line.trim_start().starts_with("```") {
            fenced = !fenced;
        }
        if !fenced {
            if let Some(title) = line.strip_prefix("## ") {
                sections.push((title.trim().to_string(), String::new()));
                continue;
            }
        }
        let body = match sections.last_mut() {
            Some((_, b)) => b,
            None => &mut preamble,
        };
        body.push_str(line);
        body.push('\n');
    }
    let tidy = |s: String| s.trim_matches('\n').to_string();
    (tidy(preamble), sections.into_iter().map(|(t, b)| (t, tidy(b))).collect())
}

fn code_block(code: &str) -> String {
    format!("```verilog\n{}\n```", code.trim_end())
}

/// Compiler diagnostics paired with the code that produced them.
pub fn build_syntax_prompt(code: &str, diagnostics: &[Diagnostic]) -> PromptArtifact {
    let mut t = String::from(
        "# Syntax Debug\n\nThe Verilog module below does not compile. Fix every reported error and return the complete corrected module. Keep the port list and the intended behaviour unchanged.\n\n",
    );
    let _ = writeln!(t, "## Original Code\n\n{}\n", code_block(code));
    t.push_str("## Compiler Diagnostics\n\n");
    let lines: Vec<&str> = code.lines().collect();
    for (i, d) in diagnostics.iter().enumerate() {
        let _ = writeln!(t, "{}. {} at line {}, column {}: {}", i + 1, d.severity, d.pos.line, d.pos.column, d.message);
        if let Some(src) = lines.get(d.pos.line.saturating_sub(1) as usize) {
            let _ = writeln!(t, "   source: `{}`", src.trim());
        }
    }
    if diagnostics.is_empty() {
        t.push_str("(no diagnostics)\n");
    }
    t.push_str("\n## Instructions\n\nReturn only the corrected Verilog module.\n");
    let data = json!({
        "code": code,
        "diagnostics": diagnostics.iter().map(|d| json!({
            "severity": d.severity.to_string(),
            "line": d.pos.line,
            "column": d.pos.column,
            "message": d.message,
        })).collect::<Vec<_>>(),
    });
    PromptArtifact { kind: PromptKind::SyntaxDebug, text: t, data }
}

/// Mismatch plus the per-cycle branch path and register snapshots that
/// led to it.
pub fn build_trace_debug_prompt(code: &str, report: &MismatchReport) -> PromptArtifact {
    let mut t = String::from(
        "# Trace-Based Debug\n\nThe Verilog module below disagrees with the golden model. Use the failing vector and the cycle-by-cycle trace to find the cause, then return the complete corrected module.\n\n",
    );
    let _ = writeln!(t, "## Original Code\n\n{}\n", code_block(code));

    t.push_str("## Verification Failure Report\n\n");
    let _ = writeln!(t, "Failing vector (index {}):\n", report.index);
    for (c, row) in report.vector.cycles.iter().enumerate() {
        let vals: Vec<String> = row.iter().map(|(k, v)| format!("{k}={}", v.to_hex())).collect();
        let _ = writeln!(t, "- cycle {c}: {}", vals.join(" "));
    }
    let _ = writeln!(t, "\nFirst divergent cycle: {}", report.cycle);
    for d in &report.diffs {
        let _ = writeln!(t, "- Expected {}={}, Got {}={}", d.port, d.expected.to_hex(), d.port, d.observed.to_hex());
    }
    t.push('\n');

    t.push_str("## Trace Feedback\n\n");
    if report.trace.records.is_empty() {
        t.push_str("The trace has no cycles.\n");
    } else {
        t.push_str("### Execution Paths\n\n");
        for r in &report.trace.records {
            let bs: Vec<String> = r.branches.iter().map(|b| b.to_string()).collect();
            let mark = if r.cycle == report.cycle { "  <-- first mismatch" } else { "" };
            let _ = writeln!(t, "- cycle {}: {}{mark}", r.cycle, if bs.is_empty() { "(none)".into() } else { bs.join(", ") });
        }
        t.push_str("\n### Internal State Snapshots\n\n");
        for r in &report.trace.records {
            let regs: Vec<String> = r.regs.iter().map(|(k, v)| format!("{k}={}", v.to_hex())).collect();
            let outs: Vec<String> = r.outs.iter().map(|(k, v)| format!("{k}={}", v.to_hex())).collect();
            let _ = writeln!(t, "- cycle {}: regs [{}] outputs [{}]", r.cycle, regs.join(" "), outs.join(" "));
        }
    }
    let data = json!({"code": code, "mismatch": report.to_json()});
    PromptArtifact { kind: PromptKind::TraceDebug, text: t, data }
}

/// One entry in a pruning or coverage list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: String,
    pub location: String,
    pub condition: String,
}

/// Potentially-unreachable leaves with their source positions.
pub fn redundancy_candidates(report: &CoverageReport, map: &BranchMap, design: &Design) -> Vec<Candidate> {
    report
        .with_class(BranchClass::PotentiallyUnreachable)
        .into_iter()
        .filter_map(|b| map.get(b).map(|info| (b, info)))
        .map(|(b, info)| {
            let arm = &design.decisions[info.decision].arms[info.arm];
            let what = match (&arm.label, arm.implicit) {
                (EdgeLabel::CaseDefault, true) => "implicit case default",
                (EdgeLabel::CaseDefault, false) => "case default",
                (EdgeLabel::CaseItem(_), _) => "case item",
                (EdgeLabel::IfFalse, true) => "implicit else",
                (EdgeLabel::IfFalse, false) => "else arm",
                _ => "if arm",
            };
            Candidate {
                id: b.to_string(),
                location: format!("line {}, column {} ({what})", info.pos.line, info.pos.column),
                condition: info.condition.clone(),
            }
        })
        .collect()
}

fn render_candidates(kind: PromptKind, code: &str, items: &[Candidate], extra: Value) -> PromptArtifact {
    let coverage = kind == PromptKind::CoverageMessage;
    let (title, intro, list_title) = if coverage {
        (
            "Coverage Message",
            "The reference model below leaves some regions unexercised by the current test inputs. Generate additional input vectors that drive each listed region.",
            "Uncovered Regions",
        )
    } else {
        (
            "Redundancy Elimination",
            "Concolic exploration could not reach the branches listed below. Remove the ones that are truly dead and return the complete module.",
            "Potentially Unreachable Branches",
        )
    };
    let mut t = format!("# {title}\n\n{intro}\n\n");
    let _ = writeln!(t, "## Original Code\n\n{}\n", code_block(code));
    let _ = writeln!(t, "## {list_title}\n");
    if items.is_empty() {
        t.push_str("(none)\n");
    }
    for c in items {
        let _ = writeln!(t, "- {} at {}: `{}`", c.id, c.location, c.condition);
    }
    t.push_str("\n## Instructions\n\n");
    if coverage {
        t.push_str("Return the new input vectors as a JSON array of per-cycle objects mapping each input port to a value.\n");
    } else {
        t.push_str(concat!(
            "Eliminate dead code without altering the functionality of reachable branches.\n",
            "Exploration is bounded, so a listed branch may still be live. Defensive logic such as FSM default states ",
            "can be flagged here while being required for safety; keep such logic when the design intent calls for it.\n",
            "Every deletion is re-checked against the golden model and restored if behaviour changes.\n",
        ));
    }
    let kind = if items.is_empty() { PromptKind::NoOp } else { kind };
    let mut data = json!({"code": code, "candidates": items});
    if let (Value::Object(d), Value::Object(e)) = (&mut data, extra) {
        d.extend(e);
    }
    PromptArtifact { kind, text: t, data }
}

/// Lists potentially-unreachable branches. Unknown-class branches are left
/// out. With no candidates the artifact is a no-op.
pub fn build_redundancy_prompt(code: &str, report: &CoverageReport, map: &BranchMap, design: &Design) -> PromptArtifact {
    let items = redundancy_candidates(report, map, design);
    render_candidates(PromptKind::Redundancy, code, &items, json!({"coverage": report.to_json()}))
}

/// Uncovered reference-model regions, named by the model's own tags.
pub fn build_coverage_message(model_code: &str, all_tags: &[String], seen: &[String], coverage_pct: f64) -> PromptArtifact {
    let items: Vec<Candidate> = all_tags
        .iter()
        .filter(|t| !seen.contains(t))
        .map(|t| Candidate { id: t.clone(), location: "reference model".into(), condition: "not exercised".into() })
        .collect();
    render_candidates(PromptKind::CoverageMessage, model_code, &items, json!({"coverage_pct": coverage_pct}))
}

/// Branch ids listed in a redundancy prompt's candidate section.
pub fn listed_branches(text: &str) -> Vec<BranchId> {
    let (_, sections) = split_sections(text);
    sections
        .iter()
        .filter(|(t, _)| t == "Potentially Unreachable Branches")
        .flat_map(|(_, body)| body.lines())
        .filter_map(|l| l.strip_prefix("- ")?.split_whitespace().next()?.parse().ok())
        .collect()
}

#[cfg(test)]
mod tests;
