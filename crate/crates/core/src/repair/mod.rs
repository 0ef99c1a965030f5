// SPDX-License-Identifier: Apache-2.0

//! The closed repair loop and trial deletion of dead-looking branches.
//!
//! A run goes syntax repair, instrumentation, exploration, then the
//! differential check. A failing check sends a trace-debug prompt and the
//! response replaces the whole module. Once the design passes, redundancy
//! pruning runs and every accepted deletion is re-verified.

pub mod client;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

pub use client::{extract_module, ClientError, ClientSpec, CommandClient, CompletionClient, HttpClient, MockClient};

use crate::cfg::{build_cfg, BranchId};
use crate::concolic::{explore, BranchClass, CoverageReport, ExploreBudget, ExploreError, InputSet};
use crate::instrument::{InstrumentError, InstrumentedDesign};
use crate::oracle::{differential_check, CheckError, ModelSpec, Oracle, Verdict};
use crate::report::{build_redundancy_prompt, build_syntax_prompt, build_trace_debug_prompt, PromptArtifact, PromptKind};
use crate::sim::InputVector;
use crate::verilog::{parse_module, pretty_print, validate_interface, AstModule, Diagnostic, PortSpec, Stmt, StmtKind};

/// What the redundancy phase does with potentially-unreachable branches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RedundancyMode {
    /// Ask the client for a pruned module and verify its answer.
    #[default]
    Client,
    /// Delete candidates locally with [`trial_delete`].
    TrialDelete,
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoopConfig {
    pub max_syntax_iterations: usize,
    pub max_functional_iterations: usize,
    pub max_redundancy_iterations: usize,
    pub explore: ExploreBudget,
    /// Golden model command. Callers may pass any other oracle instead.
    pub oracle: Option<ModelSpec>,
    /// Length of the reset seed used when no seeds are given.
    pub seed_cycles: usize,
    pub jobs: usize,
    pub redundancy: RedundancyMode,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            max_syntax_iterations: 5,
            max_functional_iterations: 5,
            max_redundancy_iterations: 3,
            explore: ExploreBudget::default(),
            oracle: None,
            seed_cycles: 3,
            jobs: 4,
            redundancy: RedundancyMode::Client,
        }
    }
}

impl LoopConfig {
    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("max_syntax_iterations", self.max_syntax_iterations),
            ("max_functional_iterations", self.max_functional_iterations),
            ("max_redundancy_iterations", self.max_redundancy_iterations),
            ("seed_cycles", self.seed_cycles),
            ("jobs", self.jobs),
        ];
        match fields.iter().find(|(_, v)| *v == 0) {
            Some((name, _)) => Err(format!("{name} must be positive")),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoopStatus {
    Verified,
    SyntaxExhausted,
    FunctionalExhausted,
}

impl std::fmt::Display for LoopStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LoopStatus::Verified => "verified",
            LoopStatus::SyntaxExhausted => "syntax-exhausted",
            LoopStatus::FunctionalExhausted => "functional-exhausted",
        })
    }
}

/// State of the design at the moment a step was taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepVerdict {
    SyntaxError,
    Fail,
    Pass,
    /// The client or the oracle broke down; the loop ends here.
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub kind: PromptKind,
    pub verdict: StepVerdict,
    pub coverage_pct: Option<f64>,
    pub note: String,
}

#[derive(Debug, Clone)]
pub struct LoopOutcome {
    pub final_rtl: String,
    pub status: LoopStatus,
    /// One entry per prompt sent, plus at most one terminal error entry.
    pub log: Vec<IterationRecord>,
    pub coverage: Option<CoverageReport>,
    pub verdict: Option<Verdict>,
    /// Full Input set the final verdict was computed on.
    pub inputs: Option<InputSet>,
    pub prompts: Vec<PromptArtifact>,
}

impl LoopOutcome {
    pub fn count(&self, kind: PromptKind) -> usize {
        self.log.iter().filter(|r| r.kind == kind && r.verdict != StepVerdict::Error).count()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "status": self.status.to_string(),
            "iterations": self.log,
            "coverage": self.coverage.as_ref().map(|c| c.to_json()),
            "verdict": self.verdict.as_ref().map(|v| v.to_json()),
        })
    }
}

/// Parses, checks the interface and instruments. Any failure comes back as
/// diagnostics for a syntax-debug prompt.
pub fn front_end(rtl: &str, spec: &PortSpec) -> Result<InstrumentedDesign, Vec<Diagnostic>> {
    let m = parse_module(rtl).map_err(|e| e.diagnostics().to_vec())?;
    if let Err(errs) = validate_interface(&m, spec) {
        return Err(errs.iter().map(|e| Diagnostic::error(m.pos, format!("interface: {e}"))).collect());
    }
    let pos = m.pos;
    InstrumentedDesign::from_module(m).map_err(|e| vec![Diagnostic::error(pos, e.to_string())])
}

struct Run<'a> {
    config: &'a LoopConfig,
    log: Vec<IterationRecord>,
    prompts: Vec<PromptArtifact>,
}

impl Run<'_> {
    fn record(&mut self, prompt: &PromptArtifact, verdict: StepVerdict, coverage_pct: Option<f64>, note: String) {
        log::info!("{} prompt: {note}", prompt.kind);
        self.prompts.push(prompt.clone());
        self.log.push(IterationRecord { kind: prompt.kind, verdict, coverage_pct, note });
    }

    fn error(&mut self, kind: PromptKind, coverage_pct: Option<f64>, note: String) {
        log::warn!("{note}");
        self.log.push(IterationRecord { kind, verdict: StepVerdict::Error, coverage_pct, note });
    }

    fn count(&self, kind: PromptKind) -> usize {
        self.log.iter().filter(|r| r.kind == kind && r.verdict != StepVerdict::Error).count()
    }
}

/// A design that passed, with the evidence.
struct Verified {
    rtl: String,
    design: InstrumentedDesign,
    inputs: InputSet,
    report: CoverageReport,
    verdict: Verdict,
}

enum Checked {
    Pass(Box<Verified>),
    Fail { inputs: InputSet, report: CoverageReport, verdict: Verdict },
}

fn seeds_for(design: &InstrumentedDesign, seeds: &InputSet, cycles: usize) -> InputSet {
    if seeds.is_empty() {
        InputSet::seeds(vec![InputVector::reset_seed(&design.design.input_ports(), cycles)])
    } else {
        seeds.clone()
    }
}

fn explore_and_check(
    rtl: &str,
    design: InstrumentedDesign,
    seeds: &InputSet,
    config: &LoopConfig,
    oracle: &dyn Oracle,
) -> Result<Checked, String> {
    let seeds = seeds_for(&design, seeds, config.seed_cycles);
    let out = explore(&design, &seeds, config.explore).map_err(|e| format!("exploration failed: {e}"))?;
    let verdict = differential_check(&design, oracle, &out.inputs, config.jobs).map_err(|e| format!("oracle failure: {e}"))?;
    Ok(if verdict.is_pass() {
        Checked::Pass(Box::new(Verified { rtl: rtl.to_string(), design, inputs: out.inputs, report: out.report, verdict }))
    } else {
        Checked::Fail { inputs: out.inputs, report: out.report, verdict }
    })
}

/// Runs the full loop. `seeds` may be empty, in which case a reset seed of
/// `config.seed_cycles` cycles is used.
pub fn run_loop(
    initial_rtl: &str,
    spec: &PortSpec,
    config: &LoopConfig,
    client: &mut dyn CompletionClient,
    oracle: &dyn Oracle,
    seeds: &InputSet,
) -> LoopOutcome {
    let mut run = Run { config, log: Vec::new(), prompts: Vec::new() };
    let mut rtl = initial_rtl.to_string();
    let done = |run: Run, rtl: String, status, v: Option<(CoverageReport, Verdict, InputSet)>| {
        let (coverage, verdict, inputs) = match v {
            Some((c, v, i)) => (Some(c), Some(v), Some(i)),
            None => (None, None, None),
        };
        LoopOutcome { final_rtl: rtl, status, log: run.log, coverage, verdict, inputs, prompts: run.prompts }
    };

    let verified = loop {
        // Phase 1: syntax and interface.
        let design = loop {
            match front_end(&rtl, spec) {
                Ok(d) => break d,
                Err(diags) => {
                    if run.count(PromptKind::SyntaxDebug) >= config.max_syntax_iterations {
                        return done(run, rtl, LoopStatus::SyntaxExhausted, None);
                    }
                    let p = build_syntax_prompt(&rtl, &diags);
                    run.record(&p, StepVerdict::SyntaxError, None, format!("{} diagnostics", diags.len()));
                    match client.complete(&p.text) {
                        Ok(r) => rtl = extract_module(&r),
                        Err(e) => {
                            run.error(PromptKind::SyntaxDebug, None, format!("client failure: {e}"));
                            return done(run, rtl, LoopStatus::SyntaxExhausted, None);
                        }
                    }
                }
            }
        };
        // Phases 2 to 4.
        match explore_and_check(&rtl, design, seeds, config, oracle) {
            Err(note) => {
                run.error(PromptKind::TraceDebug, None, note);
                return done(run, rtl, LoopStatus::FunctionalExhausted, None);
            }
            Ok(Checked::Pass(v)) => break *v,
            Ok(Checked::Fail { inputs, report, verdict }) => {
                let pct = Some(report.coverage_pct());
                if run.count(PromptKind::TraceDebug) >= config.max_functional_iterations {
                    return done(run, rtl, LoopStatus::FunctionalExhausted, Some((report, verdict, inputs)));
                }
                let first = &verdict.mismatches()[0];
                let p = build_trace_debug_prompt(&rtl, first);
                run.record(&p, StepVerdict::Fail, pct, first.to_string());
                match client.complete(&p.text) {
                    Ok(r) => rtl = extract_module(&r),
                    Err(e) => {
                        run.error(PromptKind::TraceDebug, pct, format!("client failure: {e}"));
                        return done(run, rtl, LoopStatus::FunctionalExhausted, Some((report, verdict, inputs)));
                    }
                }
            }
        }
    };

    let v = redundancy_phase(&mut run, verified, spec, client, oracle);
    done(run, v.rtl, LoopStatus::Verified, Some((v.report, v.verdict, v.inputs)))
}

/// Prunes a verified design. Anything that would break it is rejected, so
/// the result is always verified.
fn redundancy_phase(
    run: &mut Run,
    mut v: Verified,
    spec: &PortSpec,
    client: &mut dyn CompletionClient,
    oracle: &dyn Oracle,
) -> Verified {
    let config = run.config;
    while run.count(PromptKind::Redundancy) < config.max_redundancy_iterations {
        let p = build_redundancy_prompt(&v.rtl, &v.report, &v.design.branch_map, &v.design.design);
        if p.kind == PromptKind::NoOp || config.redundancy == RedundancyMode::Off {
            break;
        }
        let pct = Some(v.report.coverage_pct());
        match config.redundancy {
            RedundancyMode::Off => break,
            RedundancyMode::TrialDelete => {
                let candidates = v.report.with_class(BranchClass::PotentiallyUnreachable);
                let module = crate::instrument::strip_instrumentation(&v.design);
                match trial_delete(&module, &candidates, oracle, &v.inputs, config.explore, config.jobs) {
                    Ok(t) => {
                        let note = format!("trial deletion kept {:?}, restored {:?}", ids(&t.kept), ids(&t.restored));
                        run.record(&p, StepVerdict::Pass, pct, note);
                        if let Some(next) = accept(&pretty_print(&t.module), spec, &v, config, oracle) {
                            v = next;
                        }
                    }
                    Err(e) => run.error(PromptKind::Redundancy, pct, format!("trial deletion failed: {e}")),
                }
                // Trial deletion has already tried every candidate.
                break;
            }
            RedundancyMode::Client => {
                run.record(&p, StepVerdict::Pass, pct, format!("{} candidates", crate::report::listed_branches(&p.text).len()));
                let candidate = match client.complete(&p.text) {
                    Ok(r) => extract_module(&r),
                    Err(e) => {
                        run.error(PromptKind::Redundancy, pct, format!("client failure: {e}; keeping the verified design"));
                        break;
                    }
                };
                match accept(&candidate, spec, &v, config, oracle) {
                    Some(next) => v = next,
                    None => log::info!("pruned module rejected; keeping the verified design"),
                }
            }
        }
    }
    v
}

/// Re-verifies a pruned module against the old Full Input set plus what
/// exploring it adds.
fn accept(rtl: &str, spec: &PortSpec, v: &Verified, config: &LoopConfig, oracle: &dyn Oracle) -> Option<Verified> {
    let design = front_end(rtl, spec).ok()?;
    let base = InputSet::seeds(v.inputs.vectors().cloned().collect());
    let out = explore(&design, &base, config.explore).ok()?;
    let mut inputs = base;
    inputs.extend(&out.inputs);
    let verdict = differential_check(&design, oracle, &inputs, config.jobs).ok()?;
    verdict.is_pass().then(|| Verified { rtl: rtl.to_string(), design, inputs, report: out.report, verdict })
}

fn ids(b: &[BranchId]) -> Vec<String> {
    b.iter().map(|x| x.to_string()).collect()
}

#[derive(Debug, Error)]
pub enum TrialError {
    #[error(transparent)]
    Instrument(#[from] InstrumentError),
    #[error(transparent)]
    Explore(#[from] ExploreError),
    #[error(transparent)]
    Check(#[from] CheckError),
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub module: AstModule,
    /// Deletions that survived the check.
    pub kept: Vec<BranchId>,
    /// Deletions that changed behaviour and were undone.
    pub restored: Vec<BranchId>,
    /// Candidates with nothing to delete: implicit arms, or arms already
    /// gone with an earlier deletion.
    pub skipped: Vec<BranchId>,
    /// Verdict of the returned module over `inputs`.
    pub verdict: Verdict,
    pub inputs: InputSet,
}

/// What happened when removing an arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Removal {
    Removed,
    /// The arm was implied (no `else` or `default` in the source).
    Implicit,
    NotFound,
}

/// Deletes arm `arm` of decision `decision`, numbered as in
/// [`crate::cfg::walk_module`]. An `if` loses its condition and keeps the
/// other arm; a case loses the item or its default.
pub fn remove_arm(m: &mut AstModule, decision: usize, arm: usize) -> Removal {
    let mut next = 0;
    for p in &mut m.processes {
        if let Some(r) = remove_in(&mut p.body, decision, arm, &mut next) {
            return r;
        }
    }
    Removal::NotFound
}

fn remove_in(s: &mut Stmt, decision: usize, arm: usize, next: &mut usize) -> Option<Removal> {
    if matches!(s.kind, StmtKind::If { .. } | StmtKind::Case { .. }) {
        let id = *next;
        *next += 1;
        if id == decision {
            return Some(edit(s, arm));
        }
    }
    match &mut s.kind {
        StmtKind::If { then_branch, else_branch, .. } => remove_in(then_branch, decision, arm, next)
            .or_else(|| else_branch.as_deref_mut().and_then(|e| remove_in(e, decision, arm, next))),
        StmtKind::Case { items, default, .. } => {
            for it in items.iter_mut() {
                if let Some(r) = remove_in(&mut it.body, decision, arm, next) {
                    return Some(r);
                }
            }
            default.as_deref_mut().and_then(|d| remove_in(d, decision, arm, next))
        }
        StmtKind::Block(xs) => xs.iter_mut().find_map(|x| remove_in(x, decision, arm, next)),
        _ => None,
    }
}

fn edit(s: &mut Stmt, arm: usize) -> Removal {
    let pos = s.pos;
    let null = || Stmt::new(StmtKind::Null, pos);
    let replacement = match &mut s.kind {
        StmtKind::If { then_branch, else_branch, .. } => match arm {
            0 => else_branch.take().map(|b| *b).unwrap_or_else(null),
            1 if else_branch.is_none() => return Removal::Implicit,
            1 => std::mem::replace(then_branch.as_mut(), null()),
            _ => return Removal::NotFound,
        },
        StmtKind::Case { items, default, .. } => {
            let n = items.len();
            if arm < n {
                items.remove(arm);
            } else if arm == n {
                if default.take().is_none() {
                    return Removal::Implicit;
                }
            } else {
                return Removal::NotFound;
            }
            if !items.is_empty() || default.is_some() {
                return Removal::Removed;
            }
            null()
        }
        _ => return Removal::NotFound,
    };
    *s = replacement;
    Removal::Removed
}

/// Removes candidates one at a time, highest id first so earlier ids stay
/// valid. After each removal the module is re-instrumented, re-explored
/// from `base` and checked over `base` plus the new vectors; the removal
/// stays only on Pass.
pub fn trial_delete(
    module: &AstModule,
    candidates: &[BranchId],
    oracle: &dyn Oracle,
    base: &InputSet,
    budget: ExploreBudget,
    jobs: usize,
) -> Result<TrialOutcome, TrialError> {
    let seeds = InputSet::seeds(base.vectors().cloned().collect());
    let check = |m: &AstModule| -> Result<(Verdict, InputSet), TrialError> {
        let d = crate::instrument::instrument(m)?;
        // Exploration drops seeds that add no coverage; the check needs them.
        let mut inputs = seeds.clone();
        if !seeds.is_empty() {
            inputs.extend(&explore(&d, &seeds, budget)?.inputs);
        }
        Ok((differential_check(&d, oracle, &inputs, jobs)?, inputs))
    };

    let (_, original) = build_cfg(module);
    let order: BTreeSet<BranchId> = candidates.iter().copied().collect();
    let mut current = module.clone();
    let (mut kept, mut restored, mut skipped) = (Vec::new(), Vec::new(), Vec::new());
    for b in order.into_iter().rev() {
        let Some(want) = original.get(b) else {
            skipped.push(b);
            continue;
        };
        // The id must still name the same arm in the current module.
        let (_, now) = build_cfg(&current);
        let same = now.get(b).is_some_and(|i| i.pos == want.pos && i.condition == want.condition && i.decision == want.decision);
        if !same {
            skipped.push(b);
            continue;
        }
        let mut trial = current.clone();
        match remove_arm(&mut trial, want.decision, want.arm) {
            Removal::Removed => {}
            Removal::Implicit | Removal::NotFound => {
                skipped.push(b);
                continue;
            }
        }
        let (verdict, _) = check(&trial)?;
        if verdict.is_pass() {
            log::info!("deleted {b} ({})", want.condition);
            current = trial;
            kept.push(b);
        } else {
            log::info!("restored {b} ({}): behaviour changed", want.condition);
            restored.push(b);
        }
    }
    kept.reverse();
    restored.reverse();
    skipped.reverse();
    let (verdict, inputs) = check(&current)?;
    Ok(TrialOutcome { module: current, kept, restored, skipped, verdict, inputs })
}

#[cfg(test)]
mod tests;
