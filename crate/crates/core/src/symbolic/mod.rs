// SPDX-License-Identifier: Apache-2.0

//! Symbolic replay of concrete runs and branch mutation.
//!
//! Replay follows the concrete path only. Every value carries its concrete
//! bits plus a term over per-cycle input variables; registers written at
//! the clock edge get a fresh version variable (`counter_1`) tied to their
//! new term by an effect constraint, so terms never grow across cycles.

mod term;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use term::{SymVar, Term, TermKind, TermRef};

use crate::bits::{apply_binary, apply_unary, extract, mask, BinaryOp, UnaryOp};
use crate::cfg::{BranchId, DecisionInfo, DecisionKind};
use crate::instrument::InstrumentedDesign;
use crate::sim::{Design, Domain, ExecEvent, Executor, InputVector, Trace};

/// Value in the symbolic domain: concrete bits plus a term.
#[derive(Debug, Clone)]
pub struct SVal {
    pub value: u64,
    pub width: u32,
    pub term: TermRef,
}

#[derive(Debug, Default, Clone, Copy)]
pub struct Symbolic;

impl Domain for Symbolic {
    type V = SVal;
    const TRACKS: bool = true;

    fn value(v: &SVal) -> u64 {
        v.value
    }
    fn width(v: &SVal) -> u32 {
        v.width
    }
    fn constant(&mut self, value: u64, width: u32) -> SVal {
        SVal { value: value & mask(width), width, term: Term::constant(value, width) }
    }
    fn unary(&mut self, op: UnaryOp, a: &SVal) -> SVal {
        SVal {
            value: apply_unary(op, a.value, a.width),
            width: op.result_width(a.width),
            term: Term::unary(op, &a.term),
        }
    }
    fn binary(&mut self, op: BinaryOp, a: &SVal, b: &SVal) -> SVal {
        SVal {
            value: apply_binary(op, a.value, a.width, b.value, b.width),
            width: op.result_width(a.width, b.width),
            term: Term::binary(op, &a.term, &b.term),
        }
    }
    fn ite(&mut self, c: &SVal, t: &SVal, f: &SVal) -> SVal {
        SVal {
            value: if c.value != 0 { t.value } else { f.value },
            width: t.width.max(f.width),
            term: Term::ite(&c.term, &t.term, &f.term),
        }
    }
    fn extract(&mut self, a: &SVal, lo: u32, width: u32) -> SVal {
        SVal { value: extract(a.value, lo + width - 1, lo), width, term: Term::extract(&a.term, lo, width) }
    }
    fn concat(&mut self, parts: &[SVal]) -> SVal {
        let mut value = 0u64;
        let mut width = 0;
        for p in parts {
            value = if p.width >= 64 { p.value } else { (value << p.width) | p.value };
            width += p.width;
        }
        let terms: Vec<TermRef> = parts.iter().map(|p| p.term.clone()).collect();
        let width = width.min(64);
        SVal { value: value & mask(width), width, term: Term::concat(&terms) }
    }
    fn resize(&mut self, a: &SVal, width: u32) -> SVal {
        SVal { value: a.value & mask(width), width, term: Term::resize(&a.term, width) }
    }
}

/// Where a constraint came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    /// Branch predicate on the concrete path.
    PathCondition { cycle: usize },
    /// Input not read by any condition that cycle, held at its trace value.
    Pin { cycle: usize },
    /// Dynamic index or shift amount fixed to its trace value.
    Concretized { cycle: usize },
    /// Register version defined by the clock edge of `cycle`.
    Effect { cycle: usize },
    /// Predicate selecting the mutation target.
    MutationTarget { cycle: usize, decision: usize, arm: usize },
}

impl Provenance {
    pub fn cycle(&self) -> usize {
        match self {
            Provenance::PathCondition { cycle }
            | Provenance::Pin { cycle }
            | Provenance::Concretized { cycle }
            | Provenance::Effect { cycle }
            | Provenance::MutationTarget { cycle, .. } => *cycle,
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::PathCondition { cycle } => write!(f, "path-condition@{cycle}"),
            Provenance::Pin { cycle } => write!(f, "pin@{cycle}"),
            Provenance::Concretized { cycle } => write!(f, "concretized@{cycle}"),
            Provenance::Effect { cycle } => write!(f, "assignment-effect@{cycle}"),
            Provenance::MutationTarget { cycle, decision, arm } => {
                write!(f, "mutation-target@{cycle} (decision {decision}, arm {arm})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Constraint {
    /// 1-bit predicate.
    pub term: TermRef,
    pub provenance: Provenance,
}

impl Constraint {
    pub fn holds(&self, env: &dyn Fn(&SymVar) -> Option<u64>) -> Option<bool> {
        self.term.eval(env).map(|v| v != 0)
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.term)
    }
}

/// A conjunction of constraints.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConstraintSet {
    pub constraints: Vec<Constraint>,
}

impl ConstraintSet {
    pub fn new(constraints: Vec<Constraint>) -> Self {
        ConstraintSet { constraints }
    }

    /// Builds a set of bare predicates, tagged as cycle-0 path conditions.
    pub fn from_terms(terms: Vec<TermRef>) -> Self {
        ConstraintSet {
            constraints: terms
                .into_iter()
                .map(|term| Constraint { term, provenance: Provenance::PathCondition { cycle: 0 } })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn vars(&self) -> BTreeSet<SymVar> {
        let mut out = BTreeSet::new();
        for c in &self.constraints {
            c.term.collect_vars(&mut out);
        }
        out
    }

    /// Rendered predicates, one per constraint.
    pub fn texts(&self) -> Vec<String> {
        self.constraints.iter().map(|c| c.to_string()).collect()
    }
}

impl fmt::Display for ConstraintSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.constraints {
            writeln!(f, "{c}    # {}", c.provenance)?;
        }
        Ok(())
    }
}

/// A decision executed on the concrete path.
#[derive(Debug, Clone)]
pub struct DecisionPoint {
    pub cycle: usize,
    pub decision: usize,
    pub arm: usize,
    /// Index in [`PathCondition::constraints`] where this decision's own
    /// predicate sits (or would sit, if it was constant).
    pub entry: usize,
    pub subject: TermRef,
}

#[derive(Debug, Clone)]
pub struct PathCondition {
    pub design: Arc<Design>,
    pub constraints: Vec<Constraint>,
    pub decisions: Vec<DecisionPoint>,
    pub cycles: usize,
}

impl PathCondition {
    pub fn cycle(&self, t: usize) -> impl Iterator<Item = &Constraint> {
        self.constraints.iter().filter(move |c| c.provenance.cycle() == t)
    }

    pub fn as_set(&self) -> ConstraintSet {
        ConstraintSet::new(self.constraints.clone())
    }

    /// The point where `decision` executed at `cycle`, if it did.
    pub fn point(&self, cycle: usize, decision: usize) -> Option<&DecisionPoint> {
        self.decisions.iter().find(|d| d.cycle == cycle && d.decision == decision)
    }
}

/// Register name to its term after each clock edge.
pub type SymbolicState = IndexMap<String, TermRef>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SymbolicError {
    #[error("trace does not match the design at cycle {cycle}: expected {expected:?}, replay took {actual:?}")]
    TraceMismatch { cycle: usize, expected: Vec<BranchId>, actual: Vec<BranchId> },
    #[error("trace has {trace} cycles but the input vector has {inputs}")]
    Length { trace: usize, inputs: usize },
    #[error("simulation failed during replay: {0}")]
    Sim(String),
    #[error("{target} is not an alternative at any decision on the path at cycle {cycle}")]
    NotAnAlternative { cycle: usize, target: String },
    #[error("unknown branch {0}")]
    UnknownBranch(BranchId),
}

/// Predicate under which `decision` takes `arm` given its subject term.
pub fn arm_predicate(info: &DecisionInfo, subject: &TermRef, arm: usize) -> TermRef {
    match &info.kind {
        DecisionKind::If => {
            if arm == 0 {
                Term::truth(subject)
            } else {
                Term::negate(subject)
            }
        }
        DecisionKind::Case { labels } => {
            let hit = |l: &crate::bits::BitVecLiteral| Term::eq(subject, &Term::constant(l.value, l.width));
            // First match wins, so a label repeated from an earlier item can
            // never select this one.
            let earlier = |k: usize, v: u64| labels[..k].iter().flatten().any(|l| l.value == v);
            if arm < labels.len() {
                let mut p = Term::constant(0, 1);
                for l in labels[arm].iter().filter(|l| !earlier(arm, l.value)) {
                    p = Term::or(&p, &hit(l));
                }
                p
            } else {
                let mut p = Term::constant(1, 1);
                for l in labels.iter().flatten() {
                    p = Term::and(&p, &Term::negate(&hit(l)));
                }
                p
            }
        }
    }
}

/// Replays `trace` symbolically, returning the path condition and the
/// register terms after each cycle.
pub fn symbolic_replay(
    design: &InstrumentedDesign,
    trace: &Trace,
    inputs: &InputVector,
) -> Result<(PathCondition, Vec<SymbolicState>), SymbolicError> {
    if trace.len() != inputs.len() {
        return Err(SymbolicError::Length { trace: trace.len(), inputs: inputs.len() });
    }
    let (path, states, branches) = replay_design(&design.design, inputs)?;
    for (cycle, (rec, got)) in trace.records.iter().zip(&branches).enumerate() {
        if &rec.branches != got {
            return Err(SymbolicError::TraceMismatch {
                cycle,
                expected: rec.branches.clone(),
                actual: got.clone(),
            });
        }
    }
    Ok((path, states))
}

type Replay = (PathCondition, Vec<SymbolicState>, Vec<Vec<BranchId>>);

/// Replay without a reference trace; also returns the branches taken.
pub fn replay_design(design: &Arc<Design>, inputs: &InputVector) -> Result<Replay, SymbolicError> {
    let d: &Design = design;
    let mut dom = Symbolic;
    let mut ex = Executor::new(d, &mut dom);
    let mut constraints = Vec::new();
    let mut decisions = Vec::new();
    let mut states = Vec::new();
    let mut branches = Vec::new();
    for (cycle, row) in inputs.cycles.iter().enumerate() {
        let vals: Vec<SVal> = d
            .inputs
            .iter()
            .map(|&s| {
                let name = d.name_of(s);
                let width = d.width(s);
                let value = row.get(name).map(|l| l.value).unwrap_or(0);
                SVal { value, width, term: Term::var(SymVar::new(name, cycle, width)) }
            })
            .collect();
        let out = ex.step(&mut dom, &vals).map_err(|e| SymbolicError::Sim(e.to_string()))?;

        let mut used: BTreeSet<SymVar> = BTreeSet::new();
        for ev in &out.events {
            match ev {
                ExecEvent::Decision { decision, arm, subject } => {
                    decisions.push(DecisionPoint {
                        cycle,
                        decision: *decision,
                        arm: *arm,
                        entry: constraints.len(),
                        subject: subject.term.clone(),
                    });
                    let p = arm_predicate(&d.decisions[*decision], &subject.term, *arm);
                    if p.as_const().is_none() {
                        p.collect_vars(&mut used);
                        constraints.push(Constraint { term: p, provenance: Provenance::PathCondition { cycle } });
                    }
                }
                ExecEvent::Concretized { value } => {
                    if value.term.as_const().is_none() {
                        value.term.collect_vars(&mut used);
                        let p = Term::eq(&value.term, &Term::constant(value.value, value.width));
                        constraints.push(Constraint { term: p, provenance: Provenance::Concretized { cycle } });
                    }
                }
            }
        }
        for val in &vals {
            let var = val.term.as_var().expect("input term").clone();
            if !used.contains(&var) {
                let p = Term::eq(&val.term, &Term::constant(val.value, val.width));
                constraints.push(Constraint { term: p, provenance: Provenance::Pin { cycle } });
            }
        }
        let mut state = SymbolicState::new();
        for &r in &d.registers {
            let cur = ex.values[r].clone();
            if out.clocked_writes.contains(&r) {
                let var = Term::var(SymVar::new(d.name_of(r), cycle + 1, d.width(r)));
                constraints.push(Constraint {
                    term: Term::eq(&var, &cur.term),
                    provenance: Provenance::Effect { cycle },
                });
                state.insert(d.name_of(r).to_string(), cur.term.clone());
                ex.values[r] = SVal { term: var, ..cur };
            } else {
                state.insert(d.name_of(r).to_string(), cur.term.clone());
            }
        }
        states.push(state);
        branches.push(out.branches);
    }
    let path = PathCondition { design: design.clone(), constraints, decisions, cycles: inputs.len() };
    Ok((path, states, branches))
}

/// Constraints that force `decision` to take `arm` at `cycle`, keeping the
/// path before that decision.
pub fn mutate_arm(path: &PathCondition, cycle: usize, decision: usize, arm: usize) -> Result<ConstraintSet, SymbolicError> {
    let not_alt = || SymbolicError::NotAnAlternative { cycle, target: format!("decision {decision} arm {arm}") };
    let point = path.point(cycle, decision).ok_or_else(not_alt)?;
    if point.arm == arm || arm >= path.design.decisions[decision].arms.len() {
        return Err(not_alt());
    }
    let mut kept: Vec<Constraint> = path.constraints[..point.entry].to_vec();
    // A pin must not fix a value that other kept constraints depend on.
    let others: BTreeSet<SymVar> = kept
        .iter()
        .filter(|c| !matches!(c.provenance, Provenance::Pin { .. }))
        .flat_map(|c| c.term.vars())
        .collect();
    kept.retain(|c| {
        !matches!(c.provenance, Provenance::Pin { .. }) || c.term.vars().is_disjoint(&others)
    });
    let target = arm_predicate(&path.design.decisions[decision], &point.subject, arm);
    kept.push(Constraint { term: target, provenance: Provenance::MutationTarget { cycle, decision, arm } });
    Ok(ConstraintSet::new(kept))
}

/// [`mutate_arm`] addressed by a leaf branch id.
pub fn mutate_branch(path: &PathCondition, target: (usize, BranchId)) -> Result<ConstraintSet, SymbolicError> {
    let (cycle, b) = target;
    let (decision, arm) = locate(&path.design, b).ok_or(SymbolicError::UnknownBranch(b))?;
    mutate_arm(path, cycle, decision, arm).map_err(|_| SymbolicError::NotAnAlternative {
        cycle,
        target: b.to_string(),
    })
}

/// Decision and arm that own leaf branch `b`.
pub fn locate(design: &Design, b: BranchId) -> Option<(usize, usize)> {
    design.decisions.iter().find_map(|d| d.arms.iter().position(|a| a.branch == Some(b)).map(|i| (d.id, i)))
}

#[cfg(test)]
mod tests;
