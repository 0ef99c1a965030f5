// SPDX-License-Identifier: Apache-2.0

//! Marker and register-logging injection.
//!
//! Each leaf arm gets a trailing `$display("B_<i>")`, and one extra clocked
//! process prints `R <name> = 0x%0h` for every register. The built-in
//! simulator records branches natively; the text form is for external
//! simulators whose output is read back by [`crate::sim::import_stdout`].

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cfg::{build_cfg, walk_module, ArmSlot, ArmVisit, ArmVisitor, BranchId, BranchMap, Cfg};
use crate::sim::design::{Design, LowerError};
use crate::verilog::{AstModule, Expr, Process, SourcePos, Stmt, StmtKind, Trigger};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InstrumentError {
    #[error("already instrumented")]
    AlreadyInstrumented,
    #[error(transparent)]
    Lower(#[from] LowerError),
}

/// How a leaf arm was changed to hold its marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArmEdit {
    /// The arm was a `begin ... end` block; the marker was appended.
    Appended,
    /// A single statement was wrapped in a block with the marker.
    Wrapped,
    /// The arm was absent and was created to hold the marker.
    Materialized,
}

#[derive(Debug, Clone)]
pub struct InstrumentedDesign {
    /// The module with markers and the logging process.
    pub module: AstModule,
    pub branch_map: BranchMap,
    pub cfg: Cfg,
    /// Registers in snapshot order.
    pub registers: Vec<(String, u32)>,
    pub edits: Vec<(BranchId, ArmEdit)>,
    /// Index of the injected logging process, if any.
    pub logger: Option<usize>,
    /// Lowered form of `module` used by the simulator.
    pub design: Arc<Design>,
}

pub fn is_marker(format: &str) -> bool {
    format.parse::<BranchId>().is_ok()
}

fn is_logger(p: &Process) -> bool {
    if !p.is_clocked() {
        return false;
    }
    let stmts: Vec<&Stmt> = match &p.body.kind {
        StmtKind::Block(s) => s.iter().collect(),
        _ => vec![&p.body],
    };
    !stmts.is_empty()
        && stmts
            .iter()
            .all(|s| matches!(&s.kind, StmtKind::Display { format, .. } if format.starts_with("R ")))
}

fn has_marker(s: &Stmt) -> bool {
    match &s.kind {
        StmtKind::Display { format, .. } => is_marker(format),
        StmtKind::Block(xs) => xs.iter().any(has_marker),
        StmtKind::If { then_branch, else_branch, .. } => {
            has_marker(then_branch) || else_branch.as_deref().is_some_and(has_marker)
        }
        StmtKind::Case { items, default, .. } => {
            items.iter().any(|i| has_marker(&i.body)) || default.as_deref().is_some_and(has_marker)
        }
        _ => false,
    }
}

/// True when `m` already carries markers or a register-logging process.
pub fn is_instrumented(m: &AstModule) -> bool {
    m.processes.iter().any(|p| is_logger(p) || has_marker(&p.body))
}

struct Inject {
    edits: Vec<(BranchId, ArmEdit)>,
}

impl ArmVisitor for Inject {
    fn arm(&mut self, v: ArmVisit, slot: ArmSlot<'_>) {
        let Some(b) = v.branch else { return };
        let marker = |pos: SourcePos| Stmt::display(&b.to_string(), pos);
        let edit = match slot {
            ArmSlot::Required(s) => append(s, marker),
            ArmSlot::Optional(o) => match o {
                Some(s) => append(s, marker),
                None => {
                    *o = Some(Box::new(Stmt::block(vec![marker(SourcePos::START)], SourcePos::START)));
                    ArmEdit::Materialized
                }
            },
        };
        self.edits.push((b, edit));
    }
}

fn append(s: &mut Stmt, marker: impl Fn(SourcePos) -> Stmt) -> ArmEdit {
    match &mut s.kind {
        StmtKind::Block(xs) => {
            xs.push(marker(s.pos));
            ArmEdit::Appended
        }
        _ => {
            let inner = std::mem::replace(s, Stmt::new(StmtKind::Null, s.pos));
            let pos = inner.pos;
            *s = Stmt::block(vec![inner, marker(pos)], pos);
            ArmEdit::Wrapped
        }
    }
}

fn logger_process(m: &AstModule) -> Option<Process> {
    let clock = m.clock()?.to_string();
    let regs = m.registers();
    if regs.is_empty() {
        return None;
    }
    let pos = SourcePos::START;
    let body = regs
        .iter()
        .map(|(name, width)| {
            let mut arg = Expr::ident(name, pos);
            arg.width = *width;
            Stmt::new(
                StmtKind::Display {
                    format: format!("R {name} = 0x%0h"),
                    args: vec![arg],
                },
                pos,
            )
        })
        .collect();
    Some(Process { trigger: Trigger::Posedge(clock), body: Stmt::block(body, pos), pos })
}

/// Injects markers and the logging process.
pub fn instrument(m: &AstModule) -> Result<InstrumentedDesign, InstrumentError> {
    if is_instrumented(m) {
        return Err(InstrumentError::AlreadyInstrumented);
    }
    let mut out = m.clone();
    let mut inject = Inject { edits: Vec::new() };
    walk_module(&mut out, &mut inject);
    let mut logger = None;
    if let Some(p) = logger_process(&out) {
        out.processes.push(p);
        logger = Some(out.processes.len() - 1);
    }
    let design = Arc::new(Design::lower(&out)?);
    // Branch locations refer to the original source.
    let (cfg, branch_map) = build_cfg(m);
    Ok(InstrumentedDesign {
        module: out,
        branch_map,
        cfg,
        registers: m.registers(),
        edits: inject.edits,
        logger,
        design,
    })
}

impl InstrumentedDesign {
    /// Wraps a module that already carries markers, such as a design read
    /// back from disk. Arms are assumed to have held their markers as
    /// appended statements.
    pub fn from_instrumented_module(m: AstModule) -> Result<Self, InstrumentError> {
        let logger = m.processes.iter().position(is_logger);
        let mut plain = m.clone();
        strip_markers(&mut plain, &[]);
        if let Some(l) = logger {
            plain.processes.remove(l);
        }
        let design = Arc::new(Design::lower(&m)?);
        let (cfg, branch_map) = build_cfg(&m);
        let edits = branch_map.ids().map(|b| (b, ArmEdit::Appended)).collect();
        Ok(InstrumentedDesign { registers: plain.registers(), module: m, branch_map, cfg, edits, logger, design })
    }

    /// Instruments a raw module, or wraps an already-instrumented one.
    pub fn from_module(m: AstModule) -> Result<Self, InstrumentError> {
        if is_instrumented(&m) {
            Self::from_instrumented_module(m)
        } else {
            instrument(&m)
        }
    }

    pub fn branch_count(&self) -> usize {
        self.branch_map.len()
    }

    pub fn text(&self) -> String {
        crate::verilog::pretty_print(&self.module)
    }
}

/// Removes markers and the logging process, undoing [`instrument`].
pub fn strip_instrumentation(d: &InstrumentedDesign) -> AstModule {
    let mut m = d.module.clone();
    if let Some(l) = d.logger {
        m.processes.remove(l);
    }
    strip_markers(&mut m, &d.edits);
    m
}

struct Strip<'a> {
    edits: &'a [(BranchId, ArmEdit)],
}

impl ArmVisitor for Strip<'_> {
    fn arm(&mut self, v: ArmVisit, slot: ArmSlot<'_>) {
        let Some(b) = v.branch else { return };
        let edit = self.edits.iter().find(|(x, _)| *x == b).map(|(_, e)| *e);
        match slot {
            ArmSlot::Required(s) => undo(s, edit),
            ArmSlot::Optional(o) => {
                if let Some(s) = o.as_deref_mut() {
                    undo(s, edit);
                }
                if edit == Some(ArmEdit::Materialized) {
                    if let Some(s) = o.as_deref() {
                        if matches!(&s.kind, StmtKind::Block(xs) if xs.is_empty()) {
                            *o = None;
                        }
                    }
                }
            }
        }
    }
}

fn undo(s: &mut Stmt, edit: Option<ArmEdit>) {
    remove_marker_displays(s);
    if edit == Some(ArmEdit::Wrapped) {
        if let StmtKind::Block(xs) = &mut s.kind {
            if xs.len() == 1 {
                *s = xs.pop().unwrap();
            }
        }
    }
}

fn remove_marker_displays(s: &mut Stmt) {
    if let StmtKind::Block(xs) = &mut s.kind {
        xs.retain(|x| !matches!(&x.kind, StmtKind::Display { format, .. } if is_marker(format)));
    }
}

fn strip_markers(m: &mut AstModule, edits: &[(BranchId, ArmEdit)]) {
    walk_module(m, &mut Strip { edits });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verilog::parse_module;

    const LISTING1: &str = include_str!("../designs/listing1.v");
    const LISTING1_RAW: &str = include_str!("../designs/listing1_raw.v");
    const LISTING2: &str = include_str!("../designs/listing2.v");

    fn normalize(text: &str) -> String {
        text.lines()
            .map(|l| l.split("//").next().unwrap())
            .collect::<String>()
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ")
    }

    #[test]
    fn raw_listing1_instruments_to_listing1() {
        let raw = parse_module(LISTING1_RAW).unwrap();
        let inst = instrument(&raw).unwrap();
        let expected = parse_module(LISTING1).unwrap();
        assert!(inst.module.same_structure(&expected), "{}", inst.text());
        // Same text up to layout once both are printed.
        assert_eq!(
            normalize(&inst.text()),
            normalize(&crate::verilog::pretty_print(&expected))
        );
        assert_eq!(inst.registers, vec![("counter".into(), 8), ("out".into(), 1)]);
        assert_eq!(inst.branch_count(), 7);
    }

    #[test]
    fn already_instrumented_is_rejected() {
        let m = parse_module(LISTING1).unwrap();
        assert_eq!(instrument(&m).unwrap_err(), InstrumentError::AlreadyInstrumented);
        assert!(is_instrumented(&m));
    }

    #[test]
    fn strip_inverts_instrument() {
        for src in [LISTING1_RAW, LISTING2] {
            let m = parse_module(src).unwrap();
            let inst = instrument(&m).unwrap();
            assert!(strip_instrumentation(&inst).same_structure(&m));
        }
    }

    #[test]
    fn strip_listing1_removes_displays_and_logger() {
        let d = InstrumentedDesign::from_instrumented_module(parse_module(LISTING1).unwrap()).unwrap();
        let stripped = strip_instrumentation(&d);
        assert!(stripped.same_structure(&parse_module(LISTING1_RAW).unwrap()));
        assert_eq!(stripped.processes.len(), 1);
    }

    #[test]
    fn implicit_arms_are_materialized() {
        let m = parse_module(LISTING2).unwrap();
        let inst = instrument(&m).unwrap();
        // Case with 3 items plus implicit default, then two ifs.
        assert_eq!(inst.branch_count(), 4 + 2 + 1);
        assert!(inst.edits.contains(&(BranchId(4), ArmEdit::Materialized)));
        assert!(inst.edits.contains(&(BranchId(1), ArmEdit::Wrapped)));
        assert!(inst.text().contains("default: begin\n                $display(\"B_4\");"));
    }

    #[test]
    fn zero_registers_means_no_logger() {
        let m = parse_module(
            "module m(input wire a, input wire b, output wire y);\nassign y = a & b;\nendmodule",
        )
        .unwrap();
        let inst = instrument(&m).unwrap();
        assert!(inst.logger.is_none());
        assert_eq!(inst.module.processes.len(), 0);
        assert!(strip_instrumentation(&inst).same_structure(&m));
    }
}
