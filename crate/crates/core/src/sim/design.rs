// SPDX-License-Identifier: Apache-2.0

//! Lowering from the AST to a flat, index-based form the executor runs.

use std::collections::HashMap;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bits::{BinaryOp, UnaryOp};
use crate::cfg::{decisions, BranchId, DecisionInfo};
use crate::verilog::{
    pretty_print, AstModule, Direction, Expr, ExprKind, LValue, LValueKind, NetKind, Stmt,
    StmtKind, Trigger,
};

pub type SigId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LowerError {
    #[error("unknown signal `{0}`")]
    UnknownSignal(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalKind {
    Input,
    Wire,
    Reg,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Signal {
    pub name: String,
    pub width: u32,
    /// Declared LSB; selects are rebased by this amount.
    pub lsb: u32,
    pub kind: SignalKind,
    pub is_output: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LExpr {
    /// Signal and its width.
    Sig(SigId, u32),
    Const { value: u64, width: u32 },
    Unary { op: UnaryOp, a: Box<LExpr>, width: u32 },
    Binary { op: BinaryOp, a: Box<LExpr>, b: Box<LExpr>, width: u32 },
    Ternary { c: Box<LExpr>, t: Box<LExpr>, f: Box<LExpr>, width: u32 },
    /// Single-bit select with a possibly dynamic index.
    Index { sig: SigId, index: Box<LExpr>, lsb: u32 },
    /// Constant part-select; `lo` already rebased.
    Slice { sig: SigId, lo: u32, width: u32 },
    /// Most significant part first.
    Concat { parts: Vec<LExpr>, width: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LTarget {
    Whole(SigId),
    Bit { sig: SigId, index: LExpr, lsb: u32 },
    Slice { sig: SigId, lo: u32, width: u32 },
    /// Most significant part first.
    Concat(Vec<LTarget>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseArm {
    pub labels: Vec<(u64, u32)>,
    pub body: Vec<LStmt>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LStmt {
    Assign { target: LTarget, rhs: LExpr, nonblocking: bool },
    If { decision: usize, cond: LExpr, then_s: Vec<LStmt>, else_s: Vec<LStmt> },
    Case { decision: usize, subject: LExpr, items: Vec<CaseArm>, default: Vec<LStmt> },
    Display { format: String, args: Vec<LExpr> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LProcess {
    /// Index of the process in the source module.
    pub index: usize,
    pub body: Vec<LStmt>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CombItem {
    Assign { target: LTarget, rhs: LExpr },
    Process(LProcess),
}

#[derive(Debug, Clone)]
pub struct Design {
    pub name: String,
    pub signals: Vec<Signal>,
    index: HashMap<String, SigId>,
    /// Data inputs in port order; the clock is excluded.
    pub inputs: Vec<SigId>,
    pub outputs: Vec<SigId>,
    /// Snapshot order.
    pub registers: Vec<SigId>,
    pub clock: Option<String>,
    /// Combinational items in evaluation order.
    pub comb: Vec<CombItem>,
    pub clocked: Vec<LProcess>,
    pub decisions: Vec<DecisionInfo>,
    /// Hex SHA-256 of the printed module.
    pub hash: String,
}

impl LExpr {
    pub fn width(&self) -> u32 {
        match self {
            LExpr::Sig(_, width)
            | LExpr::Const { width, .. }
            | LExpr::Unary { width, .. }
            | LExpr::Binary { width, .. }
            | LExpr::Ternary { width, .. }
            | LExpr::Slice { width, .. }
            | LExpr::Concat { width, .. } => *width,
            LExpr::Index { .. } => 1,
        }
    }

    fn reads(&self, out: &mut Vec<SigId>) {
        match self {
            LExpr::Sig(s, _) | LExpr::Slice { sig: s, .. } => out.push(*s),
            LExpr::Const { .. } => {}
            LExpr::Unary { a, .. } => a.reads(out),
            LExpr::Binary { a, b, .. } => {
                a.reads(out);
                b.reads(out);
            }
            LExpr::Ternary { c, t, f, .. } => {
                c.reads(out);
                t.reads(out);
                f.reads(out);
            }
            LExpr::Index { sig, index, .. } => {
                out.push(*sig);
                index.reads(out);
            }
            LExpr::Concat { parts, .. } => parts.iter().for_each(|p| p.reads(out)),
        }
    }
}

impl LTarget {
    fn writes(&self, out: &mut Vec<SigId>) {
        match self {
            LTarget::Whole(s) | LTarget::Bit { sig: s, .. } | LTarget::Slice { sig: s, .. } => {
                out.push(*s)
            }
            LTarget::Concat(parts) => parts.iter().for_each(|p| p.writes(out)),
        }
    }

    fn reads(&self, out: &mut Vec<SigId>) {
        match self {
            LTarget::Bit { index, .. } => index.reads(out),
            LTarget::Concat(parts) => parts.iter().for_each(|p| p.reads(out)),
            _ => {}
        }
    }
}

fn stmt_access(s: &[LStmt], reads: &mut Vec<SigId>, writes: &mut Vec<SigId>) {
    for st in s {
        match st {
            LStmt::Assign { target, rhs, .. } => {
                rhs.reads(reads);
                target.reads(reads);
                target.writes(writes);
            }
            LStmt::If { cond, then_s, else_s, .. } => {
                cond.reads(reads);
                stmt_access(then_s, reads, writes);
                stmt_access(else_s, reads, writes);
            }
            LStmt::Case { subject, items, default, .. } => {
                subject.reads(reads);
                for i in items {
                    stmt_access(&i.body, reads, writes);
                }
                stmt_access(default, reads, writes);
            }
            LStmt::Display { args, .. } => args.iter().for_each(|a| a.reads(reads)),
        }
    }
}

impl CombItem {
    fn access(&self) -> (Vec<SigId>, Vec<SigId>) {
        let (mut r, mut w) = (Vec::new(), Vec::new());
        match self {
            CombItem::Assign { target, rhs } => {
                rhs.reads(&mut r);
                target.reads(&mut r);
                target.writes(&mut w);
            }
            CombItem::Process(p) => stmt_access(&p.body, &mut r, &mut w),
        }
        (r, w)
    }
}

struct Lowerer<'a> {
    d: &'a Design,
    next_decision: usize,
}

impl Lowerer<'_> {
    fn sig(&self, name: &str) -> Result<SigId, LowerError> {
        self.d.signal(name).ok_or_else(|| LowerError::UnknownSignal(name.to_string()))
    }

    fn expr(&self, e: &Expr) -> Result<LExpr, LowerError> {
        Ok(match &e.kind {
            ExprKind::Ident(n) => {
                let s = self.sig(n)?;
                LExpr::Sig(s, self.d.width(s))
            }
            ExprKind::Literal { lit, .. } => LExpr::Const { value: lit.value, width: lit.width },
            ExprKind::Unary(op, a) => {
                LExpr::Unary { op: *op, a: Box::new(self.expr(a)?), width: e.width }
            }
            ExprKind::Binary(op, a, b) => LExpr::Binary {
                op: *op,
                a: Box::new(self.expr(a)?),
                b: Box::new(self.expr(b)?),
                width: e.width,
            },
            ExprKind::Ternary(c, t, f) => LExpr::Ternary {
                c: Box::new(self.expr(c)?),
                t: Box::new(self.expr(t)?),
                f: Box::new(self.expr(f)?),
                width: e.width,
            },
            ExprKind::Index(n, i) => {
                let sig = self.sig(n)?;
                LExpr::Index { sig, index: Box::new(self.expr(i)?), lsb: self.d.signals[sig].lsb }
            }
            ExprKind::Slice(n, msb, lsb) => {
                let sig = self.sig(n)?;
                let base = self.d.signals[sig].lsb;
                LExpr::Slice { sig, lo: lsb - base, width: msb - lsb + 1 }
            }
            ExprKind::Concat(parts) => LExpr::Concat {
                parts: parts.iter().map(|p| self.expr(p)).collect::<Result<_, _>>()?,
                width: e.width,
            },
            ExprKind::Replicate(n, parts) => {
                let one: Vec<LExpr> = parts.iter().map(|p| self.expr(p)).collect::<Result<_, _>>()?;
                let mut all = Vec::new();
                for _ in 0..*n {
                    all.extend(one.iter().cloned());
                }
                LExpr::Concat { parts: all, width: e.width }
            }
        })
    }

    fn target(&self, l: &LValue) -> Result<LTarget, LowerError> {
        Ok(match &l.kind {
            LValueKind::Ident(n) => LTarget::Whole(self.sig(n)?),
            LValueKind::Index(n, i) => {
                let sig = self.sig(n)?;
                LTarget::Bit { sig, index: self.expr(i)?, lsb: self.d.signals[sig].lsb }
            }
            LValueKind::Slice(n, msb, lsb) => {
                let sig = self.sig(n)?;
                let base = self.d.signals[sig].lsb;
                LTarget::Slice { sig, lo: lsb - base, width: msb - lsb + 1 }
            }
            LValueKind::Concat(parts) => {
                LTarget::Concat(parts.iter().map(|p| self.target(p)).collect::<Result<_, _>>()?)
            }
        })
    }

    fn body(&mut self, s: &Stmt) -> Result<Vec<LStmt>, LowerError> {
        let mut out = Vec::new();
        self.stmt(s, &mut out)?;
        Ok(out)
    }

    fn opt_body(&mut self, s: Option<&Stmt>) -> Result<Vec<LStmt>, LowerError> {
        match s {
            Some(s) => self.body(s),
            None => Ok(Vec::new()),
        }
    }

    fn stmt(&mut self, s: &Stmt, out: &mut Vec<LStmt>) -> Result<(), LowerError> {
        match &s.kind {
            StmtKind::Blocking(l, e) | StmtKind::NonBlocking(l, e) => out.push(LStmt::Assign {
                target: self.target(l)?,
                rhs: self.expr(e)?,
                nonblocking: matches!(s.kind, StmtKind::NonBlocking(..)),
            }),
            StmtKind::If { cond, then_branch, else_branch } => {
                let decision = self.next_decision;
                self.next_decision += 1;
                let cond = self.expr(cond)?;
                let then_s = self.body(then_branch)?;
                let else_s = self.opt_body(else_branch.as_deref())?;
                out.push(LStmt::If { decision, cond, then_s, else_s });
            }
            StmtKind::Case { subject, items, default } => {
                let decision = self.next_decision;
                self.next_decision += 1;
                let subject = self.expr(subject)?;
                let mut arms = Vec::new();
                for item in items {
                    let labels = item
                        .labels
                        .iter()
                        .map(|l| match &l.kind {
                            ExprKind::Literal { lit, .. } => (lit.value, lit.width),
                            _ => unreachable!("case label not folded"),
                        })
                        .collect();
                    arms.push(CaseArm { labels, body: self.body(&item.body)? });
                }
                let default = self.opt_body(default.as_deref())?;
                out.push(LStmt::Case { decision, subject, items: arms, default });
            }
            StmtKind::Block(stmts) => {
                for st in stmts {
                    self.stmt(st, out)?;
                }
            }
            StmtKind::Display { format, args } => out.push(LStmt::Display {
                format: format.clone(),
                args: args.iter().map(|a| self.expr(a)).collect::<Result<_, _>>()?,
            }),
            StmtKind::Null => {}
        }
        Ok(())
    }
}

/// Orders items so that writers precede readers where the dependency graph
/// allows it; items on a cycle keep declaration order.
fn schedule(items: Vec<CombItem>) -> Vec<CombItem> {
    let n = items.len();
    let access: Vec<(Vec<SigId>, Vec<SigId>)> = items.iter().map(CombItem::access).collect();
    let mut indeg = vec![0usize; n];
    let mut succ = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if i != j && access[i].1.iter().any(|w| access[j].0.contains(w)) {
                succ[i].push(j);
                indeg[j] += 1;
            }
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut done = vec![false; n];
    while order.len() < n {
        // Lowest-index ready item, or the lowest remaining one on a cycle.
        let next = (0..n)
            .find(|&i| !done[i] && indeg[i] == 0)
            .or_else(|| (0..n).find(|&i| !done[i]))
            .unwrap();
        done[next] = true;
        order.push(next);
        for &j in &succ[next] {
            indeg[j] = indeg[j].saturating_sub(1);
        }
    }
    let mut slots: Vec<Option<CombItem>> = items.into_iter().map(Some).collect();
    order.into_iter().map(|i| slots[i].take().unwrap()).collect()
}

impl Design {
    pub fn lower(m: &AstModule) -> Result<Design, LowerError> {
        let clock = m.clock().map(str::to_string);
        let mut signals = Vec::new();
        for p in &m.ports {
            let kind = match (p.direction, p.is_reg) {
                (Direction::Input, _) => SignalKind::Input,
                (Direction::Output, true) => SignalKind::Reg,
                (Direction::Output, false) => SignalKind::Wire,
            };
            signals.push(Signal {
                name: p.name.clone(),
                width: p.width(),
                lsb: p.range.lsb,
                kind,
                is_output: p.direction == Direction::Output,
            });
        }
        for n in &m.nets {
            signals.push(Signal {
                name: n.name.clone(),
                width: n.width(),
                lsb: n.range.lsb,
                kind: if n.kind == NetKind::Reg { SignalKind::Reg } else { SignalKind::Wire },
                is_output: false,
            });
        }
        let index: HashMap<String, SigId> =
            signals.iter().enumerate().map(|(i, s)| (s.name.clone(), i)).collect();
        let inputs = signals
            .iter()
            .enumerate()
            .filter(|(_, s)| s.kind == SignalKind::Input && Some(&s.name) != clock.as_ref())
            .map(|(i, _)| i)
            .collect();
        let outputs = signals.iter().enumerate().filter(|(_, s)| s.is_output).map(|(i, _)| i).collect();
        let registers = m.registers().iter().map(|(n, _)| index[n]).collect();
        let mut d = Design {
            name: m.name.clone(),
            signals,
            index,
            inputs,
            outputs,
            registers,
            clock,
            comb: Vec::new(),
            clocked: Vec::new(),
            decisions: decisions(m),
            hash: hex_digest(&pretty_print(m)),
        };

        let mut comb = Vec::new();
        let mut clocked = Vec::new();
        {
            let mut low = Lowerer { d: &d, next_decision: 0 };
            for a in &m.assigns {
                comb.push(CombItem::Assign { target: low.target(&a.lhs)?, rhs: low.expr(&a.rhs)? });
            }
            for (i, p) in m.processes.iter().enumerate() {
                let body = low.body(&p.body)?;
                let lp = LProcess { index: i, body };
                match p.trigger {
                    Trigger::Posedge(_) => clocked.push(lp),
                    Trigger::Star => comb.push(CombItem::Process(lp)),
                }
            }
            debug_assert_eq!(low.next_decision, d.decisions.len());
        }
        d.comb = schedule(comb);
        d.clocked = clocked;
        Ok(d)
    }

    pub fn signal(&self, name: &str) -> Option<SigId> {
        self.index.get(name).copied()
    }

    pub fn width(&self, s: SigId) -> u32 {
        self.signals[s].width
    }

    pub fn name_of(&self, s: SigId) -> &str {
        &self.signals[s].name
    }

    pub fn branch_count(&self) -> usize {
        self.decisions.iter().flat_map(|d| &d.arms).filter(|a| a.branch.is_some()).count()
    }

    /// Leaf branch of `arm` of `decision`, if that arm is a leaf.
    pub fn branch_of(&self, decision: usize, arm: usize) -> Option<BranchId> {
        self.decisions[decision].arms[arm].branch
    }

    /// `(name, width)` of every data input.
    pub fn input_ports(&self) -> Vec<(String, u32)> {
        self.inputs.iter().map(|&s| (self.signals[s].name.clone(), self.signals[s].width)).collect()
    }

    pub fn output_ports(&self) -> Vec<(String, u32)> {
        self.outputs.iter().map(|&s| (self.signals[s].name.clone(), self.signals[s].width)).collect()
    }

    pub fn register_list(&self) -> Vec<(String, u32)> {
        self.registers.iter().map(|&s| (self.signals[s].name.clone(), self.signals[s].width)).collect()
    }

    pub fn target_width(&self, t: &LTarget) -> u32 {
        match t {
            LTarget::Whole(s) => self.width(*s),
            LTarget::Bit { .. } => 1,
            LTarget::Slice { width, .. } => *width,
            LTarget::Concat(parts) => parts.iter().map(|p| self.target_width(p)).sum(),
        }
    }
}

pub(crate) fn hex_digest(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
