// SPDX-License-Identifier: Apache-2.0

//! Name resolution and width inference over a freshly parsed module.
//!
//! Parameters are folded into literals here, so later stages only ever see
//! ports and nets.

use std::collections::HashMap;

use super::ast::*;
use super::diag::Diagnostic;
use super::parser::fold_const;
use crate::bits::{BitVecLiteral, MAX_WIDTH};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SymKind {
    Input,
    OutputWire,
    OutputReg,
    Wire,
    Reg,
}

#[derive(Debug, Clone, Copy)]
struct Sym {
    kind: SymKind,
    range: Range,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Driver {
    Process(usize),
    Assign(usize),
}

struct Resolver<'a> {
    syms: HashMap<String, Sym>,
    params: HashMap<String, (BitVecLiteral, bool)>,
    consts: HashMap<String, BitVecLiteral>,
    clock: Option<&'a str>,
    errors: Vec<Diagnostic>,
}

pub(crate) fn resolve(m: &mut AstModule) -> Result<(), Vec<Diagnostic>> {
    let mut errors = Vec::new();
    let mut syms = HashMap::new();
    for p in &m.ports {
        let kind = match (p.direction, p.is_reg) {
            (Direction::Input, _) => SymKind::Input,
            (Direction::Output, false) => SymKind::OutputWire,
            (Direction::Output, true) => SymKind::OutputReg,
        };
        if syms.insert(p.name.clone(), Sym { kind, range: p.range }).is_some() {
            errors.push(Diagnostic::error(p.pos, format!("duplicate port `{}`", p.name)));
        }
    }
    for n in &m.nets {
        let kind = if n.kind == NetKind::Reg { SymKind::Reg } else { SymKind::Wire };
        if syms.insert(n.name.clone(), Sym { kind, range: n.range }).is_some() {
            errors.push(Diagnostic::error(n.pos, format!("duplicate declaration of `{}`", n.name)));
        }
    }
    let mut params = HashMap::new();
    let mut consts = HashMap::new();
    for p in &m.params {
        if syms.contains_key(&p.name) {
            errors.push(Diagnostic::error(p.pos, format!("duplicate declaration of `{}`", p.name)));
        }
        params.insert(p.name.clone(), (p.value, p.value.width != 32));
        consts.insert(p.name.clone(), p.value);
    }

    // Clock checks.
    let clocks: Vec<(String, SourcePos)> = m
        .processes
        .iter()
        .filter_map(|p| match &p.trigger {
            Trigger::Posedge(c) => Some((c.clone(), p.pos)),
            Trigger::Star => None,
        })
        .collect();
    let clock_name = clocks.first().map(|(c, _)| c.clone());
    if let Some((clk, pos)) = clocks.first() {
        match syms.get(clk) {
            Some(s) if s.kind == SymKind::Input && s.range.width() == 1 => {}
            Some(s) if s.kind == SymKind::Input => errors
                .push(Diagnostic::error(*pos, format!("clock `{clk}` must be 1 bit wide"))),
            Some(_) => errors
                .push(Diagnostic::error(*pos, format!("clock `{clk}` is not an input port"))),
            None => errors.push(Diagnostic::error(*pos, format!("undeclared identifier `{clk}`"))),
        }
        for (other, opos) in &clocks[1..] {
            if other != clk {
                errors.push(Diagnostic::error(*opos, "unsupported: multiple clocks"));
            }
        }
    }

    let mut r = Resolver { syms, params, consts, clock: clock_name.as_deref(), errors };
    let mut drivers: HashMap<String, Driver> = HashMap::new();

    for (idx, a) in m.assigns.iter_mut().enumerate() {
        r.expr(&mut a.rhs);
        r.lvalue(&mut a.lhs, false);
        for t in a.lhs.targets() {
            r.check_target(t, a.lhs.pos, false);
            claim(&mut drivers, &mut r.errors, t, Driver::Assign(idx), a.lhs.pos);
        }
    }
    for (idx, p) in m.processes.iter_mut().enumerate() {
        let clocked = p.is_clocked();
        let mut written = Vec::new();
        r.stmt(&mut p.body, clocked, &mut written);
        for (t, pos) in written {
            claim(&mut drivers, &mut r.errors, &t, Driver::Process(idx), pos);
        }
    }

    if r.errors.is_empty() {
        Ok(())
    } else {
        let mut errs = r.errors;
        errs.sort_by_key(|d| d.pos);
        errs.dedup();
        Err(errs)
    }
}

fn claim(
    drivers: &mut HashMap<String, Driver>,
    errors: &mut Vec<Diagnostic>,
    name: &str,
    d: Driver,
    pos: SourcePos,
) {
    match drivers.get(name) {
        Some(prev) if *prev != d => {
            errors.push(Diagnostic::error(pos, format!("multiple drivers for `{name}`")))
        }
        Some(_) => {}
        None => {
            drivers.insert(name.to_string(), d);
        }
    }
}

impl Resolver<'_> {
    fn lookup(&mut self, name: &str, pos: SourcePos) -> Option<Sym> {
        match self.syms.get(name) {
            Some(s) => Some(*s),
            None => {
                self.errors.push(Diagnostic::error(pos, format!("undeclared identifier `{name}`")));
                None
            }
        }
    }

    fn check_target(&mut self, name: &str, pos: SourcePos, in_process: bool) {
        let Some(sym) = self.syms.get(name).copied() else {
            self.errors.push(Diagnostic::error(pos, format!("undeclared identifier `{name}`")));
            return;
        };
        let is_reg = matches!(sym.kind, SymKind::Reg | SymKind::OutputReg);
        if sym.kind == SymKind::Input {
            self.errors.push(Diagnostic::error(pos, format!("cannot assign to input `{name}`")));
        } else if in_process && !is_reg {
            self.errors.push(Diagnostic::error(
                pos,
                format!("procedural assignment to non-reg `{name}`"),
            ));
        } else if !in_process && is_reg {
            self.errors.push(Diagnostic::error(
                pos,
                format!("continuous assignment to reg `{name}`"),
            ));
        }
    }

    fn check_bounds(&mut self, name: &str, range: Range, msb: u32, lsb: u32, pos: SourcePos) {
        if msb < lsb {
            self.errors.push(Diagnostic::error(pos, format!("reversed part-select of `{name}`")));
        } else if !range.contains(msb) || !range.contains(lsb) {
            self.errors.push(Diagnostic::error(
                pos,
                format!("select [{msb}:{lsb}] out of range for `{name}`"),
            ));
        }
    }

    /// Folds parameters and infers widths bottom-up.
    fn expr(&mut self, e: &mut Expr) {
        let width = match &mut e.kind {
            ExprKind::Ident(name) => {
                if let Some((lit, sized)) = self.params.get(name.as_str()).copied() {
                    e.kind = ExprKind::Literal { lit, sized };
                    lit.width
                } else if Some(name.as_str()) == self.clock {
                    self.errors.push(Diagnostic::error(
                        e.pos,
                        format!("clock `{name}` used as data"),
                    ));
                    1
                } else {
                    let name = name.clone();
                    self.lookup(&name, e.pos).map_or(1, |s| s.range.width())
                }
            }
            ExprKind::Literal { lit, .. } => lit.width,
            ExprKind::Unary(op, a) => {
                self.expr(a);
                op.result_width(a.width)
            }
            ExprKind::Binary(op, a, b) => {
                self.expr(a);
                self.expr(b);
                op.result_width(a.width, b.width)
            }
            ExprKind::Ternary(c, t, f) => {
                self.expr(c);
                self.expr(t);
                self.expr(f);
                t.width.max(f.width)
            }
            ExprKind::Index(name, idx) => {
                self.expr(idx);
                let name = name.clone();
                if let Some(sym) = self.lookup(&name, e.pos) {
                    if let Ok(v) = fold_const(idx, &self.consts) {
                        if v.value > u32::MAX as u64 || !sym.range.contains(v.value as u32) {
                            self.errors.push(Diagnostic::error(
                                e.pos,
                                format!("index {} out of range for `{name}`", v.value),
                            ));
                        }
                    }
                }
                1
            }
            ExprKind::Slice(name, msb, lsb) => {
                let (name, msb, lsb) = (name.clone(), *msb, *lsb);
                if let Some(sym) = self.lookup(&name, e.pos) {
                    self.check_bounds(&name, sym.range, msb, lsb, e.pos);
                }
                msb.saturating_sub(lsb) + 1
            }
            ExprKind::Concat(parts) => {
                let mut w = 0;
                for p in parts.iter_mut() {
                    self.expr(p);
                    w += p.width;
                }
                w
            }
            ExprKind::Replicate(n, parts) => {
                let mut w = 0;
                for p in parts.iter_mut() {
                    self.expr(p);
                    w += p.width;
                }
                w * *n
            }
        };
        if width > MAX_WIDTH {
            self.errors.push(Diagnostic::error(
                e.pos,
                format!("unsupported: expression wider than {MAX_WIDTH} bits"),
            ));
        }
        e.width = width.clamp(1, MAX_WIDTH);
    }

    fn lvalue(&mut self, l: &mut LValue, _in_process: bool) {
        match &mut l.kind {
            LValueKind::Ident(name) => {
                let name = name.clone();
                self.lookup(&name, l.pos);
            }
            LValueKind::Index(name, idx) => {
                self.expr(idx);
                let name = name.clone();
                if let Some(sym) = self.lookup(&name, l.pos) {
                    if let Ok(v) = fold_const(idx, &self.consts) {
                        if v.value > u32::MAX as u64 || !sym.range.contains(v.value as u32) {
                            self.errors.push(Diagnostic::error(
                                l.pos,
                                format!("index {} out of range for `{name}`", v.value),
                            ));
                        }
                    }
                }
            }
            LValueKind::Slice(name, msb, lsb) => {
                let (name, msb, lsb) = (name.clone(), *msb, *lsb);
                if let Some(sym) = self.lookup(&name, l.pos) {
                    self.check_bounds(&name, sym.range, msb, lsb, l.pos);
                }
            }
            LValueKind::Concat(parts) => {
                for p in parts.iter_mut() {
                    self.lvalue(p, _in_process);
                }
            }
        }
    }

    fn stmt(&mut self, s: &mut Stmt, clocked: bool, written: &mut Vec<(String, SourcePos)>) {
        if matches!(s.kind, StmtKind::NonBlocking(..)) && !clocked {
            self.errors.push(Diagnostic::error(
                s.pos,
                "non-blocking assignment in combinational process",
            ));
        }
        match &mut s.kind {
            StmtKind::Blocking(l, e) | StmtKind::NonBlocking(l, e) => {
                self.expr(e);
                self.lvalue(l, true);
                for t in l.targets() {
                    self.check_target(t, l.pos, true);
                    written.push((t.to_string(), l.pos));
                }
            }
            StmtKind::If { cond, then_branch, else_branch } => {
                self.expr(cond);
                self.stmt(then_branch, clocked, written);
                if let Some(e) = else_branch {
                    self.stmt(e, clocked, written);
                }
            }
            StmtKind::Case { subject, items, default } => {
                self.expr(subject);
                for item in items.iter_mut() {
                    for label in item.labels.iter_mut() {
                        self.expr(label);
                        if !matches!(label.kind, ExprKind::Literal { .. }) {
                            match fold_const(label, &self.consts) {
                                Ok(lit) => {
                                    label.kind = ExprKind::Literal { lit, sized: true };
                                    label.width = lit.width;
                                }
                                Err(_) => self.errors.push(Diagnostic::error(
                                    label.pos,
                                    "case label must be a constant",
                                )),
                            }
                        }
                    }
                    self.stmt(&mut item.body, clocked, written);
                }
                if let Some(d) = default {
                    self.stmt(d, clocked, written);
                }
            }
            StmtKind::Block(stmts) => {
                for st in stmts.iter_mut() {
                    self.stmt(st, clocked, written);
                }
            }
            StmtKind::Display { args, .. } => {
                for a in args.iter_mut() {
                    self.expr(a);
                }
            }
            StmtKind::Null => {}
        }
    }
}
