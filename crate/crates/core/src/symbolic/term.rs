// SPDX-License-Identifier: Apache-2.0

//! Bit-vector terms over per-cycle symbolic variables.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bits::{apply_binary, apply_unary, extract, mask, BinaryOp, BitVecLiteral, UnaryOp};

/// One input (or register version) at one cycle, rendered `name_cycle`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SymVar {
    pub cycle: usize,
    pub name: String,
    pub width: u32,
}

impl SymVar {
    pub fn new(name: &str, cycle: usize, width: u32) -> Self {
        SymVar { cycle, name: name.to_string(), width }
    }
}

impl fmt::Display for SymVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.name, self.cycle)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TermKind {
    Var(SymVar),
    Const(u64),
    Unary(UnaryOp, Arc<Term>),
    /// Operands are zero-extended as in [`apply_binary`].
    Binary(BinaryOp, Arc<Term>, Arc<Term>),
    Ite(Arc<Term>, Arc<Term>, Arc<Term>),
    /// `width` bits starting at `lo`.
    Extract(Arc<Term>, u32),
    /// Most significant part first.
    Concat(Vec<Arc<Term>>),
    /// Zero-extension or truncation to the term's width.
    Resize(Arc<Term>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Term {
    pub kind: TermKind,
    pub width: u32,
}

pub type TermRef = Arc<Term>;

fn mk(kind: TermKind, width: u32) -> TermRef {
    Arc::new(Term { kind, width })
}

impl Term {
    pub fn var(v: SymVar) -> TermRef {
        let w = v.width;
        mk(TermKind::Var(v), w)
    }

    pub fn constant(value: u64, width: u32) -> TermRef {
        mk(TermKind::Const(value & mask(width)), width)
    }

    pub fn as_const(&self) -> Option<u64> {
        match self.kind {
            TermKind::Const(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_var(&self) -> Option<&SymVar> {
        match &self.kind {
            TermKind::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn unary(op: UnaryOp, a: &TermRef) -> TermRef {
        let w = op.result_width(a.width);
        if let Some(v) = a.as_const() {
            return Term::constant(apply_unary(op, v, a.width), w);
        }
        if op == UnaryOp::LogNot && a.is_predicate() {
            return Term::negate(a);
        }
        mk(TermKind::Unary(op, a.clone()), w)
    }

    pub fn binary(op: BinaryOp, a: &TermRef, b: &TermRef) -> TermRef {
        let w = op.result_width(a.width, b.width);
        if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
            return Term::constant(apply_binary(op, x, a.width, y, b.width), w);
        }
        mk(TermKind::Binary(op, a.clone(), b.clone()), w)
    }

    pub fn ite(c: &TermRef, t: &TermRef, f: &TermRef) -> TermRef {
        let w = t.width.max(f.width);
        if let Some(cv) = c.as_const() {
            return Term::resize(if cv != 0 { t } else { f }, w);
        }
        mk(TermKind::Ite(c.clone(), Term::resize(t, w), Term::resize(f, w)), w)
    }

    pub fn extract(a: &TermRef, lo: u32, width: u32) -> TermRef {
        if lo == 0 && width == a.width {
            return a.clone();
        }
        if let Some(v) = a.as_const() {
            return Term::constant(extract(v, lo + width - 1, lo), width);
        }
        mk(TermKind::Extract(a.clone(), lo), width)
    }

    pub fn concat(parts: &[TermRef]) -> TermRef {
        if parts.len() == 1 {
            return parts[0].clone();
        }
        let width: u32 = parts.iter().map(|p| p.width).sum();
        if parts.iter().all(|p| p.as_const().is_some()) {
            let mut v = 0u64;
            for p in parts {
                v = if p.width >= 64 { p.as_const().unwrap() } else { (v << p.width) | p.as_const().unwrap() };
            }
            return Term::constant(v, width.min(64));
        }
        mk(TermKind::Concat(parts.to_vec()), width.min(64))
    }

    pub fn resize(a: &TermRef, width: u32) -> TermRef {
        if a.width == width {
            return a.clone();
        }
        if let Some(v) = a.as_const() {
            return Term::constant(v, width);
        }
        mk(TermKind::Resize(a.clone()), width)
    }

    pub fn eq(a: &TermRef, b: &TermRef) -> TermRef {
        Term::binary(BinaryOp::Eq, a, b)
    }

    pub fn and(a: &TermRef, b: &TermRef) -> TermRef {
        match (a.as_const(), b.as_const()) {
            (Some(0), _) | (_, Some(0)) => Term::constant(0, 1),
            (Some(_), _) => Term::truth(b),
            (_, Some(_)) => Term::truth(a),
            _ => Term::binary(BinaryOp::LogAnd, a, b),
        }
    }

    pub fn or(a: &TermRef, b: &TermRef) -> TermRef {
        match (a.as_const(), b.as_const()) {
            (Some(x), _) if x != 0 => Term::constant(1, 1),
            (_, Some(y)) if y != 0 => Term::constant(1, 1),
            (Some(_), _) => Term::truth(b),
            (_, Some(_)) => Term::truth(a),
            _ => Term::binary(BinaryOp::LogOr, a, b),
        }
    }

    /// True for 1-bit terms built from comparisons and logical operators.
    pub fn is_predicate(&self) -> bool {
        match &self.kind {
            TermKind::Binary(op, ..) => op.is_predicate(),
            TermKind::Unary(UnaryOp::LogNot | UnaryOp::RedAnd | UnaryOp::RedOr, _) => true,
            _ => false,
        }
    }

    /// 1-bit "is non-zero" predicate, kept readable.
    pub fn truth(a: &TermRef) -> TermRef {
        if a.is_predicate() {
            return a.clone();
        }
        if a.width == 1 {
            return Term::eq(a, &Term::constant(1, 1));
        }
        Term::binary(BinaryOp::Ne, a, &Term::constant(0, a.width))
    }

    /// 1-bit "is zero" predicate, flipping comparisons where possible.
    pub fn negate(a: &TermRef) -> TermRef {
        if let Some(v) = a.as_const() {
            return Term::constant(u64::from(v == 0), 1);
        }
        if let TermKind::Binary(op, x, y) = &a.kind {
            let flipped = match op {
                BinaryOp::Eq => Some(BinaryOp::Ne),
                BinaryOp::Ne => Some(BinaryOp::Eq),
                BinaryOp::Lt => Some(BinaryOp::Ge),
                BinaryOp::Ge => Some(BinaryOp::Lt),
                BinaryOp::Gt => Some(BinaryOp::Le),
                BinaryOp::Le => Some(BinaryOp::Gt),
                _ => None,
            };
            if let Some(f) = flipped {
                return Term::binary(f, x, y);
            }
        }
        if a.is_predicate() {
            return mk(TermKind::Unary(UnaryOp::LogNot, a.clone()), 1);
        }
        Term::eq(a, &Term::constant(0, a.width))
    }

    /// Evaluates under `env`; `None` when a variable is unbound.
    pub fn eval(&self, env: &dyn Fn(&SymVar) -> Option<u64>) -> Option<u64> {
        Some(match &self.kind {
            TermKind::Var(v) => env(v)? & mask(self.width),
            TermKind::Const(c) => *c,
            TermKind::Unary(op, a) => apply_unary(*op, a.eval(env)?, a.width),
            TermKind::Binary(op, a, b) => apply_binary(*op, a.eval(env)?, a.width, b.eval(env)?, b.width),
            TermKind::Ite(c, t, f) => {
                if c.eval(env)? != 0 {
                    t.eval(env)?
                } else {
                    f.eval(env)?
                }
            }
            TermKind::Extract(a, lo) => extract(a.eval(env)?, lo + self.width - 1, *lo),
            TermKind::Concat(parts) => {
                let mut v = 0u64;
                for p in parts {
                    let x = p.eval(env)?;
                    v = if p.width >= 64 { x } else { (v << p.width) | x };
                }
                v & mask(self.width)
            }
            TermKind::Resize(a) => a.eval(env)? & mask(self.width),
        })
    }

    pub fn vars(&self) -> BTreeSet<SymVar> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<SymVar>) {
        match &self.kind {
            TermKind::Var(v) => {
                out.insert(v.clone());
            }
            TermKind::Const(_) => {}
            TermKind::Unary(_, a) | TermKind::Extract(a, _) | TermKind::Resize(a) => a.collect_vars(out),
            TermKind::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            TermKind::Ite(c, t, f) => {
                c.collect_vars(out);
                t.collect_vars(out);
                f.collect_vars(out);
            }
            TermKind::Concat(parts) => parts.iter().for_each(|p| p.collect_vars(out)),
        }
    }

    pub fn mentions(&self, v: &SymVar) -> bool {
        match &self.kind {
            TermKind::Var(x) => x == v,
            TermKind::Const(_) => false,
            TermKind::Unary(_, a) | TermKind::Extract(a, _) | TermKind::Resize(a) => a.mentions(v),
            TermKind::Binary(_, a, b) => a.mentions(v) || b.mentions(v),
            TermKind::Ite(c, t, f) => c.mentions(v) || t.mentions(v) || f.mentions(v),
            TermKind::Concat(parts) => parts.iter().any(|p| p.mentions(v)),
        }
    }

    /// Checks internal width consistency.
    pub fn well_typed(&self) -> Result<(), String> {
        let bad = |what: &str| Err(format!("width mismatch in {what}: {self}"));
        match &self.kind {
            TermKind::Var(v) if v.width != self.width => bad("variable"),
            TermKind::Const(c) if self.width == 0 || self.width > 64 || c & !mask(self.width) != 0 => {
                bad("constant")
            }
            TermKind::Unary(op, a) => {
                a.well_typed()?;
                if op.result_width(a.width) != self.width {
                    return bad("unary");
                }
                Ok(())
            }
            TermKind::Binary(op, a, b) => {
                a.well_typed()?;
                b.well_typed()?;
                if op.result_width(a.width, b.width) != self.width {
                    return bad("binary");
                }
                Ok(())
            }
            TermKind::Ite(c, t, f) => {
                c.well_typed()?;
                t.well_typed()?;
                f.well_typed()?;
                if t.width != self.width || f.width != self.width {
                    return bad("conditional");
                }
                Ok(())
            }
            TermKind::Extract(a, lo) => {
                a.well_typed()?;
                if lo + self.width > a.width {
                    return bad("extract");
                }
                Ok(())
            }
            TermKind::Concat(parts) => {
                for p in parts {
                    p.well_typed()?;
                }
                if parts.iter().map(|p| p.width).sum::<u32>() != self.width {
                    return bad("concatenation");
                }
                Ok(())
            }
            TermKind::Resize(a) => a.well_typed(),
            _ => Ok(()),
        }
    }

    fn needs_parens(&self) -> bool {
        matches!(self.kind, TermKind::Binary(..) | TermKind::Ite(..))
    }
}

struct Sub<'a>(&'a Term);

impl fmt::Display for Sub<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.needs_parens() {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            TermKind::Var(v) => write!(f, "{v}"),
            TermKind::Const(c) => write!(f, "{}", BitVecLiteral::new(self.width, *c)),
            TermKind::Unary(op, a) => write!(f, "{}{}", op.symbol(), Sub(a)),
            TermKind::Binary(op, a, b) => write!(f, "{} {} {}", Sub(a), op.symbol(), Sub(b)),
            TermKind::Ite(c, t, e) => write!(f, "{} ? {} : {}", Sub(c), Sub(t), Sub(e)),
            TermKind::Extract(a, lo) => write!(f, "{}[{}:{}]", Sub(a), lo + self.width - 1, lo),
            TermKind::Concat(parts) => {
                f.write_str("{")?;
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{p}")?;
                }
                f.write_str("}")
            }
            TermKind::Resize(a) => write!(f, "{}'({})", self.width, a),
        }
    }
}
