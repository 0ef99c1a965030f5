// SPDX-License-Identifier: Apache-2.0

//! Cycle executor, generic over the value domain.
//!
//! The concrete simulator runs it over plain bit-vectors; the symbolic
//! engine runs the same code over values that also carry a term, so both
//! follow exactly the same path.

use thiserror::Error;

use super::design::{CombItem, Design, LExpr, LStmt, LTarget, SigId};
use crate::bits::{apply_binary, apply_unary, extract, mask, BinaryOp, UnaryOp};
use crate::cfg::BranchId;

pub const SETTLE_LIMIT: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExecError {
    #[error("combinational loop: no fixpoint after {SETTLE_LIMIT} iterations")]
    CombLoop,
}

/// Operations the executor needs from a value domain. Every value carries a
/// concrete part; symbolic domains add a term alongside it.
pub trait Domain {
    type V: Clone + std::fmt::Debug;
    /// Whether decision subjects and concretizations should be reported.
    const TRACKS: bool;

    fn value(v: &Self::V) -> u64;
    fn width(v: &Self::V) -> u32;
    fn constant(&mut self, value: u64, width: u32) -> Self::V;
    fn unary(&mut self, op: UnaryOp, a: &Self::V) -> Self::V;
    fn binary(&mut self, op: BinaryOp, a: &Self::V, b: &Self::V) -> Self::V;
    /// `c ? t : f` at the wider of the two arm widths.
    fn ite(&mut self, c: &Self::V, t: &Self::V, f: &Self::V) -> Self::V;
    fn extract(&mut self, a: &Self::V, lo: u32, width: u32) -> Self::V;
    /// Concatenation, most significant part first.
    fn concat(&mut self, parts: &[Self::V]) -> Self::V;
    /// Zero-extends or truncates.
    fn resize(&mut self, a: &Self::V, width: u32) -> Self::V;

    /// `base` with bits `[lo, lo + width(val))` replaced by `val`.
    fn insert(&mut self, base: &Self::V, lo: u32, val: &Self::V) -> Self::V {
        let bw = Self::width(base);
        let vw = Self::width(val).min(bw - lo);
        let val = self.resize(val, vw);
        let mut parts = Vec::new();
        if lo + vw < bw {
            parts.push(self.extract(base, lo + vw, bw - lo - vw));
        }
        parts.push(val);
        if lo > 0 {
            parts.push(self.extract(base, 0, lo));
        }
        self.concat(&parts)
    }
}

/// Plain two-state values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CVal {
    pub value: u64,
    pub width: u32,
}

#[derive(Debug, Default, Clone, Copy)]
pub struct Concrete;

impl Domain for Concrete {
    type V = CVal;
    const TRACKS: bool = false;

    fn value(v: &CVal) -> u64 {
        v.value
    }
    fn width(v: &CVal) -> u32 {
        v.width
    }
    fn constant(&mut self, value: u64, width: u32) -> CVal {
        CVal { value: value & mask(width), width }
    }
    fn unary(&mut self, op: UnaryOp, a: &CVal) -> CVal {
        CVal { value: apply_unary(op, a.value, a.width), width: op.result_width(a.width) }
    }
    fn binary(&mut self, op: BinaryOp, a: &CVal, b: &CVal) -> CVal {
        CVal {
            value: apply_binary(op, a.value, a.width, b.value, b.width),
            width: op.result_width(a.width, b.width),
        }
    }
    fn ite(&mut self, c: &CVal, t: &CVal, f: &CVal) -> CVal {
        CVal { value: if c.value != 0 { t.value } else { f.value }, width: t.width.max(f.width) }
    }
    fn extract(&mut self, a: &CVal, lo: u32, width: u32) -> CVal {
        CVal { value: extract(a.value, lo + width - 1, lo), width }
    }
    fn concat(&mut self, parts: &[CVal]) -> CVal {
        let mut value = 0u64;
        let mut width = 0;
        for p in parts {
            value = if p.width >= 64 { p.value } else { (value << p.width) | p.value };
            width += p.width;
        }
        CVal { value: value & mask(width.min(64)), width: width.min(64) }
    }
    fn resize(&mut self, a: &CVal, width: u32) -> CVal {
        CVal { value: a.value & mask(width), width }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExecEvent<V> {
    /// A decision executed and chose `arm`; `subject` is the `if`
    /// condition or the case subject.
    Decision { decision: usize, arm: usize, subject: V },
    /// A dynamic index or shift amount was fixed to its current value.
    Concretized { value: V },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput<V> {
    /// Events in execution order (stable settle pass, then clocked phase).
    /// Only populated for tracking domains.
    pub events: Vec<ExecEvent<V>>,
    pub branches: Vec<BranchId>,
    /// Every decision arm taken, including non-leaf arms.
    pub edges: Vec<(usize, usize)>,
    /// Signals written in the clocked phase, first-write order.
    pub clocked_writes: Vec<SigId>,
    /// Lines printed by `$display` in clocked processes, when captured.
    pub display: Vec<String>,
}

impl<V> Default for StepOutput<V> {
    fn default() -> Self {
        StepOutput {
            events: Vec::new(),
            branches: Vec::new(),
            edges: Vec::new(),
            clocked_writes: Vec::new(),
            display: Vec::new(),
        }
    }
}

pub struct Executor<'d, D: Domain> {
    pub design: &'d Design,
    /// Current value of every signal.
    pub values: Vec<D::V>,
    pub capture_display: bool,
}

struct Ctx<V> {
    record: bool,
    clocked: bool,
    out: StepOutput<V>,
    pending: Vec<(SigId, u32, V)>,
}

impl<'d, D: Domain> Executor<'d, D> {
    /// All signals start at zero.
    pub fn new(design: &'d Design, dom: &mut D) -> Self {
        let values = design.signals.iter().map(|s| dom.constant(0, s.width)).collect();
        Executor { design, values, capture_display: false }
    }

    /// Runs one clock cycle with `inputs` aligned to `design.inputs`.
    pub fn step(&mut self, dom: &mut D, inputs: &[D::V]) -> Result<StepOutput<D::V>, ExecError> {
        for (&sig, v) in self.design.inputs.iter().zip(inputs) {
            self.values[sig] = v.clone();
        }
        let mut out = self.settle(dom, true)?;
        let mut ctx = Ctx { record: true, clocked: true, out: StepOutput::default(), pending: Vec::new() };
        std::mem::swap(&mut ctx.out, &mut out);
        let design = self.design;
        for p in &design.clocked {
            self.block(dom, &p.body, &mut ctx);
        }
        // Non-blocking commit, last write wins.
        for (sig, lo, v) in std::mem::take(&mut ctx.pending) {
            let full = self.design.width(sig);
            let new = if lo == 0 && D::width(&v) == full {
                v
            } else {
                let base = self.values[sig].clone();
                dom.insert(&base, lo, &v)
            };
            self.values[sig] = new;
        }
        self.settle(dom, false)?;
        Ok(ctx.out)
    }

    /// Evaluates combinational logic to a fixpoint. When `record` is set the
    /// output of the final (stable) pass is returned.
    fn settle(&mut self, dom: &mut D, record: bool) -> Result<StepOutput<D::V>, ExecError> {
        let design = self.design;
        for _ in 0..SETTLE_LIMIT {
            let before: Vec<u64> = self.values.iter().map(D::value).collect();
            let mut ctx = Ctx { record, clocked: false, out: StepOutput::default(), pending: Vec::new() };
            for item in &design.comb {
                match item {
                    CombItem::Assign { target, rhs } => {
                        let v = self.eval(dom, rhs, &mut ctx);
                        self.assign(dom, target, v, false, &mut ctx);
                    }
                    CombItem::Process(p) => self.block(dom, &p.body, &mut ctx),
                }
            }
            let stable = self.values.iter().map(D::value).eq(before.iter().copied());
            if stable {
                return Ok(ctx.out);
            }
        }
        Err(ExecError::CombLoop)
    }

    fn block(&mut self, dom: &mut D, body: &[LStmt], ctx: &mut Ctx<D::V>) {
        for s in body {
            self.stmt(dom, s, ctx);
        }
    }

    fn take_arm(&self, ctx: &mut Ctx<D::V>, decision: usize, arm: usize, subject: &D::V) {
        if !ctx.record {
            return;
        }
        ctx.out.edges.push((decision, arm));
        if let Some(b) = self.design.branch_of(decision, arm) {
            ctx.out.branches.push(b);
        }
        if D::TRACKS {
            ctx.out.events.push(ExecEvent::Decision { decision, arm, subject: subject.clone() });
        }
    }

    fn stmt(&mut self, dom: &mut D, s: &LStmt, ctx: &mut Ctx<D::V>) {
        match s {
            LStmt::Assign { target, rhs, nonblocking } => {
                let v = self.eval(dom, rhs, ctx);
                self.assign(dom, target, v, *nonblocking, ctx);
            }
            LStmt::If { decision, cond, then_s, else_s } => {
                let c = self.eval(dom, cond, ctx);
                let arm = if D::value(&c) != 0 { 0 } else { 1 };
                self.take_arm(ctx, *decision, arm, &c);
                self.block(dom, if arm == 0 { then_s } else { else_s }, ctx);
            }
            LStmt::Case { decision, subject, items, default } => {
                let v = self.eval(dom, subject, ctx);
                let sv = D::value(&v);
                let hit = items.iter().position(|i| i.labels.iter().any(|(l, _)| *l == sv));
                let arm = hit.unwrap_or(items.len());
                self.take_arm(ctx, *decision, arm, &v);
                match hit {
                    Some(i) => self.block(dom, &items[i].body, ctx),
                    None => self.block(dom, default, ctx),
                }
            }
            LStmt::Display { format, args } => {
                if ctx.clocked && ctx.record && self.capture_display {
                    let vals: Vec<(u64, u32)> = args
                        .iter()
                        .map(|a| {
                            let v = self.eval(dom, a, ctx);
                            (D::value(&v), D::width(&v))
                        })
                        .collect();
                    ctx.out.display.push(format_display(format, &vals));
                }
            }
        }
    }

    fn concretize(&mut self, dom: &mut D, v: D::V, ctx: &mut Ctx<D::V>) -> u64 {
        let value = D::value(&v);
        if D::TRACKS && ctx.record {
            ctx.out.events.push(ExecEvent::Concretized { value: v });
        }
        let _ = dom;
        value
    }

    fn eval(&mut self, dom: &mut D, e: &LExpr, ctx: &mut Ctx<D::V>) -> D::V {
        match e {
            LExpr::Sig(s, _) => self.values[*s].clone(),
            LExpr::Const { value, width } => dom.constant(*value, *width),
            LExpr::Unary { op, a, width } => {
                let a = self.eval(dom, a, ctx);
                let r = dom.unary(*op, &a);
                debug_assert_eq!(D::width(&r), *width);
                r
            }
            LExpr::Binary { op, a, b, .. } => {
                let a = self.eval(dom, a, ctx);
                let b = self.eval(dom, b, ctx);
                let b = if matches!(op, BinaryOp::Shl | BinaryOp::Shr) {
                    let w = D::width(&b);
                    let amount = self.concretize(dom, b, ctx);
                    dom.constant(amount, w)
                } else {
                    b
                };
                dom.binary(*op, &a, &b)
            }
            LExpr::Ternary { c, t, f, .. } => {
                let c = self.eval(dom, c, ctx);
                let t = self.eval(dom, t, ctx);
                let f = self.eval(dom, f, ctx);
                dom.ite(&c, &t, &f)
            }
            LExpr::Index { sig, index, lsb } => {
                let i = self.eval(dom, index, ctx);
                let i = self.concretize(dom, i, ctx);
                let w = self.design.width(*sig);
                match i.checked_sub(*lsb as u64).filter(|k| *k < w as u64) {
                    Some(k) => {
                        let base = self.values[*sig].clone();
                        dom.extract(&base, k as u32, 1)
                    }
                    None => dom.constant(0, 1),
                }
            }
            LExpr::Slice { sig, lo, width } => {
                let base = self.values[*sig].clone();
                dom.extract(&base, *lo, *width)
            }
            LExpr::Concat { parts, .. } => {
                let vals: Vec<D::V> = parts.iter().map(|p| self.eval(dom, p, ctx)).collect();
                dom.concat(&vals)
            }
        }
    }

    fn write(&mut self, dom: &mut D, sig: SigId, lo: u32, v: D::V, nonblocking: bool, ctx: &mut Ctx<D::V>) {
        if ctx.clocked && ctx.record && !ctx.out.clocked_writes.contains(&sig) {
            ctx.out.clocked_writes.push(sig);
        }
        if nonblocking {
            ctx.pending.push((sig, lo, v));
            return;
        }
        let full = self.design.width(sig);
        self.values[sig] = if lo == 0 && D::width(&v) == full {
            v
        } else {
            let base = self.values[sig].clone();
            dom.insert(&base, lo, &v)
        };
    }

    fn assign(&mut self, dom: &mut D, t: &LTarget, v: D::V, nonblocking: bool, ctx: &mut Ctx<D::V>) {
        match t {
            LTarget::Whole(sig) => {
                let v = dom.resize(&v, self.design.width(*sig));
                self.write(dom, *sig, 0, v, nonblocking, ctx);
            }
            LTarget::Bit { sig, index, lsb } => {
                let i = self.eval(dom, index, ctx);
                let i = self.concretize(dom, i, ctx);
                let w = self.design.width(*sig);
                if let Some(k) = i.checked_sub(*lsb as u64).filter(|k| *k < w as u64) {
                    let v = dom.resize(&v, 1);
                    self.write(dom, *sig, k as u32, v, nonblocking, ctx);
                }
            }
            LTarget::Slice { sig, lo, width } => {
                let v = dom.resize(&v, *width);
                self.write(dom, *sig, *lo, v, nonblocking, ctx);
            }
            LTarget::Concat(parts) => {
                let total: u32 = parts.iter().map(|p| self.design.target_width(p)).sum();
                let v = dom.resize(&v, total);
                let mut hi = total;
                for p in parts {
                    let w = self.design.target_width(p);
                    hi -= w;
                    let piece = dom.extract(&v, hi, w);
                    self.assign(dom, p, piece, nonblocking, ctx);
                }
            }
        }
    }
}

/// Renders a `$display` format with `%h`, `%x`, `%d`, `%b` (optionally
/// `%0...`) and `%%`, plus the `\n`, `\t`, `\\` and `\"` escapes.
pub fn format_display(format: &str, args: &[(u64, u32)]) -> String {
    let mut out = String::new();
    let mut chars = format.chars().peekable();
    let mut args = args.iter();
    while let Some(c) = chars.next() {
        match c {
            '\\' => match chars.next() {
                Some('n') => out.push('\n'),
                Some('t') => out.push('\t'),
                Some(other) => out.push(other),
                None => out.push('\\'),
            },
            '%' => {
                let mut minimal = false;
                while chars.peek() == Some(&'0') {
                    chars.next();
                    minimal = true;
                }
                let spec = chars.next().map(|c| c.to_ascii_lowercase());
                if spec == Some('%') {
                    out.push('%');
                    continue;
                }
                let Some(&(v, w)) = args.next() else {
                    continue;
                };
                match spec {
                    Some('h') | Some('x') => {
                        if minimal {
                            out.push_str(&format!("{v:x}"));
                        } else {
                            out.push_str(&format!("{v:0digits$x}", digits = w.div_ceil(4) as usize));
                        }
                    }
                    Some('b') => {
                        if minimal {
                            out.push_str(&format!("{v:b}"));
                        } else {
                            out.push_str(&format!("{v:0digits$b}", digits = w as usize));
                        }
                    }
                    _ => out.push_str(&v.to_string()),
                }
            }
            c => out.push(c),
        }
    }
    out
}
