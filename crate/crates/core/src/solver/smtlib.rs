// SPDX-License-Identifier: Apache-2.0

//! SMT-LIB2 (`QF_BV`) output and solver response parsing.

use std::fmt::Write;

use crate::bits::{mask, BinaryOp, UnaryOp};
use crate::symbolic::{ConstraintSet, SymVar, Term, TermKind};

use super::Assignment;

fn bv_const(value: u64, width: u32) -> String {
    format!("(_ bv{} {})", value & mask(width), width)
}

fn zext(s: String, from: u32, to: u32) -> String {
    if to > from {
        format!("((_ zero_extend {}) {})", to - from, s)
    } else if to < from {
        format!("((_ extract {} 0) {})", to - 1, s)
    } else {
        s
    }
}

/// Bit-vector form of `t`.
fn bv(t: &Term) -> String {
    match &t.kind {
        TermKind::Var(v) => v.to_string(),
        TermKind::Const(c) => bv_const(*c, t.width),
        TermKind::Unary(op, a) => match op {
            UnaryOp::Not => format!("(bvnot {})", bv(a)),
            UnaryOp::Neg => format!("(bvneg {})", bv(a)),
            UnaryOp::RedXor => {
                let bits: Vec<String> =
                    (0..a.width).map(|i| format!("((_ extract {i} {i}) {})", bv(a))).collect();
                bits.into_iter().reduce(|x, y| format!("(bvxor {x} {y})")).unwrap()
            }
            _ => bool_to_bv(&boolean(t)),
        },
        TermKind::Binary(op, a, b) => {
            let w = a.width.max(b.width);
            let (x, y) = (zext(bv(a), a.width, w), zext(bv(b), b.width, w));
            let name = match op {
                BinaryOp::Add => "bvadd",
                BinaryOp::Sub => "bvsub",
                BinaryOp::And => "bvand",
                BinaryOp::Or => "bvor",
                BinaryOp::Xor => "bvxor",
                BinaryOp::Shl => "bvshl",
                BinaryOp::Shr => "bvlshr",
                _ => return bool_to_bv(&boolean(t)),
            };
            // Shifts are computed at the common width, then cut back to the
            // left operand; amounts at or past the width still give zero.
            zext(format!("({name} {x} {y})"), w, t.width)
        }
        TermKind::Ite(c, a, b) => format!("(ite {} {} {})", truth(c), bv(a), bv(b)),
        TermKind::Extract(a, lo) => format!("((_ extract {} {}) {})", lo + t.width - 1, lo, bv(a)),
        TermKind::Concat(parts) => {
            let inner: Vec<String> = parts.iter().map(|p| bv(p)).collect();
            format!("(concat {})", inner.join(" "))
        }
        TermKind::Resize(a) => zext(bv(a), a.width, t.width),
    }
}

fn bool_to_bv(b: &str) -> String {
    format!("(ite {b} #b1 #b0)")
}

/// Boolean form of a predicate term.
fn boolean(t: &Term) -> String {
    match &t.kind {
        TermKind::Unary(UnaryOp::LogNot, a) => format!("(not {})", truth(a)),
        TermKind::Unary(UnaryOp::RedAnd, a) => format!("(= {} {})", bv(a), bv_const(mask(a.width), a.width)),
        TermKind::Unary(UnaryOp::RedOr, a) => format!("(not (= {} {}))", bv(a), bv_const(0, a.width)),
        TermKind::Binary(op, a, b) if op.is_predicate() => {
            if matches!(op, BinaryOp::LogAnd | BinaryOp::LogOr) {
                let name = if *op == BinaryOp::LogAnd { "and" } else { "or" };
                return format!("({name} {} {})", truth(a), truth(b));
            }
            let w = a.width.max(b.width);
            let (x, y) = (zext(bv(a), a.width, w), zext(bv(b), b.width, w));
            match op {
                BinaryOp::Eq => format!("(= {x} {y})"),
                BinaryOp::Ne => format!("(not (= {x} {y}))"),
                BinaryOp::Lt => format!("(bvult {x} {y})"),
                BinaryOp::Le => format!("(bvule {x} {y})"),
                BinaryOp::Gt => format!("(bvugt {x} {y})"),
                BinaryOp::Ge => format!("(bvuge {x} {y})"),
                _ => unreachable!(),
            }
        }
        _ => truth(t),
    }
}

/// Boolean "non-zero" form of any term.
fn truth(t: &Term) -> String {
    if t.is_predicate() {
        return boolean(t);
    }
    format!("(not (= {} {}))", bv(t), bv_const(0, t.width))
}

/// Renders a `QF_BV` script: declarations, one assert per constraint,
/// `check-sat` and `get-model`.
pub fn emit_smtlib(cs: &ConstraintSet) -> String {
    let mut s = String::from("(set-logic QF_BV)\n(set-option :produce-models true)\n");
    for v in cs.vars() {
        let _ = writeln!(s, "(declare-const {v} (_ BitVec {}))", v.width);
    }
    for c in &cs.constraints {
        let _ = writeln!(s, "; {}", c.provenance);
        let _ = writeln!(s, "(assert {})", truth(&c.term));
    }
    s.push_str("(check-sat)\n(get-model)\n");
    s
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '(' | ')' => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push(c.to_string());
            }
            ';' => {
                for c in chars.by_ref() {
                    if c == '\n' {
                        break;
                    }
                }
            }
            '|' => {
                for c in chars.by_ref() {
                    if c == '|' {
                        break;
                    }
                    cur.push(c);
                }
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn parse_sexps(tokens: &[String]) -> Result<Vec<Sexp>, String> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    for t in tokens {
        match t.as_str() {
            "(" => stack.push(Vec::new()),
            ")" => {
                let done = stack.pop().ok_or("unbalanced `)`")?;
                stack.last_mut().ok_or("unbalanced `)`")?.push(Sexp::List(done));
            }
            _ => stack.last_mut().unwrap().push(Sexp::Atom(t.clone())),
        }
    }
    if stack.len() != 1 {
        return Err("unbalanced `(`".into());
    }
    Ok(stack.pop().unwrap())
}

fn bv_value(e: &Sexp) -> Option<u64> {
    match e {
        Sexp::Atom(a) => {
            if let Some(h) = a.strip_prefix("#x") {
                u64::from_str_radix(h, 16).ok()
            } else if let Some(b) = a.strip_prefix("#b") {
                u64::from_str_radix(b, 2).ok()
            } else {
                None
            }
        }
        // (_ bvN W)
        Sexp::List(xs) => match xs.as_slice() {
            [Sexp::Atom(u), Sexp::Atom(v), _] if u == "_" => v.strip_prefix("bv")?.parse().ok(),
            _ => None,
        },
    }
}

/// Reads `(define-fun name () (_ BitVec w) value)` entries for `vars`.
pub fn parse_model(text: &str, vars: &[SymVar]) -> Result<Assignment, String> {
    let sexps = parse_sexps(&tokenize(text))?;
    let mut out = Assignment::new();
    let mut visit = |defs: &[Sexp]| {
        for d in defs {
            if let Sexp::List(xs) = d {
                if let [Sexp::Atom(kw), Sexp::Atom(name), _, _, value] = xs.as_slice() {
                    if kw == "define-fun" {
                        if let Some(v) = vars.iter().find(|v| v.to_string() == *name) {
                            let val = bv_value(value).ok_or_else(|| format!("bad model value for {name}"))?;
                            out.insert(v.clone(), val);
                        }
                    }
                }
            }
        }
        Ok::<(), String>(())
    };
    for s in &sexps {
        match s {
            Sexp::List(xs) if matches!(xs.first(), Some(Sexp::Atom(a)) if a == "model") => visit(&xs[1..])?,
            Sexp::List(xs) => visit(xs)?,
            _ => {}
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SmtResponse {
    Sat(Assignment),
    Unsat,
    Unknown,
}

/// Parses a solver's full stdout for `check-sat` then `get-model`.
/// Variables missing from the model are free and reported as zero.
pub fn parse_response(text: &str, vars: &[SymVar]) -> Result<SmtResponse, String> {
    let first = text.split_whitespace().next().ok_or("empty solver output")?;
    match first {
        "sat" => {
            let rest = &text[text.find("sat").unwrap() + 3..];
            let mut model = parse_model(rest, vars)?;
            for v in vars {
                model.entry(v.clone()).or_insert(0);
            }
            Ok(SmtResponse::Sat(model))
        }
        "unsat" => Ok(SmtResponse::Unsat),
        "unknown" => Ok(SmtResponse::Unknown),
        other => Err(format!("unexpected solver output `{other}`")),
    }
}
