// SPDX-License-Identifier: Apache-2.0

//! Pretty printer. Output always uses an ANSI port header and four-space
//! indentation, and re-parses to a structurally equal module.

use std::fmt::Write;

use super::ast::*;
use crate::bits::BitVecLiteral;

const INDENT: &str = "    ";

pub fn pretty_print(m: &AstModule) -> String {
    let mut out = String::new();
    let header_params: Vec<&Param> = m.params.iter().filter(|p| !p.local).collect();
    out.push_str("module ");
    out.push_str(&m.name);
    if !header_params.is_empty() {
        out.push_str(" #(\n");
        for (i, p) in header_params.iter().enumerate() {
            let sep = if i + 1 < header_params.len() { "," } else { "" };
            let _ = writeln!(out, "{INDENT}parameter {} = {}{sep}", p.name, param_value(&p.value));
        }
        out.push(')');
    }
    if m.ports.is_empty() {
        out.push_str(";\n");
    } else {
        out.push_str(" (\n");
        for (i, p) in m.ports.iter().enumerate() {
            let sep = if i + 1 < m.ports.len() { "," } else { "" };
            let kind = if p.is_reg { "reg" } else { "wire" };
            let _ = writeln!(out, "{INDENT}{} {kind}{} {}{sep}", p.direction, range(p.range), p.name);
        }
        out.push_str(");\n");
    }

    let locals: Vec<&Param> = m.params.iter().filter(|p| p.local).collect();
    for p in &locals {
        let _ = writeln!(out, "{INDENT}localparam {} = {};", p.name, param_value(&p.value));
    }
    for n in &m.nets {
        let kind = match n.kind {
            NetKind::Wire => "wire",
            NetKind::Reg => "reg",
        };
        let _ = writeln!(out, "{INDENT}{kind}{} {};", range(n.range), n.name);
    }
    if !m.assigns.is_empty() && !(m.nets.is_empty() && locals.is_empty()) {
        out.push('\n');
    }
    for a in &m.assigns {
        let _ = writeln!(out, "{INDENT}assign {} = {};", lvalue(&a.lhs), expr(&a.rhs));
    }
    for p in &m.processes {
        out.push('\n');
        let trig = match &p.trigger {
            Trigger::Posedge(c) => format!("@(posedge {c})"),
            Trigger::Star => "@(*)".to_string(),
        };
        let _ = write!(out, "{INDENT}always {trig}");
        body(&mut out, &p.body, 1);
    }
    out.push_str("endmodule\n");
    out
}

fn range(r: Range) -> String {
    if r == Range::BIT {
        String::new()
    } else {
        format!(" [{}:{}]", r.msb, r.lsb)
    }
}

fn param_value(v: &BitVecLiteral) -> String {
    if v.width == 32 {
        v.value.to_string()
    } else {
        v.to_verilog()
    }
}

fn pad(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str(INDENT);
    }
}

/// Writes a statement that follows a header on the same line (`always ...`,
/// `if (...)`, `label:`), ending with a newline.
fn body(out: &mut String, s: &Stmt, level: usize) {
    match &s.kind {
        StmtKind::Block(_) => {
            out.push(' ');
            stmt_inline(out, s, level);
        }
        _ => {
            out.push('\n');
            pad(out, level + 1);
            stmt_inline(out, s, level + 1);
        }
    }
}

/// Writes a statement whose first line is already indented.
fn stmt_inline(out: &mut String, s: &Stmt, level: usize) {
    match &s.kind {
        StmtKind::Blocking(l, e) => {
            let _ = writeln!(out, "{} = {};", lvalue(l), expr(e));
        }
        StmtKind::NonBlocking(l, e) => {
            let _ = writeln!(out, "{} <= {};", lvalue(l), expr(e));
        }
        StmtKind::Null => out.push_str(";\n"),
        StmtKind::Display { format, args } => {
            let _ = write!(out, "$display(\"{format}\"");
            for a in args {
                let _ = write!(out, ", {}", expr(a));
            }
            out.push_str(");\n");
        }
        StmtKind::Block(stmts) => {
            out.push_str("begin\n");
            for st in stmts {
                pad(out, level + 1);
                stmt_inline(out, st, level + 1);
            }
            pad(out, level);
            out.push_str("end\n");
        }
        StmtKind::If { cond, then_branch, else_branch } => {
            let _ = write!(out, "if ({})", expr(cond));
            // An else-less `if` directly in the then arm would capture our
            // else when re-parsed.
            let dangling = else_branch.is_some() && ends_with_open_if(then_branch);
            if dangling {
                out.push_str(" begin\n");
                pad(out, level + 1);
                stmt_inline(out, then_branch, level + 1);
                pad(out, level);
                out.push_str("end\n");
            } else {
                body(out, then_branch, level);
            }
            if let Some(e) = else_branch {
                pad(out, level);
                out.push_str("else");
                if matches!(e.kind, StmtKind::If { .. }) {
                    out.push(' ');
                    stmt_inline(out, e, level);
                } else {
                    body(out, e, level);
                }
            }
        }
        StmtKind::Case { subject, items, default } => {
            let _ = writeln!(out, "case ({})", expr(subject));
            for item in items {
                pad(out, level + 1);
                let labels: Vec<String> = item.labels.iter().map(expr).collect();
                let _ = write!(out, "{}:", labels.join(", "));
                body(out, &item.body, level + 1);
            }
            if let Some(d) = default {
                pad(out, level + 1);
                out.push_str("default:");
                body(out, d, level + 1);
            }
            pad(out, level);
            out.push_str("endcase\n");
        }
    }
}

fn ends_with_open_if(s: &Stmt) -> bool {
    match &s.kind {
        StmtKind::If { else_branch: None, .. } => true,
        StmtKind::If { else_branch: Some(e), .. } => ends_with_open_if(e),
        _ => false,
    }
}

pub fn lvalue(l: &LValue) -> String {
    match &l.kind {
        LValueKind::Ident(n) => n.clone(),
        LValueKind::Index(n, i) => format!("{n}[{}]", expr(i)),
        LValueKind::Slice(n, msb, lsb) => format!("{n}[{msb}:{lsb}]"),
        LValueKind::Concat(parts) => {
            let p: Vec<String> = parts.iter().map(lvalue).collect();
            format!("{{{}}}", p.join(", "))
        }
    }
}

/// Renders an expression with the minimum parentheses needed to re-parse it
/// to the same tree.
pub fn expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Ident(n) => n.clone(),
        ExprKind::Literal { lit, sized } => {
            if *sized {
                lit.to_verilog()
            } else {
                lit.value.to_string()
            }
        }
        ExprKind::Unary(op, a) => {
            let inner = expr(a);
            match a.kind {
                ExprKind::Binary(..) | ExprKind::Ternary(..) | ExprKind::Unary(..) => {
                    format!("{}({inner})", op.symbol())
                }
                _ => format!("{}{inner}", op.symbol()),
            }
        }
        ExprKind::Binary(op, a, b) => {
            let prec = op.precedence();
            let l = match &a.kind {
                ExprKind::Binary(lop, ..) if lop.precedence() < prec => format!("({})", expr(a)),
                ExprKind::Ternary(..) => format!("({})", expr(a)),
                _ => expr(a),
            };
            let r = match &b.kind {
                ExprKind::Binary(rop, ..) if rop.precedence() <= prec => format!("({})", expr(b)),
                ExprKind::Ternary(..) => format!("({})", expr(b)),
                _ => expr(b),
            };
            format!("{l} {} {r}", op.symbol())
        }
        ExprKind::Ternary(c, t, f) => {
            let c_s = match c.kind {
                ExprKind::Ternary(..) => format!("({})", expr(c)),
                _ => expr(c),
            };
            format!("{c_s} ? {} : {}", expr(t), expr(f))
        }
        ExprKind::Index(n, i) => format!("{n}[{}]", expr(i)),
        ExprKind::Slice(n, msb, lsb) => format!("{n}[{msb}:{lsb}]"),
        ExprKind::Concat(parts) => {
            let p: Vec<String> = parts.iter().map(expr).collect();
            format!("{{{}}}", p.join(", "))
        }
        ExprKind::Replicate(n, parts) => {
            let p: Vec<String> = parts.iter().map(expr).collect();
            format!("{{{n}{{{}}}}}", p.join(", "))
        }
    }
}
