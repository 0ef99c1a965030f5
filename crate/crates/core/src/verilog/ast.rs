// SPDX-License-Identifier: Apache-2.0

//! AST for the synthesizable Verilog subset.
//!
//! Every node carries the [`SourcePos`] it was parsed from. Positions are not
//! part of structural identity: use [`AstModule::same_structure`] to compare
//! two modules irrespective of layout.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bits::{BinaryOp, BitVecLiteral, UnaryOp};

/// 1-based line and column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SourcePos {
    pub line: u32,
    pub column: u32,
}

impl SourcePos {
    pub const START: SourcePos = SourcePos { line: 1, column: 1 };

    pub fn new(line: u32, column: u32) -> Self {
        debug_assert!(line >= 1 && column >= 1);
        SourcePos { line, column }
    }
}

impl Default for SourcePos {
    fn default() -> Self {
        SourcePos::START
    }
}

impl fmt::Display for SourcePos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Input,
    Output,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Input => "input",
            Direction::Output => "output",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetKind {
    Wire,
    Reg,
}

/// Declared `[msb:lsb]` range; `msb >= lsb`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Range {
    pub msb: u32,
    pub lsb: u32,
}

impl Range {
    pub const BIT: Range = Range { msb: 0, lsb: 0 };

    pub fn width(&self) -> u32 {
        self.msb - self.lsb + 1
    }

    pub fn contains(&self, index: u32) -> bool {
        index >= self.lsb && index <= self.msb
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Port {
    pub name: String,
    pub direction: Direction,
    pub range: Range,
    /// `output reg`.
    pub is_reg: bool,
    pub pos: SourcePos,
}

impl Port {
    pub fn width(&self) -> u32 {
        self.range.width()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Net {
    pub name: String,
    pub kind: NetKind,
    pub range: Range,
    pub pos: SourcePos,
}

impl Net {
    pub fn width(&self) -> u32 {
        self.range.width()
    }
}

/// `parameter` / `localparam` with its value folded at parse time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub value: BitVecLiteral,
    pub local: bool,
    pub pos: SourcePos,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: SourcePos,
    /// Inferred width, filled in by name resolution.
    pub width: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExprKind {
    Ident(String),
    Literal { lit: BitVecLiteral, sized: bool },
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Ternary(Box<Expr>, Box<Expr>, Box<Expr>),
    /// `a[i]`, index in declared-range space.
    Index(String, Box<Expr>),
    /// `a[msb:lsb]` with constant bounds.
    Slice(String, u32, u32),
    Concat(Vec<Expr>),
    /// `{n{...}}`
    Replicate(u32, Vec<Expr>),
}

impl Expr {
    pub fn new(kind: ExprKind, pos: SourcePos) -> Self {
        Expr { kind, pos, width: 0 }
    }

    pub fn ident(name: &str, pos: SourcePos) -> Self {
        Expr::new(ExprKind::Ident(name.to_string()), pos)
    }

    pub fn literal(lit: BitVecLiteral, pos: SourcePos) -> Self {
        Expr { kind: ExprKind::Literal { lit, sized: true }, pos, width: lit.width }
    }

    /// Calls `f` on every identifier referenced by this expression.
    pub fn for_each_ident(&self, f: &mut dyn FnMut(&str)) {
        match &self.kind {
            ExprKind::Ident(n) | ExprKind::Slice(n, _, _) => f(n),
            ExprKind::Index(n, i) => {
                f(n);
                i.for_each_ident(f);
            }
            ExprKind::Literal { .. } => {}
            ExprKind::Unary(_, a) => a.for_each_ident(f),
            ExprKind::Binary(_, a, b) => {
                a.for_each_ident(f);
                b.for_each_ident(f);
            }
            ExprKind::Ternary(c, t, e) => {
                c.for_each_ident(f);
                t.for_each_ident(f);
                e.for_each_ident(f);
            }
            ExprKind::Concat(parts) | ExprKind::Replicate(_, parts) => {
                parts.iter().for_each(|p| p.for_each_ident(f))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LValue {
    pub kind: LValueKind,
    pub pos: SourcePos,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum LValueKind {
    Ident(String),
    Index(String, Expr),
    Slice(String, u32, u32),
    Concat(Vec<LValue>),
}

impl LValue {
    /// Names of every net written through this target.
    pub fn targets(&self) -> Vec<&str> {
        match &self.kind {
            LValueKind::Ident(n) | LValueKind::Index(n, _) | LValueKind::Slice(n, _, _) => {
                vec![n.as_str()]
            }
            LValueKind::Concat(parts) => parts.iter().flat_map(|p| p.targets()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stmt {
    pub kind: StmtKind,
    pub pos: SourcePos,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum StmtKind {
    Blocking(LValue, Expr),
    NonBlocking(LValue, Expr),
    If {
        cond: Expr,
        then_branch: Box<Stmt>,
        else_branch: Option<Box<Stmt>>,
    },
    Case {
        subject: Expr,
        items: Vec<CaseItem>,
        default: Option<Box<Stmt>>,
    },
    Block(Vec<Stmt>),
    /// `$display("...", args...)`; `format` is the raw text between quotes.
    Display { format: String, args: Vec<Expr> },
    /// A lone `;`.
    Null,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseItem {
    pub labels: Vec<Expr>,
    pub body: Stmt,
    pub pos: SourcePos,
}

impl Stmt {
    pub fn new(kind: StmtKind, pos: SourcePos) -> Self {
        Stmt { kind, pos }
    }

    pub fn block(stmts: Vec<Stmt>, pos: SourcePos) -> Self {
        Stmt::new(StmtKind::Block(stmts), pos)
    }

    pub fn display(text: &str, pos: SourcePos) -> Self {
        Stmt::new(StmtKind::Display { format: text.to_string(), args: Vec::new() }, pos)
    }

    /// True when the statement subtree contains an `if` or `case`.
    pub fn has_decision(&self) -> bool {
        match &self.kind {
            StmtKind::If { .. } | StmtKind::Case { .. } => true,
            StmtKind::Block(stmts) => stmts.iter().any(Stmt::has_decision),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Trigger {
    /// `@(posedge <clock>)`
    Posedge(String),
    /// `@(*)` or an explicit sensitivity list.
    Star,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Process {
    pub trigger: Trigger,
    pub body: Stmt,
    pub pos: SourcePos,
}

impl Process {
    pub fn is_clocked(&self) -> bool {
        matches!(self.trigger, Trigger::Posedge(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContAssign {
    pub lhs: LValue,
    pub rhs: Expr,
    pub pos: SourcePos,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AstModule {
    pub name: String,
    pub ports: Vec<Port>,
    pub params: Vec<Param>,
    pub nets: Vec<Net>,
    pub processes: Vec<Process>,
    pub assigns: Vec<ContAssign>,
    pub pos: SourcePos,
}

impl AstModule {
    pub fn port(&self, name: &str) -> Option<&Port> {
        self.ports.iter().find(|p| p.name == name)
    }

    /// The clock named in `posedge` triggers, if the module is sequential.
    pub fn clock(&self) -> Option<&str> {
        self.processes.iter().find_map(|p| match &p.trigger {
            Trigger::Posedge(c) => Some(c.as_str()),
            Trigger::Star => None,
        })
    }

    /// Register snapshot order: internal `reg` nets in declaration order,
    /// then `output reg` ports in port order.
    pub fn registers(&self) -> Vec<(String, u32)> {
        self.nets
            .iter()
            .filter(|n| n.kind == NetKind::Reg)
            .map(|n| (n.name.clone(), n.width()))
            .chain(
                self.ports
                    .iter()
                    .filter(|p| p.is_reg)
                    .map(|p| (p.name.clone(), p.width())),
            )
            .collect()
    }

    /// Structural equality that ignores source positions.
    pub fn same_structure(&self, other: &AstModule) -> bool {
        let mut a = self.clone();
        let mut b = other.clone();
        a.clear_positions();
        b.clear_positions();
        a == b
    }

    /// Resets every position to `1:1`.
    pub fn clear_positions(&mut self) {
        let p = SourcePos::START;
        self.pos = p;
        self.ports.iter_mut().for_each(|x| x.pos = p);
        self.params.iter_mut().for_each(|x| x.pos = p);
        self.nets.iter_mut().for_each(|x| x.pos = p);
        for a in &mut self.assigns {
            a.pos = p;
            clear_lvalue(&mut a.lhs);
            clear_expr(&mut a.rhs);
        }
        for proc_ in &mut self.processes {
            proc_.pos = p;
            clear_stmt(&mut proc_.body);
        }
    }
}

fn clear_expr(e: &mut Expr) {
    e.pos = SourcePos::START;
    match &mut e.kind {
        ExprKind::Ident(_) | ExprKind::Literal { .. } | ExprKind::Slice(..) => {}
        ExprKind::Unary(_, a) => clear_expr(a),
        ExprKind::Index(_, a) => clear_expr(a),
        ExprKind::Binary(_, a, b) => {
            clear_expr(a);
            clear_expr(b);
        }
        ExprKind::Ternary(c, t, f) => {
            clear_expr(c);
            clear_expr(t);
            clear_expr(f);
        }
        ExprKind::Concat(xs) | ExprKind::Replicate(_, xs) => xs.iter_mut().for_each(clear_expr),
    }
}

fn clear_lvalue(l: &mut LValue) {
    l.pos = SourcePos::START;
    match &mut l.kind {
        LValueKind::Index(_, e) => clear_expr(e),
        LValueKind::Concat(xs) => xs.iter_mut().for_each(clear_lvalue),
        _ => {}
    }
}

fn clear_stmt(s: &mut Stmt) {
    s.pos = SourcePos::START;
    match &mut s.kind {
        StmtKind::Blocking(l, e) | StmtKind::NonBlocking(l, e) => {
            clear_lvalue(l);
            clear_expr(e);
        }
        StmtKind::If { cond, then_branch, else_branch } => {
            clear_expr(cond);
            clear_stmt(then_branch);
            if let Some(e) = else_branch {
                clear_stmt(e);
            }
        }
        StmtKind::Case { subject, items, default } => {
            clear_expr(subject);
            for item in items {
                item.pos = SourcePos::START;
                item.labels.iter_mut().for_each(clear_expr);
                clear_stmt(&mut item.body);
            }
            if let Some(d) = default {
                clear_stmt(d);
            }
        }
        StmtKind::Block(xs) => xs.iter_mut().for_each(clear_stmt),
        StmtKind::Display { args, .. } => args.iter_mut().for_each(clear_expr),
        StmtKind::Null => {}
    }
}
