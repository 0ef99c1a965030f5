// SPDX-License-Identifier: Apache-2.0

//! Recursive-descent parser. Syntax errors abort at the first offending
//! token; semantic checks run afterwards in [`super::resolve`] and report
//! every problem they find.

use std::collections::HashMap;

use super::ast::*;
use super::diag::{Diagnostic, ParseErrorList};
use super::lexer::{tokenize, Token, TokenKind};
use crate::bits::{apply_binary, apply_unary, mask, BinaryOp, BitVecLiteral, UnaryOp, MAX_WIDTH};

const UNSUPPORTED_ITEMS: &[&str] = &[
    "generate", "function", "task", "initial", "integer", "genvar", "real", "time", "specify",
    "primitive", "defparam", "always_ff", "always_comb", "always_latch", "logic", "event",
];
const UNSUPPORTED_STMTS: &[&str] = &[
    "for", "while", "repeat", "forever", "fork", "wait", "casex", "casez", "disable", "force",
    "release", "assign",
];

pub(crate) type PResult<T> = Result<T, Diagnostic>;

pub(crate) struct Parser {
    toks: Vec<Token>,
    i: usize,
    consts: HashMap<String, BitVecLiteral>,
}

/// Parses a single module from `source`.
pub fn parse_module(source: &str) -> Result<AstModule, ParseErrorList> {
    let toks = tokenize(source).map_err(ParseErrorList)?;
    let mut p = Parser { toks, i: 0, consts: HashMap::new() };
    let mut module = p.module().map_err(|d| ParseErrorList(vec![d]))?;
    super::resolve::resolve(&mut module).map_err(ParseErrorList)?;
    Ok(module)
}

fn describe(kind: &TokenKind) -> String {
    match kind {
        TokenKind::Ident(s) => format!("`{s}`"),
        TokenKind::System(s) => format!("`${s}`"),
        TokenKind::Number { .. } => "number".into(),
        TokenKind::Str(_) => "string".into(),
        TokenKind::Punct(p) => format!("`{p}`"),
        TokenKind::Eof => "end of input".into(),
    }
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.i]
    }

    fn peek_kind_at(&self, n: usize) -> &TokenKind {
        let idx = (self.i + n).min(self.toks.len() - 1);
        &self.toks[idx].kind
    }

    fn pos(&self) -> SourcePos {
        self.peek().pos
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(&self.peek().kind, TokenKind::Punct(q) if *q == p)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().kind, TokenKind::Ident(s) if s == kw)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, expected: &str) -> Diagnostic {
        let t = self.peek();
        if t.kind == TokenKind::Eof {
            Diagnostic::error(t.pos, format!("unexpected end of input, expected {expected}"))
        } else {
            Diagnostic::error(t.pos, format!("expected {expected}, found {}", describe(&t.kind)))
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{p}`")))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    fn ident(&mut self) -> PResult<(String, SourcePos)> {
        match &self.peek().kind {
            TokenKind::Ident(s) if !is_reserved(s) => {
                let s = s.clone();
                let pos = self.bump().pos;
                Ok((s, pos))
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    pub(crate) fn module(&mut self) -> PResult<AstModule> {
        let pos = self.pos();
        if self.is_kw("macromodule") {
            return Err(Diagnostic::error(pos, "unsupported: macromodule"));
        }
        self.expect_kw("module")?;
        let (name, _) = self.ident()?;
        let mut m = AstModule {
            name,
            ports: Vec::new(),
            params: Vec::new(),
            nets: Vec::new(),
            processes: Vec::new(),
            assigns: Vec::new(),
            pos,
        };
        if self.eat_punct("#") {
            self.expect_punct("(")?;
            loop {
                self.eat_kw("parameter");
                self.param_assignments(&mut m, false, &[")"])?;
                if !self.eat_punct(",") {
                    break;
                }
            }
            self.expect_punct(")")?;
        }

        // Names listed in a non-ANSI header, in order.
        let mut header_names: Vec<(String, SourcePos)> = Vec::new();
        if self.eat_punct("(") {
            if !self.is_punct(")") {
                if self.is_kw("input") || self.is_kw("output") || self.is_kw("inout") {
                    self.ansi_ports(&mut m)?;
                } else {
                    loop {
                        header_names.push(self.ident()?);
                        if !self.eat_punct(",") {
                            break;
                        }
                    }
                }
            }
            self.expect_punct(")")?;
        }
        self.expect_punct(";")?;

        let mut nonansi: HashMap<String, Port> = HashMap::new();
        loop {
            if self.eat_kw("endmodule") {
                break;
            }
            if self.peek().kind == TokenKind::Eof {
                return Err(self.unexpected("`endmodule`"));
            }
            self.item(&mut m, &header_names, &mut nonansi)?;
        }

        if !header_names.is_empty() {
            for (name, npos) in &header_names {
                match nonansi.remove(name) {
                    Some(p) => m.ports.push(p),
                    None => {
                        return Err(Diagnostic::error(
                            *npos,
                            format!("port `{name}` has no direction declaration"),
                        ))
                    }
                }
            }
        }
        Ok(m)
    }

    fn ansi_ports(&mut self, m: &mut AstModule) -> PResult<()> {
        let mut current: Option<(Direction, bool, Range)> = None;
        loop {
            let pos = self.pos();
            if self.is_kw("inout") {
                return Err(Diagnostic::error(pos, "unsupported: inout"));
            }
            if self.is_kw("input") || self.is_kw("output") {
                let dir = if self.eat_kw("input") {
                    Direction::Input
                } else {
                    self.bump();
                    Direction::Output
                };
                let is_reg = self.net_type_keyword(dir)?;
                let range = self.opt_range()?;
                current = Some((dir, is_reg, range));
            }
            let Some((direction, is_reg, range)) = current else {
                return Err(self.unexpected("`input` or `output`"));
            };
            let (name, npos) = self.ident()?;
            m.ports.push(Port { name, direction, range, is_reg, pos: npos });
            if !self.eat_punct(",") {
                return Ok(());
            }
        }
    }

    /// Optional `wire`/`reg` after a direction; returns whether it is `reg`.
    fn net_type_keyword(&mut self, dir: Direction) -> PResult<bool> {
        let pos = self.pos();
        if self.eat_kw("wire") {
            Ok(false)
        } else if self.eat_kw("reg") {
            if dir == Direction::Input {
                return Err(Diagnostic::error(pos, "input port cannot be `reg`"));
            }
            Ok(true)
        } else if self.is_kw("signed") {
            Err(Diagnostic::error(pos, "unsupported: signed"))
        } else if self.is_kw("logic") {
            Err(Diagnostic::error(pos, "unsupported: logic"))
        } else {
            Ok(false)
        }
    }

    fn opt_range(&mut self) -> PResult<Range> {
        if self.is_kw("signed") {
            return Err(Diagnostic::error(self.pos(), "unsupported: signed"));
        }
        if !self.is_punct("[") {
            return Ok(Range::BIT);
        }
        let pos = self.bump().pos;
        let msb = self.const_index()?;
        self.expect_punct(":")?;
        let lsb = self.const_index()?;
        self.expect_punct("]")?;
        if msb < lsb {
            return Err(Diagnostic::error(pos, "unsupported: ascending range"));
        }
        if msb - lsb + 1 > MAX_WIDTH {
            return Err(Diagnostic::error(
                pos,
                format!("unsupported: net wider than {MAX_WIDTH} bits"),
            ));
        }
        Ok(Range { msb, lsb })
    }

    fn const_index(&mut self) -> PResult<u32> {
        let e = self.expr()?;
        let v = self.const_eval(&e)?;
        u32::try_from(v.value)
            .map_err(|_| Diagnostic::error(e.pos, "constant index out of range"))
    }

    /// Folds a constant expression built from literals and known parameters.
    pub(crate) fn const_eval(&self, e: &Expr) -> PResult<BitVecLiteral> {
        fold_const(e, &self.consts)
    }

    fn item(
        &mut self,
        m: &mut AstModule,
        header: &[(String, SourcePos)],
        nonansi: &mut HashMap<String, Port>,
    ) -> PResult<()> {
        let pos = self.pos();
        let kw = match &self.peek().kind {
            TokenKind::Ident(s) => s.clone(),
            _ => return Err(self.unexpected("module item")),
        };
        match kw.as_str() {
            "input" | "output" => {
                if header.is_empty() {
                    return Err(Diagnostic::error(
                        pos,
                        "port declaration in body of a module with an ANSI header",
                    ));
                }
                self.bump();
                let dir = if kw == "input" { Direction::Input } else { Direction::Output };
                let is_reg = self.net_type_keyword(dir)?;
                let range = self.opt_range()?;
                loop {
                    let (name, npos) = self.ident()?;
                    if !header.iter().any(|(h, _)| *h == name) {
                        return Err(Diagnostic::error(
                            npos,
                            format!("`{name}` is not listed in the module header"),
                        ));
                    }
                    if nonansi.contains_key(&name) {
                        return Err(Diagnostic::error(npos, format!("duplicate port `{name}`")));
                    }
                    nonansi.insert(
                        name.clone(),
                        Port { name, direction: dir, range, is_reg, pos: npos },
                    );
                    if !self.eat_punct(",") {
                        break;
                    }
                }
                self.expect_punct(";")
            }
            "inout" => Err(Diagnostic::error(pos, "unsupported: inout")),
            "wire" | "reg" => {
                self.bump();
                let kind = if kw == "wire" { NetKind::Wire } else { NetKind::Reg };
                let range = self.opt_range()?;
                loop {
                    let (name, npos) = self.ident()?;
                    if self.is_punct("[") {
                        return Err(Diagnostic::error(self.pos(), "unsupported: memories"));
                    }
                    // `output out; reg out;` merges into an output reg port.
                    let port = m
                        .ports
                        .iter_mut()
                        .find(|p| p.name == name)
                        .or_else(|| nonansi.get_mut(&name));
                    match port {
                        Some(p) if p.direction == Direction::Output && kind == NetKind::Reg => {
                            p.is_reg = true;
                            if range != Range::BIT && range != p.range {
                                return Err(Diagnostic::error(
                                    npos,
                                    format!("range of `{name}` does not match its port"),
                                ));
                            }
                        }
                        Some(p) if kind == NetKind::Wire && range == p.range => {}
                        Some(_) => {
                            return Err(Diagnostic::error(
                                npos,
                                format!("conflicting redeclaration of `{name}`"),
                            ))
                        }
                        None => m.nets.push(Net { name: name.clone(), kind, range, pos: npos }),
                    }
                    if self.is_punct("=") {
                        let apos = self.bump().pos;
                        if kind == NetKind::Reg {
                            return Err(Diagnostic::error(apos, "unsupported: reg initializer"));
                        }
                        let rhs = self.expr()?;
                        m.assigns.push(ContAssign {
                            lhs: LValue { kind: LValueKind::Ident(name), pos: npos },
                            rhs,
                            pos: apos,
                        });
                    }
                    if !self.eat_punct(",") {
                        break;
                    }
                }
                self.expect_punct(";")
            }
            "parameter" | "localparam" => {
                self.bump();
                self.param_assignments(m, kw == "localparam", &[";"])?;
                self.expect_punct(";")
            }
            "assign" => {
                self.bump();
                if self.is_punct("#") {
                    return Err(Diagnostic::error(self.pos(), "unsupported: delay"));
                }
                loop {
                    let apos = self.pos();
                    let lhs = self.lvalue()?;
                    self.expect_punct("=")?;
                    let rhs = self.expr()?;
                    m.assigns.push(ContAssign { lhs, rhs, pos: apos });
                    if !self.eat_punct(",") {
                        break;
                    }
                }
                self.expect_punct(";")
            }
            "always" => {
                self.bump();
                let trigger = self.trigger()?;
                let body = self.stmt()?;
                m.processes.push(Process { trigger, body, pos });
                Ok(())
            }
            "module" => Err(Diagnostic::error(pos, "unsupported: nested module")),
            k if UNSUPPORTED_ITEMS.contains(&k) => {
                Err(Diagnostic::error(pos, format!("unsupported: {k}")))
            }
            _ => {
                // `name inst (...)` would be an instantiation.
                if matches!(self.peek_kind_at(1), TokenKind::Ident(_))
                    || matches!(self.peek_kind_at(1), TokenKind::Punct("#"))
                {
                    return Err(Diagnostic::error(pos, "unsupported: module instantiation"));
                }
                Err(self.unexpected("module item"))
            }
        }
    }

    fn param_assignments(
        &mut self,
        m: &mut AstModule,
        local: bool,
        terminators: &[&str],
    ) -> PResult<()> {
        if self.is_kw("integer") || self.is_kw("signed") || self.is_kw("real") {
            return Err(Diagnostic::error(self.pos(), "unsupported: typed parameter"));
        }
        let range = if self.is_punct("[") { Some(self.opt_range()?) } else { None };
        loop {
            let (name, npos) = self.ident()?;
            self.expect_punct("=")?;
            let e = self.expr()?;
            let v = self.const_eval(&e)?;
            let value = match range {
                Some(r) => BitVecLiteral::new(r.width(), v.value),
                None => v,
            };
            if self.consts.contains_key(&name) {
                return Err(Diagnostic::error(npos, format!("duplicate parameter `{name}`")));
            }
            self.consts.insert(name.clone(), value);
            m.params.push(Param { name, value, local, pos: npos });
            // In a `#(...)` list the next item may start with `parameter`.
            if terminators.iter().any(|t| self.is_punct(t)) {
                return Ok(());
            }
            if !self.is_punct(",") {
                return Err(self.unexpected("`,` or end of parameter list"));
            }
            if matches!(self.peek_kind_at(1), TokenKind::Ident(s) if s == "parameter") {
                return Ok(());
            }
            self.bump();
        }
    }

    fn trigger(&mut self) -> PResult<Trigger> {
        self.expect_punct("@")?;
        if self.eat_punct("*") {
            return Ok(Trigger::Star);
        }
        self.expect_punct("(")?;
        if self.eat_punct("*") {
            self.expect_punct(")")?;
            return Ok(Trigger::Star);
        }
        if self.is_kw("posedge") || self.is_kw("negedge") {
            let pos = self.pos();
            if self.is_kw("negedge") {
                return Err(Diagnostic::error(pos, "unsupported: negedge"));
            }
            self.bump();
            let (clk, _) = self.ident()?;
            if self.is_kw("or") || self.is_punct(",") {
                return Err(Diagnostic::error(
                    self.pos(),
                    "unsupported: multiple event triggers",
                ));
            }
            self.expect_punct(")")?;
            return Ok(Trigger::Posedge(clk));
        }
        // Explicit sensitivity list: treated as combinational.
        loop {
            if self.is_kw("posedge") || self.is_kw("negedge") {
                return Err(Diagnostic::error(self.pos(), "unsupported: mixed edge sensitivity"));
            }
            self.ident()?;
            if !(self.eat_kw("or") || self.eat_punct(",")) {
                break;
            }
        }
        self.expect_punct(")")?;
        Ok(Trigger::Star)
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let pos = self.pos();
        match self.peek().kind.clone() {
            TokenKind::Punct(";") => {
                self.bump();
                Ok(Stmt::new(StmtKind::Null, pos))
            }
            TokenKind::Punct("#") => Err(Diagnostic::error(pos, "unsupported: delay")),
            TokenKind::Punct("@") => Err(Diagnostic::error(pos, "unsupported: event control")),
            TokenKind::System(name) => {
                self.bump();
                if name != "display" {
                    return Err(Diagnostic::error(pos, format!("unsupported: ${name}")));
                }
                self.expect_punct("(")?;
                let format = match &self.peek().kind {
                    TokenKind::Str(s) => {
                        let s = s.clone();
                        self.bump();
                        s
                    }
                    _ => return Err(self.unexpected("string literal")),
                };
                let mut args = Vec::new();
                while self.eat_punct(",") {
                    args.push(self.expr()?);
                }
                self.expect_punct(")")?;
                self.expect_punct(";")?;
                Ok(Stmt::new(StmtKind::Display { format, args }, pos))
            }
            TokenKind::Ident(kw) => match kw.as_str() {
                "begin" => {
                    self.bump();
                    if self.eat_punct(":") {
                        self.ident()?;
                    }
                    let mut stmts = Vec::new();
                    while !self.eat_kw("end") {
                        if self.peek().kind == TokenKind::Eof {
                            return Err(self.unexpected("`end`"));
                        }
                        stmts.push(self.stmt()?);
                    }
                    Ok(Stmt::block(stmts, pos))
                }
                "if" => {
                    self.bump();
                    self.expect_punct("(")?;
                    let cond = self.expr()?;
                    self.expect_punct(")")?;
                    let then_branch = Box::new(self.stmt()?);
                    let else_branch =
                        if self.eat_kw("else") { Some(Box::new(self.stmt()?)) } else { None };
                    Ok(Stmt::new(StmtKind::If { cond, then_branch, else_branch }, pos))
                }
                "case" => self.case_stmt(),
                k if UNSUPPORTED_STMTS.contains(&k) => {
                    Err(Diagnostic::error(pos, format!("unsupported: {k}")))
                }
                _ => {
                    let lhs = self.lvalue()?;
                    let op_pos = self.pos();
                    let kind = if self.eat_punct("=") {
                        if self.is_punct("#") {
                            return Err(Diagnostic::error(self.pos(), "unsupported: delay"));
                        }
                        StmtKind::Blocking(lhs, self.expr()?)
                    } else if self.eat_punct("<=") {
                        if self.is_punct("#") {
                            return Err(Diagnostic::error(self.pos(), "unsupported: delay"));
                        }
                        StmtKind::NonBlocking(lhs, self.expr()?)
                    } else {
                        return Err(Diagnostic::error(
                            op_pos,
                            format!("expected `=` or `<=`, found {}", describe(&self.peek().kind)),
                        ));
                    };
                    self.expect_punct(";")?;
                    Ok(Stmt::new(kind, pos))
                }
            },
            _ => Err(self.unexpected("statement")),
        }
    }

    fn case_stmt(&mut self) -> PResult<Stmt> {
        let pos = self.bump().pos;
        self.expect_punct("(")?;
        let subject = self.expr()?;
        self.expect_punct(")")?;
        let mut items = Vec::new();
        let mut default = None;
        loop {
            if self.eat_kw("endcase") {
                break;
            }
            if self.peek().kind == TokenKind::Eof {
                return Err(self.unexpected("`endcase`"));
            }
            let ipos = self.pos();
            if self.eat_kw("default") {
                self.eat_punct(":");
                if default.is_some() {
                    return Err(Diagnostic::error(ipos, "duplicate `default` in case"));
                }
                default = Some(Box::new(self.stmt()?));
                continue;
            }
            let mut labels = vec![self.expr()?];
            while self.eat_punct(",") {
                labels.push(self.expr()?);
            }
            self.expect_punct(":")?;
            let body = self.stmt()?;
            items.push(CaseItem { labels, body, pos: ipos });
        }
        Ok(Stmt::new(StmtKind::Case { subject, items, default }, pos))
    }

    fn lvalue(&mut self) -> PResult<LValue> {
        let pos = self.pos();
        if self.eat_punct("{") {
            let mut parts = vec![self.lvalue()?];
            while self.eat_punct(",") {
                parts.push(self.lvalue()?);
            }
            self.expect_punct("}")?;
            return Ok(LValue { kind: LValueKind::Concat(parts), pos });
        }
        let (name, _) = self.ident()?;
        if self.eat_punct("[") {
            let first = self.expr()?;
            if self.is_punct("+:") || self.is_punct("-:") {
                return Err(Diagnostic::error(self.pos(), "unsupported: indexed part-select"));
            }
            if self.eat_punct(":") {
                let msb = self.expr_to_index(&first)?;
                let lsb_e = self.expr()?;
                let lsb = self.expr_to_index(&lsb_e)?;
                self.expect_punct("]")?;
                return Ok(LValue { kind: LValueKind::Slice(name, msb, lsb), pos });
            }
            self.expect_punct("]")?;
            return Ok(LValue { kind: LValueKind::Index(name, first), pos });
        }
        Ok(LValue { kind: LValueKind::Ident(name), pos })
    }

    fn expr_to_index(&self, e: &Expr) -> PResult<u32> {
        let v = self.const_eval(e)?;
        u32::try_from(v.value).map_err(|_| Diagnostic::error(e.pos, "index out of range"))
    }

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        let cond = self.binary(1)?;
        if self.eat_punct("?") {
            let t = self.expr()?;
            self.expect_punct(":")?;
            let f = self.expr()?;
            let cpos = cond.pos;
            return Ok(Expr::new(
                ExprKind::Ternary(Box::new(cond), Box::new(t), Box::new(f)),
                cpos,
            ));
        }
        Ok(cond)
    }

    fn binary_op(&self) -> PResult<Option<BinaryOp>> {
        let TokenKind::Punct(p) = &self.peek().kind else {
            return Ok(None);
        };
        let op = match *p {
            "+" => BinaryOp::Add,
            "-" => BinaryOp::Sub,
            "&" => BinaryOp::And,
            "|" => BinaryOp::Or,
            "^" => BinaryOp::Xor,
            "==" => BinaryOp::Eq,
            "!=" => BinaryOp::Ne,
            "<" => BinaryOp::Lt,
            "<=" => BinaryOp::Le,
            ">" => BinaryOp::Gt,
            ">=" => BinaryOp::Ge,
            "<<" => BinaryOp::Shl,
            ">>" => BinaryOp::Shr,
            "&&" => BinaryOp::LogAnd,
            "||" => BinaryOp::LogOr,
            "*" | "/" | "%" | "**" | "===" | "!==" | "<<<" | ">>>" | "~^" | "^~" => {
                return Err(Diagnostic::error(self.pos(), format!("unsupported: operator `{p}`")))
            }
            _ => return Ok(None),
        };
        Ok(Some(op))
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binary_op()? {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(prec + 1)?;
            let pos = lhs.pos;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), pos);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        let op = match &self.peek().kind {
            TokenKind::Punct("~") => Some(UnaryOp::Not),
            TokenKind::Punct("!") => Some(UnaryOp::LogNot),
            TokenKind::Punct("-") => Some(UnaryOp::Neg),
            TokenKind::Punct("&") => Some(UnaryOp::RedAnd),
            TokenKind::Punct("|") => Some(UnaryOp::RedOr),
            TokenKind::Punct("^") => Some(UnaryOp::RedXor),
            TokenKind::Punct("+") => {
                self.bump();
                return self.unary();
            }
            TokenKind::Punct(p @ ("~&" | "~|" | "~^")) => {
                return Err(Diagnostic::error(pos, format!("unsupported: operator `{p}`")))
            }
            _ => None,
        };
        if let Some(op) = op {
            self.bump();
            let arg = self.unary()?;
            return Ok(Expr::new(ExprKind::Unary(op, Box::new(arg)), pos));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        match self.peek().kind.clone() {
            TokenKind::Number { width, value } => {
                self.bump();
                let (lit, sized) = match width {
                    Some(w) => (BitVecLiteral::new(w, value), true),
                    None => (BitVecLiteral::new(32, value), false),
                };
                Ok(Expr { kind: ExprKind::Literal { lit, sized }, pos, width: lit.width })
            }
            TokenKind::Punct("(") => {
                self.bump();
                let mut e = self.expr()?;
                self.expect_punct(")")?;
                e.pos = pos;
                Ok(e)
            }
            TokenKind::Punct("{") => {
                self.bump();
                let first = self.expr()?;
                if self.is_punct("{") {
                    // Replication `{n{a, b}}`.
                    let n = self.const_eval(&first)?.value;
                    if n == 0 || n > MAX_WIDTH as u64 {
                        return Err(Diagnostic::error(first.pos, "invalid replication count"));
                    }
                    self.bump();
                    let mut parts = vec![self.expr()?];
                    while self.eat_punct(",") {
                        parts.push(self.expr()?);
                    }
                    self.expect_punct("}")?;
                    self.expect_punct("}")?;
                    return Ok(Expr::new(ExprKind::Replicate(n as u32, parts), pos));
                }
                let mut parts = vec![first];
                while self.eat_punct(",") {
                    parts.push(self.expr()?);
                }
                self.expect_punct("}")?;
                Ok(Expr::new(ExprKind::Concat(parts), pos))
            }
            TokenKind::Ident(_) => {
                let (name, _) = self.ident()?;
                if self.is_punct("(") {
                    return Err(Diagnostic::error(pos, "unsupported: function call"));
                }
                if self.eat_punct("[") {
                    let first = self.expr()?;
                    if self.is_punct("+:") || self.is_punct("-:") {
                        return Err(Diagnostic::error(
                            self.pos(),
                            "unsupported: indexed part-select",
                        ));
                    }
                    if self.eat_punct(":") {
                        let msb = self.expr_to_index(&first)?;
                        let lsb_e = self.expr()?;
                        let lsb = self.expr_to_index(&lsb_e)?;
                        self.expect_punct("]")?;
                        return Ok(Expr::new(ExprKind::Slice(name, msb, lsb), pos));
                    }
                    self.expect_punct("]")?;
                    return Ok(Expr::new(ExprKind::Index(name, Box::new(first)), pos));
                }
                Ok(Expr::new(ExprKind::Ident(name), pos))
            }
            TokenKind::System(name) => Err(Diagnostic::error(pos, format!("unsupported: ${name}"))),
            TokenKind::Str(_) => Err(Diagnostic::error(pos, "unexpected string literal")),
            _ => Err(self.unexpected("expression")),
        }
    }
}

fn is_reserved(s: &str) -> bool {
    matches!(
        s,
        "module" | "endmodule" | "input" | "output" | "inout" | "wire" | "reg" | "assign"
            | "always" | "begin" | "end" | "if" | "else" | "case" | "endcase" | "default"
            | "posedge" | "negedge" | "or" | "parameter" | "localparam" | "initial"
            | "generate" | "endgenerate" | "function" | "endfunction" | "task" | "endtask"
            | "for" | "while" | "integer" | "signed"
    )
}

/// Constant folding with the same width rules as the simulator.
pub(crate) fn fold_const(
    e: &Expr,
    consts: &HashMap<String, BitVecLiteral>,
) -> PResult<BitVecLiteral> {
    let lit = match &e.kind {
        ExprKind::Literal { lit, .. } => *lit,
        ExprKind::Ident(n) => *consts
            .get(n)
            .ok_or_else(|| Diagnostic::error(e.pos, format!("`{n}` is not a constant")))?,
        ExprKind::Unary(op, a) => {
            let a = fold_const(a, consts)?;
            BitVecLiteral::new(op.result_width(a.width), apply_unary(*op, a.value, a.width))
        }
        ExprKind::Binary(op, a, b) => {
            let a = fold_const(a, consts)?;
            let b = fold_const(b, consts)?;
            let w = op.result_width(a.width, b.width);
            BitVecLiteral::new(w, apply_binary(*op, a.value, a.width, b.value, b.width))
        }
        ExprKind::Ternary(c, t, f) => {
            let c = fold_const(c, consts)?;
            let t = fold_const(t, consts)?;
            let f = fold_const(f, consts)?;
            let w = t.width.max(f.width);
            BitVecLiteral::new(w, if c.value != 0 { t.value } else { f.value })
        }
        ExprKind::Concat(parts) => {
            let mut width = 0;
            let mut value = 0u64;
            for p in parts {
                let v = fold_const(p, consts)?;
                width += v.width;
                if width > MAX_WIDTH {
                    return Err(Diagnostic::error(e.pos, "constant wider than 64 bits"));
                }
                value = if v.width == 64 { v.value } else { (value << v.width) | v.value };
            }
            BitVecLiteral::new(width, value & mask(width))
        }
        _ => return Err(Diagnostic::error(e.pos, "expression is not constant")),
    };
    Ok(lit)
}
