// SPDX-License-Identifier: Apache-2.0

//! Tokenizer for the Verilog subset.

use super::ast::SourcePos;
use super::diag::Diagnostic;
use crate::bits::MAX_WIDTH;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    /// Identifiers and keywords.
    Ident(String),
    /// `$display` and friends, without the `$`.
    System(String),
    Number { width: Option<u32>, value: u64 },
    Str(String),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub pos: SourcePos,
    /// Position just past the last character of the token.
    pub end: SourcePos,
}

const PUNCTS: &[&str] = &[
    "<<<", ">>>", "===", "!==", "==", "!=", "<=", ">=", "<<", ">>", "&&", "||", "~&", "~|",
    "~^", "^~", "**", "+:", "-:", "(", ")", "[", "]", "{", "}", ";", ",", ":", ".", "?", "@",
    "#", "=", "<", ">", "+", "-", "*", "/", "%", "&", "|", "^", "~", "!",
];

struct Cursor<'a> {
    chars: Vec<char>,
    idx: usize,
    line: u32,
    col: u32,
    _src: &'a str,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.idx).copied()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.chars.get(self.idx + n).copied()
    }

    fn pos(&self) -> SourcePos {
        SourcePos::new(self.line, self.col)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.idx += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(i, c)| self.peek_at(i) == Some(c))
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '$'
}

/// Splits `src` into tokens. Lexical errors are collected rather than
/// aborting at the first one.
pub fn tokenize(src: &str) -> Result<Vec<Token>, Vec<Diagnostic>> {
    let mut cur = Cursor { chars: src.chars().collect(), idx: 0, line: 1, col: 1, _src: src };
    let mut tokens = Vec::new();
    let mut errors = Vec::new();
    let mut last_end = SourcePos::START;

    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if cur.starts_with("//") {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        if cur.starts_with("/*") {
            let start = cur.pos();
            cur.bump();
            cur.bump();
            let mut closed = false;
            while cur.peek().is_some() {
                if cur.starts_with("*/") {
                    cur.bump();
                    cur.bump();
                    closed = true;
                    break;
                }
                cur.bump();
            }
            if !closed {
                errors.push(Diagnostic::error(start, "unterminated block comment"));
            }
            continue;
        }

        let pos = cur.pos();
        let kind = if is_ident_start(c) {
            let mut s = String::new();
            while let Some(c) = cur.peek().filter(|c| is_ident_char(*c)) {
                s.push(c);
                cur.bump();
            }
            TokenKind::Ident(s)
        } else if c == '$' {
            cur.bump();
            let mut s = String::new();
            while let Some(c) = cur.peek().filter(|c| is_ident_char(*c)) {
                s.push(c);
                cur.bump();
            }
            if s.is_empty() {
                errors.push(Diagnostic::error(pos, "stray `$`"));
                continue;
            }
            TokenKind::System(s)
        } else if c == '"' {
            cur.bump();
            let mut s = String::new();
            let mut closed = false;
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
                if c == '"' {
                    closed = true;
                    break;
                }
                s.push(c);
                if c == '\\' {
                    if let Some(n) = cur.bump() {
                        s.push(n);
                    }
                }
            }
            if !closed {
                errors.push(Diagnostic::error(pos, "unterminated string literal"));
                continue;
            }
            TokenKind::Str(s)
        } else if c.is_ascii_digit() || c == '\'' {
            match lex_number(&mut cur) {
                Ok(kind) => kind,
                Err(msg) => {
                    errors.push(Diagnostic::error(pos, msg));
                    continue;
                }
            }
        } else if c == '`' {
            cur.bump();
            while cur.peek().is_some_and(is_ident_char) {
                cur.bump();
            }
            errors.push(Diagnostic::error(pos, "unsupported: compiler directive"));
            continue;
        } else if let Some(p) = PUNCTS.iter().find(|p| cur.starts_with(p)) {
            for _ in 0..p.len() {
                cur.bump();
            }
            TokenKind::Punct(p)
        } else {
            cur.bump();
            errors.push(Diagnostic::error(pos, format!("unexpected character `{c}`")));
            continue;
        };
        last_end = cur.pos();
        tokens.push(Token { kind, pos, end: last_end });
    }

    if !errors.is_empty() {
        return Err(errors);
    }
    // EOF sits just past the last token so it stays within the buffer.
    let eof_pos = if tokens.is_empty() { SourcePos::START } else { last_end };
    tokens.push(Token { kind: TokenKind::Eof, pos: eof_pos, end: eof_pos });
    Ok(tokens)
}

fn lex_number(cur: &mut Cursor<'_>) -> Result<TokenKind, String> {
    let mut size_text = String::new();
    while let Some(c) = cur.peek().filter(|c| c.is_ascii_digit() || *c == '_') {
        size_text.push(c);
        cur.bump();
    }
    // Allow `8 'h00`.
    let save = (cur.idx, cur.line, cur.col);
    while cur.peek().is_some_and(|c| c == ' ' || c == '\t') {
        cur.bump();
    }
    if cur.peek() != Some('\'') {
        (cur.idx, cur.line, cur.col) = save;
        let digits: String = size_text.chars().filter(|c| *c != '_').collect();
        let value = digits
            .parse::<u64>()
            .map_err(|_| format!("integer literal `{size_text}` out of range"))?;
        if value > u32::MAX as u64 {
            return Err(format!("unsized literal `{size_text}` wider than 32 bits"));
        }
        return Ok(TokenKind::Number { width: None, value });
    }
    cur.bump();
    if matches!(cur.peek(), Some('s') | Some('S')) {
        return Err("unsupported: signed literal".into());
    }
    let radix = match cur.bump().map(|c| c.to_ascii_lowercase()) {
        Some('h') => 16,
        Some('b') => 2,
        Some('d') => 10,
        Some('o') => 8,
        _ => return Err("malformed based literal".into()),
    };
    while cur.peek().is_some_and(|c| c == ' ' || c == '\t') {
        cur.bump();
    }
    let mut digits = String::new();
    while let Some(c) = cur.peek().filter(|c| c.is_ascii_alphanumeric() || *c == '_' || *c == '?') {
        cur.bump();
        if c == '_' {
            continue;
        }
        digits.push(c);
    }
    if digits.chars().any(|c| matches!(c.to_ascii_lowercase(), 'x' | 'z' | '?')) {
        return Err("unsupported: x/z literal".into());
    }
    if digits.is_empty() {
        return Err("based literal without digits".into());
    }
    let width = if size_text.is_empty() {
        None
    } else {
        let w: u32 = size_text
            .replace('_', "")
            .parse()
            .map_err(|_| "malformed literal size".to_string())?;
        if w == 0 {
            return Err("zero-width literal".into());
        }
        if w > MAX_WIDTH {
            return Err(format!("unsupported: literal wider than {MAX_WIDTH} bits"));
        }
        Some(w)
    };
    let value = u128::from_str_radix(&digits, radix)
        .map_err(|_| format!("invalid digits `{digits}` for base {radix}"))?;
    if value > u64::MAX as u128 {
        return Err(format!("unsupported: literal wider than {MAX_WIDTH} bits"));
    }
    Ok(TokenKind::Number { width, value: value as u64 })
}
