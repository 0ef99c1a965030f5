// SPDX-License-Identifier: Apache-2.0

//! Two-state bit-vector values and the operator semantics shared by the
//! simulator, the symbolic engine and the solver.
//!
//! Every value is an unsigned integer of 1..=64 bits. Binary arithmetic and
//! bitwise operators work at the wider operand width, comparisons and logical
//! operators produce a single bit, and shifts keep the left operand width.
//! All results wrap modulo `2^width`.

use std::fmt;

use serde::{Deserialize, Serialize};

pub const MAX_WIDTH: u32 = 64;

/// All-ones mask for `width` bits.
#[inline]
pub fn mask(width: u32) -> u64 {
    debug_assert!((1..=MAX_WIDTH).contains(&width));
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// A sized literal such as `8'hFF`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitVecLiteral {
    pub width: u32,
    pub value: u64,
}

impl BitVecLiteral {
    /// Builds a literal, truncating `value` to `width` bits.
    pub fn new(width: u32, value: u64) -> Self {
        assert!(
            (1..=MAX_WIDTH).contains(&width),
            "bit-vector width {width} out of range"
        );
        BitVecLiteral { width, value: value & mask(width) }
    }

    /// Like [`BitVecLiteral::new`] but refuses values that do not fit.
    pub fn checked(width: u32, value: u64) -> Option<Self> {
        if !(1..=MAX_WIDTH).contains(&width) || value & !mask(width) != 0 {
            return None;
        }
        Some(BitVecLiteral { width, value })
    }

    /// Sized hex string used by the JSON formats, e.g. `0x00` for 8 bits.
    pub fn to_hex(&self) -> String {
        format_hex(self.value, self.width)
    }

    /// Verilog source form, e.g. `8'h02`.
    pub fn to_verilog(&self) -> String {
        let digits = hex_digits(self.width);
        format!("{}'h{:0digits$X}", self.width, self.value, digits = digits)
    }
}

impl fmt::Display for BitVecLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_verilog())
    }
}

fn hex_digits(width: u32) -> usize {
    width.div_ceil(4) as usize
}

/// `0x` followed by exactly `ceil(width/4)` upper-case hex digits.
pub fn format_hex(value: u64, width: u32) -> String {
    format!("0x{:0digits$X}", value, digits = hex_digits(width))
}

/// Parses a value written as `0x..` hex, Verilog sized form (`8'h02`,
/// `4'b1010`, `3'd5`) or plain decimal. Returns the value and the width
/// implied by the text when it carries one (digit count for `0x`).
pub fn parse_value(text: &str) -> Option<(u64, Option<u32>)> {
    let t = text.trim().replace('_', "");
    if let Some(hex) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        if hex.is_empty() || hex.len() > 16 {
            return None;
        }
        let v = u64::from_str_radix(hex, 16).ok()?;
        return Some((v, Some((hex.len() as u32 * 4).min(MAX_WIDTH))));
    }
    if let Some(idx) = t.find('\'') {
        let (w, rest) = t.split_at(idx);
        let rest = &rest[1..];
        let width: Option<u32> = if w.is_empty() { None } else { Some(w.parse().ok()?) };
        let mut chars = rest.chars();
        let radix = match chars.next()?.to_ascii_lowercase() {
            'h' => 16,
            'b' => 2,
            'd' => 10,
            'o' => 8,
            _ => return None,
        };
        let digits = chars.as_str();
        if digits.is_empty() {
            return None;
        }
        let v = u64::from_str_radix(digits, radix).ok()?;
        return Some((v, width));
    }
    t.parse::<u64>().ok().map(|v| (v, None))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnaryOp {
    /// `~`
    Not,
    /// `!`
    LogNot,
    /// `-`
    Neg,
    /// `&` reduction
    RedAnd,
    /// `|` reduction
    RedOr,
    /// `^` reduction
    RedXor,
}

impl UnaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnaryOp::Not => "~",
            UnaryOp::LogNot => "!",
            UnaryOp::Neg => "-",
            UnaryOp::RedAnd => "&",
            UnaryOp::RedOr => "|",
            UnaryOp::RedXor => "^",
        }
    }

    pub fn result_width(self, operand: u32) -> u32 {
        match self {
            UnaryOp::Not | UnaryOp::Neg => operand,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinaryOp {
    Add,
    Sub,
    And,
    Or,
    Xor,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Shl,
    Shr,
    LogAnd,
    LogOr,
}

impl BinaryOp {
    pub const ALL: [BinaryOp; 15] = [
        BinaryOp::Add,
        BinaryOp::Sub,
        BinaryOp::And,
        BinaryOp::Or,
        BinaryOp::Xor,
        BinaryOp::Eq,
        BinaryOp::Ne,
        BinaryOp::Lt,
        BinaryOp::Le,
        BinaryOp::Gt,
        BinaryOp::Ge,
        BinaryOp::Shl,
        BinaryOp::Shr,
        BinaryOp::LogAnd,
        BinaryOp::LogOr,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::And => "&",
            BinaryOp::Or => "|",
            BinaryOp::Xor => "^",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Shl => "<<",
            BinaryOp::Shr => ">>",
            BinaryOp::LogAnd => "&&",
            BinaryOp::LogOr => "||",
        }
    }

    /// Binding strength, larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::LogOr => 1,
            BinaryOp::LogAnd => 2,
            BinaryOp::Or => 3,
            BinaryOp::Xor => 4,
            BinaryOp::And => 5,
            BinaryOp::Eq | BinaryOp::Ne => 6,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 7,
            BinaryOp::Shl | BinaryOp::Shr => 8,
            BinaryOp::Add | BinaryOp::Sub => 9,
        }
    }

    pub fn is_predicate(self) -> bool {
        matches!(
            self,
            BinaryOp::Eq
                | BinaryOp::Ne
                | BinaryOp::Lt
                | BinaryOp::Le
                | BinaryOp::Gt
                | BinaryOp::Ge
                | BinaryOp::LogAnd
                | BinaryOp::LogOr
        )
    }

    pub fn result_width(self, lhs: u32, rhs: u32) -> u32 {
        match self {
            BinaryOp::Shl | BinaryOp::Shr => lhs,
            op if op.is_predicate() => 1,
            _ => lhs.max(rhs),
        }
    }
}

pub fn apply_unary(op: UnaryOp, value: u64, width: u32) -> u64 {
    let m = mask(width);
    let v = value & m;
    match op {
        UnaryOp::Not => !v & m,
        UnaryOp::LogNot => (v == 0) as u64,
        UnaryOp::Neg => v.wrapping_neg() & m,
        UnaryOp::RedAnd => (v == m) as u64,
        UnaryOp::RedOr => (v != 0) as u64,
        UnaryOp::RedXor => (v.count_ones() & 1) as u64,
    }
}

/// Applies a binary operator to zero-extended operands and returns the
/// result already truncated to [`BinaryOp::result_width`].
pub fn apply_binary(op: BinaryOp, lhs: u64, lw: u32, rhs: u64, rw: u32) -> u64 {
    let a = lhs & mask(lw);
    let b = rhs & mask(rw);
    let out_w = op.result_width(lw, rw);
    let r = match op {
        BinaryOp::Add => a.wrapping_add(b),
        BinaryOp::Sub => a.wrapping_sub(b),
        BinaryOp::And => a & b,
        BinaryOp::Or => a | b,
        BinaryOp::Xor => a ^ b,
        BinaryOp::Eq => (a == b) as u64,
        BinaryOp::Ne => (a != b) as u64,
        BinaryOp::Lt => (a < b) as u64,
        BinaryOp::Le => (a <= b) as u64,
        BinaryOp::Gt => (a > b) as u64,
        BinaryOp::Ge => (a >= b) as u64,
        BinaryOp::Shl => {
            if b >= lw as u64 {
                0
            } else {
                a << b
            }
        }
        BinaryOp::Shr => {
            if b >= lw as u64 {
                0
            } else {
                a >> b
            }
        }
        BinaryOp::LogAnd => (a != 0 && b != 0) as u64,
        BinaryOp::LogOr => (a != 0 || b != 0) as u64,
    };
    r & mask(out_w)
}

/// Bits `[hi:lo]` of `value`.
pub fn extract(value: u64, hi: u32, lo: u32) -> u64 {
    (value >> lo) & mask(hi - lo + 1)
}
