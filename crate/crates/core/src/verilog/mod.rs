// SPDX-License-Identifier: Apache-2.0

//! Front end for the synthesizable Verilog subset: lexer, parser, name
//! resolution, interface checks and a pretty printer.

pub mod ast;
pub mod diag;
pub mod interface;
pub mod lexer;
mod parser;
pub mod printer;
mod resolve;

pub use ast::*;
pub use diag::{Diagnostic, ParseErrorList, Severity};
pub use interface::{validate_interface, InterfaceMismatch, PortSpec, PortSpecEntry};
pub use parser::parse_module;
pub use printer::pretty_print;

#[cfg(test)]
mod tests;
