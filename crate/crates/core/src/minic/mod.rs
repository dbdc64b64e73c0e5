// SPDX-License-Identifier: Apache-2.0

//! Mini-C: an int-only C subset with calls, control flow and comma
//! expressions, enough to host source-to-source probe insertion.

mod ast;
mod lexer;
mod parser;
mod printer;
pub mod traverse;

use thiserror::Error;

pub use ast::*;
pub use parser::parse;
pub use printer::{print, print_expr, print_stmt};
pub use traverse::{traverse, Slot, TransformError, TraverseTable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: expected {expected}, found {found}")]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub expected: String,
    pub found: String,
}

impl ParseError {
    pub(crate) fn new(pos: Pos, expected: impl Into<String>, found: impl Into<String>) -> Self {
        Self { line: pos.line, col: pos.col, expected: expected.into(), found: found.into() }
    }
}
