//! A small interpreter for the Lean-flavoured definition language used by
//! task specifications, reference implementations and generated candidates.
//!
//! It covers the decidable fragment needed to run preconditions and
//! postconditions on concrete inputs: integers and naturals, booleans,
//! characters, strings, lists and arrays, lambdas, `match`, `let`, and
//! bounded quantifiers.

pub mod ast;
mod eval;
pub mod lexer;
pub mod parser;
mod program;

use alloc::string::String;
use core::fmt;

pub use eval::{EvalError, Limits, Mode, Truth, SAMPLE_BOUND};
pub use parser::{parse_defs, parse_expr, parse_type};
pub use program::{CompileError, Def, Program};

/// Syntax error with a 1-based line and column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub offset: usize,
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

impl core::error::Error for ParseError {}
