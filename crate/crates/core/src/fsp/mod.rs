//! A subset of the FSP process-algebra notation.
//!
//! Supported: `const`, `range`, process equations with parameters and indexed
//! local processes, action prefix chains, choice, `when` guards, indexed
//! labels with range binding, `ERROR`, `STOP`, `tau`, alphabet extension
//! `+{...}` and composites `||S = (A || B)`. Identifiers starting with a
//! lowercase letter are labels and those starting with an uppercase letter
//! are processes.
//!
//! A guard is evaluated after the first label of its term has been expanded,
//! so it may refer to variables that label binds.

mod ast;
mod elaborate;
mod lexer;
mod parser;
mod printer;

use thiserror::Error;

use crate::lts::Lts;

pub use printer::print;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum FspError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: u32, col: u32, msg: String },
    #[error("{line}:{col}: unbound identifier `{name}`")]
    Unbound { name: String, line: u32, col: u32 },
    #[error("{line}:{col}: {what} is {value}, outside {lo}..{hi}")]
    IndexOutOfRange {
        what: String,
        value: i64,
        lo: i64,
        hi: i64,
        line: u32,
        col: u32,
    },
    #[error("{line}:{col}: duplicate process `{name}`")]
    DuplicateProcess { name: String, line: u32, col: u32 },
    #[error("{line}:{col}: empty range {lo}..{hi}")]
    InvalidRange { lo: i64, hi: i64, line: u32, col: u32 },
    #[error("{line}:{col}: division by zero")]
    DivisionByZero { line: u32, col: u32 },
    #[error("{line}:{col}: `{name}` is defined only in terms of itself")]
    UnguardedRecursion { name: String, line: u32, col: u32 },
    #[error("{line}:{col}: `{name}` expects {expected} indices, found {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
        line: u32,
        col: u32,
    },
}

impl FspError {
    fn syntax(pos: Pos, msg: &str) -> Self {
        FspError::Syntax {
            line: pos.line,
            col: pos.col,
            msg: msg.to_string(),
        }
    }

    fn unbound(name: &str, pos: Pos) -> Self {
        FspError::Unbound {
            name: name.to_string(),
            line: pos.line,
            col: pos.col,
        }
    }
}

/// Parses and elaborates every top-level process and composite, in
/// declaration order.
pub fn parse(text: &str) -> Result<Vec<(String, Lts)>, FspError> {
    elaborate::elaborate(&parser::parse_decls(text)?)
}

/// The process or composite called `name`.
pub fn parse_process(text: &str, name: &str) -> Result<Lts, FspError> {
    parse(text)?
        .into_iter()
        .find(|(n, _)| n == name)
        .map(|(_, l)| l)
        .ok_or_else(|| FspError::unbound(name, Pos { line: 1, col: 1 }))
}
