//! MiniLang front end: lexing, parsing, name resolution and pretty printing.

pub mod ast;
mod lexer;
mod parser;
mod pretty;
mod validate;

use thiserror::Error;

pub use ast::*;
pub use lexer::{tokenize, Token, TokenKind, KEYWORDS};
pub use parser::parse;
pub use pretty::pretty_print;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontendError {
    #[error("{line}:{column}: unexpected character `{ch}`")]
    Lex { line: u32, column: u32, ch: char },
    #[error("{line}:{column}: expected {expected}, found {found}")]
    Parse { line: u32, column: u32, expected: String, found: String },
    #[error("{line}:{column}: integer literal `{lexeme}` does not fit in 64 bits")]
    IntegerOutOfRange { lexeme: String, line: u32, column: u32 },
    #[error("{line}:{column}: unresolved name `{name}`")]
    Resolve { name: String, line: u32, column: u32 },
    #[error("{line}:{column}: `{name}` is already defined")]
    Duplicate { name: String, line: u32, column: u32 },
    #[error("{line}:{column}: `{callee}` takes {expected} argument(s) but {found} were given")]
    Arity { callee: String, expected: usize, found: usize, line: u32, column: u32 },
    #[error("{line}:{column}: unreachable statement")]
    Unreachable { line: u32, column: u32 },
}

impl FrontendError {
    pub fn position(&self) -> (u32, u32) {
        match *self {
            FrontendError::Lex { line, column, .. }
            | FrontendError::Parse { line, column, .. }
            | FrontendError::IntegerOutOfRange { line, column, .. }
            | FrontendError::Resolve { line, column, .. }
            | FrontendError::Duplicate { line, column, .. }
            | FrontendError::Arity { line, column, .. }
            | FrontendError::Unreachable { line, column } => (line, column),
        }
    }
}

pub fn parse_source(source: &str) -> Result<ProgramAst, FrontendError> {
    parse(&tokenize(source)?)
}

/// Source text of the two-recursive-module example program (`corpus/fig1.mini`).
pub const CANONICAL_SOURCE: &str = include_str!("../../../../corpus/fig1.mini");

/// The built-in example: globals `sum` and `temp`, then `Factorial`,
/// `SumofFact` and `main` in that order.
pub fn canonical_example() -> ProgramAst {
    parse_source(CANONICAL_SOURCE).expect("bundled example parses")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_example_shape() {
        let p = canonical_example();
        let names: Vec<&str> = p.functions.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, ["Factorial", "SumofFact", "main"]);
        let globals: Vec<&str> = p.globals.iter().map(|g| g.name.as_str()).collect();
        assert_eq!(globals, ["sum", "temp"]);
        assert_eq!(p.function("Factorial").unwrap().callees(), ["Factorial"]);
        assert_eq!(p.function("SumofFact").unwrap().callees(), ["Factorial", "SumofFact"]);
        assert_eq!(p.function("Factorial").unwrap().params, ["n"]);
    }

    #[test]
    fn canonical_source_matches_corpus_file() {
        let on_disk = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus/fig1.mini")).unwrap();
        assert_eq!(on_disk, CANONICAL_SOURCE);
    }
}
