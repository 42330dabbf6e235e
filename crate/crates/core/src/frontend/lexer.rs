use std::fmt;

use super::FrontendError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Keyword,
    Identifier,
    IntegerLiteral,
    Operator,
    Punctuation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub line: u32,
    pub column: u32,
}

impl Token {
    pub fn is(&self, lexeme: &str) -> bool {
        self.lexeme == lexeme && self.kind != TokenKind::Identifier
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{}`", self.lexeme)
    }
}

pub const KEYWORDS: &[&str] = &["int", "void", "if", "else", "return", "print", "read"];

const TWO_CHAR_OPERATORS: &[&str] = &["<=", ">=", "==", "!="];

/// Splits MiniLang source into tokens. `//` comments and whitespace are dropped;
/// every token keeps the 1-based line and column of its first character.
pub fn tokenize(source: &str) -> Result<Vec<Token>, FrontendError> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = source.chars().collect();
    let (mut i, mut line, mut column) = (0usize, 1u32, 1u32);

    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            column = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            column += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }

        let start = i;
        let kind = if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            if KEYWORDS.contains(&word.as_str()) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            }
        } else if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            TokenKind::IntegerLiteral
        } else {
            let pair: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            if TWO_CHAR_OPERATORS.contains(&pair.as_str()) {
                i += 2;
                TokenKind::Operator
            } else if "+-*/<>=".contains(c) {
                i += 1;
                TokenKind::Operator
            } else if "(){},;".contains(c) {
                i += 1;
                TokenKind::Punctuation
            } else {
                return Err(FrontendError::Lex { line, column, ch: c });
            }
        };

        let lexeme: String = chars[start..i].iter().collect();
        let width = (i - start) as u32;
        tokens.push(Token { kind, lexeme, line, column });
        column += width;
    }
    Ok(tokens)
}
