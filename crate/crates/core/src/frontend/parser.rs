use super::ast::*;
use super::lexer::{Token, TokenKind};
use super::FrontendError;

/// Parses a token stream into a resolved, validated program.
pub fn parse(tokens: &[Token]) -> Result<ProgramAst, FrontendError> {
    let program = Parser { tokens, at: 0, next_stmt: 0 }.program()?;
    super::validate::validate(&program)?;
    Ok(program)
}

struct Parser<'t> {
    tokens: &'t [Token],
    at: usize,
    next_stmt: u32,
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.at)
    }

    fn peek_is(&self, lexeme: &str) -> bool {
        self.peek().is_some_and(|t| t.is(lexeme))
    }

    fn peek_nth_is(&self, n: usize, lexeme: &str) -> bool {
        self.tokens.get(self.at + n).is_some_and(|t| t.is(lexeme))
    }

    fn pos(&self) -> Pos {
        match self.peek().or(self.tokens.last()) {
            Some(t) => Pos { line: t.line, column: t.column },
            None => Pos { line: 1, column: 1 },
        }
    }

    fn error(&self, expected: impl Into<String>) -> FrontendError {
        let pos = self.pos();
        FrontendError::Parse {
            line: pos.line,
            column: pos.column,
            expected: expected.into(),
            found: self.peek().map_or_else(|| "end of input".to_string(), |t| t.to_string()),
        }
    }

    fn bump(&mut self) -> &'t Token {
        let t = &self.tokens[self.at];
        self.at += 1;
        t
    }

    fn eat(&mut self, lexeme: &str) -> bool {
        if self.peek_is(lexeme) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, lexeme: &str) -> Result<(), FrontendError> {
        if self.eat(lexeme) {
            Ok(())
        } else {
            Err(self.error(format!("`{lexeme}`")))
        }
    }

    fn ident(&mut self) -> Result<(String, Pos), FrontendError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => {
                let pos = self.pos();
                self.at += 1;
                Ok((t.lexeme.clone(), pos))
            }
            _ => Err(self.error("identifier")),
        }
    }

    fn program(mut self) -> Result<ProgramAst, FrontendError> {
        let mut globals = Vec::new();
        let mut functions = Vec::new();
        while self.peek().is_some() {
            let returns_value = if self.eat("int") {
                true
            } else if self.eat("void") {
                false
            } else {
                return Err(self.error("`int` or `void`"));
            };
            let (name, pos) = self.ident()?;
            if returns_value && !self.peek_is("(") {
                let init = if self.eat("=") { self.int_literal()? } else { 0 };
                self.expect(";")?;
                globals.push(Global { name, init, pos });
            } else {
                functions.push(self.function(name, pos, returns_value)?);
            }
        }
        Ok(ProgramAst { globals, functions, entry: "main".to_string() })
    }

    fn int_literal(&mut self) -> Result<i64, FrontendError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::IntegerLiteral => {
                let pos = self.pos();
                self.at += 1;
                t.lexeme.parse::<i64>().map_err(|_| FrontendError::IntegerOutOfRange {
                    lexeme: t.lexeme.clone(),
                    line: pos.line,
                    column: pos.column,
                })
            }
            _ => Err(self.error("integer literal")),
        }
    }

    fn function(&mut self, name: String, pos: Pos, returns_value: bool) -> Result<FuncDef, FrontendError> {
        self.expect("(")?;
        let mut params = Vec::new();
        if !self.peek_is(")") {
            loop {
                self.expect("int")?;
                params.push(self.ident()?.0);
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        self.next_stmt = 0;
        let body = self.block()?;
        Ok(FuncDef { name, params, body, returns_value, pos })
    }

    fn block(&mut self) -> Result<Vec<Stmt>, FrontendError> {
        self.expect("{")?;
        let mut stmts = Vec::new();
        while !self.eat("}") {
            if self.peek().is_none() {
                return Err(self.error("`}`"));
            }
            stmts.push(self.stmt()?);
        }
        Ok(stmts)
    }

    fn stmt(&mut self) -> Result<Stmt, FrontendError> {
        let pos = self.pos();
        let id = StmtId(self.next_stmt);
        self.next_stmt += 1;
        let kind = if self.eat("int") {
            let (name, _) = self.ident()?;
            let init = if self.eat("=") { Some(self.expr()?) } else { None };
            self.expect(";")?;
            StmtKind::Decl { name, init }
        } else if self.eat("if") {
            self.expect("(")?;
            let cond = self.expr()?;
            self.expect(")")?;
            let then_block = self.block()?;
            let else_block = if self.eat("else") { Some(self.block()?) } else { None };
            StmtKind::If { cond, then_block, else_block }
        } else if self.eat("return") {
            let value = if self.peek_is(";") { None } else { Some(self.expr()?) };
            self.expect(";")?;
            StmtKind::Return(value)
        } else if self.eat("print") {
            self.expect("(")?;
            let value = self.expr()?;
            self.expect(")")?;
            self.expect(";")?;
            StmtKind::Print(value)
        } else if self.peek().is_some_and(|t| t.kind == TokenKind::Identifier) && self.peek_nth_is(1, "=") {
            let (name, _) = self.ident()?;
            self.bump();
            let value = self.expr()?;
            self.expect(";")?;
            StmtKind::Assign { name, value }
        } else {
            let e = self.expr()?;
            self.expect(";")?;
            StmtKind::Expr(e)
        };
        Ok(Stmt { id, kind, pos })
    }

    fn expr(&mut self) -> Result<Expr, FrontendError> {
        let lhs = self.add()?;
        let op = match self.peek() {
            Some(t) if t.kind == TokenKind::Operator => BinOp::from_symbol(&t.lexeme).filter(|op| op.is_comparison()),
            _ => None,
        };
        match op {
            Some(op) => {
                self.bump();
                let rhs = self.add()?;
                Ok(binary(op, lhs, rhs))
            }
            None => Ok(lhs),
        }
    }

    fn add(&mut self) -> Result<Expr, FrontendError> {
        let mut lhs = self.mul()?;
        loop {
            let op = if self.peek_is("+") {
                BinOp::Add
            } else if self.peek_is("-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            self.bump();
            let rhs = self.mul()?;
            lhs = binary(op, lhs, rhs);
        }
    }

    fn mul(&mut self) -> Result<Expr, FrontendError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.peek_is("*") {
                BinOp::Mul
            } else if self.peek_is("/") {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, FrontendError> {
        let pos = self.pos();
        if self.eat("-") {
            let inner = self.unary()?;
            return Ok(Expr { kind: ExprKind::Neg(Box::new(inner)), pos });
        }
        if self.eat("(") {
            let inner = self.expr()?;
            self.expect(")")?;
            return Ok(inner);
        }
        if self.eat("read") {
            self.expect("(")?;
            self.expect(")")?;
            return Ok(Expr { kind: ExprKind::Read, pos });
        }
        match self.peek() {
            Some(t) if t.kind == TokenKind::IntegerLiteral => {
                let v = self.int_literal()?;
                Ok(Expr { kind: ExprKind::Int(v), pos })
            }
            Some(t) if t.kind == TokenKind::Identifier => {
                let (name, _) = self.ident()?;
                if self.eat("(") {
                    let mut args = Vec::new();
                    if !self.peek_is(")") {
                        loop {
                            args.push(self.expr()?);
                            if !self.eat(",") {
                                break;
                            }
                        }
                    }
                    self.expect(")")?;
                    Ok(Expr { kind: ExprKind::Call { callee: name, args }, pos })
                } else {
                    Ok(Expr { kind: ExprKind::Var(name), pos })
                }
            }
            _ => Err(self.error("expression")),
        }
    }
}

fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
    let pos = lhs.pos;
    Expr { kind: ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, pos }
}
