use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::FrontendError;

pub(super) fn validate(program: &ProgramAst) -> Result<(), FrontendError> {
    let mut arity: HashMap<&str, usize> = HashMap::new();
    for f in &program.functions {
        if arity.insert(&f.name, f.params.len()).is_some() {
            return Err(duplicate(&f.name, f.pos));
        }
    }
    let mut globals = HashSet::new();
    for g in &program.globals {
        if !globals.insert(g.name.as_str()) || arity.contains_key(g.name.as_str()) {
            return Err(duplicate(&g.name, g.pos));
        }
    }

    for f in &program.functions {
        let mut params = HashSet::new();
        for p in &f.params {
            if !params.insert(p.clone()) {
                return Err(duplicate(p, f.pos));
            }
        }
        let mut cx = Scope { arity: &arity, globals: &globals, scopes: vec![params] };
        cx.block(&f.body)?;
    }
    Ok(())
}

fn duplicate(name: &str, pos: Pos) -> FrontendError {
    FrontendError::Duplicate { name: name.to_string(), line: pos.line, column: pos.column }
}

struct Scope<'a> {
    arity: &'a HashMap<&'a str, usize>,
    globals: &'a HashSet<&'a str>,
    scopes: Vec<HashSet<String>>,
}

impl Scope<'_> {
    fn is_local(&self, name: &str) -> bool {
        self.scopes.iter().any(|s| s.contains(name))
    }

    fn variable(&self, name: &str, pos: Pos) -> Result<(), FrontendError> {
        if self.is_local(name) || self.globals.contains(name) {
            Ok(())
        } else {
            Err(FrontendError::Resolve { name: name.to_string(), line: pos.line, column: pos.column })
        }
    }

    /// Returns whether the block always returns.
    fn block(&mut self, block: &[Stmt]) -> Result<bool, FrontendError> {
        self.scopes.push(HashSet::new());
        let mut returned = false;
        for stmt in block {
            if returned {
                return Err(FrontendError::Unreachable { line: stmt.pos.line, column: stmt.pos.column });
            }
            returned = self.stmt(stmt)?;
        }
        self.scopes.pop();
        Ok(returned)
    }

    fn stmt(&mut self, stmt: &Stmt) -> Result<bool, FrontendError> {
        match &stmt.kind {
            StmtKind::Decl { name, init } => {
                if let Some(e) = init {
                    self.expr(e)?;
                }
                if self.is_local(name) || self.arity.contains_key(name.as_str()) {
                    return Err(duplicate(name, stmt.pos));
                }
                self.scopes.last_mut().expect("open scope").insert(name.clone());
                Ok(false)
            }
            StmtKind::Assign { name, value } => {
                self.expr(value)?;
                self.variable(name, stmt.pos)?;
                Ok(false)
            }
            StmtKind::If { cond, then_block, else_block } => {
                self.expr(cond)?;
                let then_returns = self.block(then_block)?;
                let else_returns = match else_block {
                    Some(b) => self.block(b)?,
                    None => false,
                };
                Ok(then_returns && else_returns)
            }
            StmtKind::Return(value) => {
                if let Some(e) = value {
                    self.expr(e)?;
                }
                Ok(true)
            }
            StmtKind::Print(e) | StmtKind::Expr(e) => {
                self.expr(e)?;
                Ok(false)
            }
            StmtKind::Omitted { returns } => Ok(*returns),
        }
    }

    fn expr(&self, e: &Expr) -> Result<(), FrontendError> {
        match &e.kind {
            ExprKind::Int(_) | ExprKind::Read => Ok(()),
            ExprKind::Var(name) => self.variable(name, e.pos),
            ExprKind::Neg(inner) => self.expr(inner),
            ExprKind::Binary { lhs, rhs, .. } => {
                self.expr(lhs)?;
                self.expr(rhs)
            }
            ExprKind::Call { callee, args } => {
                for a in args {
                    self.expr(a)?;
                }
                match self.arity.get(callee.as_str()) {
                    None => Err(FrontendError::Resolve { name: callee.clone(), line: e.pos.line, column: e.pos.column }),
                    Some(&n) if n != args.len() => Err(FrontendError::Arity {
                        callee: callee.clone(),
                        expected: n,
                        found: args.len(),
                        line: e.pos.line,
                        column: e.pos.column,
                    }),
                    Some(_) => Ok(()),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_source;
    use super::*;

    #[test]
    fn duplicate_function() {
        let err = parse_source("int f(){ return 1; } int f(){ return 2; }").unwrap_err();
        assert!(matches!(err, FrontendError::Duplicate { ref name, .. } if name == "f"));
    }

    #[test]
    fn global_clashing_with_function() {
        assert!(matches!(parse_source("int f; void f(){}"), Err(FrontendError::Duplicate { .. })));
        assert!(matches!(parse_source("int g; int g;"), Err(FrontendError::Duplicate { .. })));
    }

    #[test]
    fn duplicate_parameter_and_local() {
        assert!(matches!(parse_source("int f(int a, int a){ return a; }"), Err(FrontendError::Duplicate { .. })));
        assert!(matches!(parse_source("int f(int a){ int a; return a; }"), Err(FrontendError::Duplicate { .. })));
    }

    #[test]
    fn block_scoping() {
        assert!(parse_source("int f(int a){ if (a) { int t = 1; a = t; } else { int t = 2; a = t; } return a; }").is_ok());
        let err = parse_source("int f(int a){ if (a) { int t = 1; } return t; }").unwrap_err();
        assert!(matches!(err, FrontendError::Resolve { ref name, .. } if name == "t"));
    }

    #[test]
    fn locals_may_shadow_globals() {
        assert!(parse_source("int x = 3; int f(int x){ return x; }").is_ok());
    }

    #[test]
    fn function_used_as_variable() {
        assert!(matches!(parse_source("int f(){ return f; }"), Err(FrontendError::Resolve { .. })));
    }

    #[test]
    fn arity_is_checked() {
        let err = parse_source("int f(int a){ return a; } void main(){ print(f(1, 2)); }").unwrap_err();
        assert!(matches!(err, FrontendError::Arity { expected: 1, found: 2, .. }), "{err:?}");
    }

    #[test]
    fn code_after_return_is_unreachable() {
        assert!(matches!(parse_source("int f(){ return 1; print(2); }"), Err(FrontendError::Unreachable { .. })));
        let both = "int f(int a){ if (a) { return 1; } else { return 2; } a = 3; }";
        assert!(matches!(parse_source(both), Err(FrontendError::Unreachable { .. })));
        assert!(parse_source("int f(int a){ if (a) { return 1; } a = 3; }").is_ok());
    }
}
