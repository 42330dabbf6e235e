//! Syntax tree for MiniLang. Source positions ride along on statements and
//! expressions but never take part in equality, so a pretty-printed and
//! re-parsed program compares equal to the original.

use std::fmt;

use serde::Serialize;

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct Pos {
    pub line: u32,
    pub column: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// Pre-order index of a statement within its function body.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct StmtId(pub u32);

#[derive(Debug, Clone, PartialEq)]
pub struct ProgramAst {
    pub globals: Vec<Global>,
    pub functions: Vec<FuncDef>,
    pub entry: String,
}

impl ProgramAst {
    pub fn function(&self, name: &str) -> Option<&FuncDef> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn function_mut(&mut self, name: &str) -> Option<&mut FuncDef> {
        self.functions.iter_mut().find(|f| f.name == name)
    }

    pub fn global(&self, name: &str) -> Option<&Global> {
        self.globals.iter().find(|g| g.name == name)
    }
}

#[derive(Debug, Clone)]
pub struct Global {
    pub name: String,
    pub init: i64,
    pub pos: Pos,
}

impl PartialEq for Global {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.init == other.init
    }
}

#[derive(Debug, Clone)]
pub struct FuncDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
    pub returns_value: bool,
    pub pos: Pos,
}

impl PartialEq for FuncDef {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.params == other.params
            && self.body == other.body
            && self.returns_value == other.returns_value
    }
}

impl FuncDef {
    /// Visits every statement in pre-order, nested blocks included.
    pub fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a Stmt)) {
        walk_block(&self.body, visit);
    }

    pub fn stmt(&self, id: StmtId) -> Option<&Stmt> {
        let mut found = None;
        self.walk(&mut |s| {
            if s.id == id {
                found = Some(s);
            }
        });
        found
    }

    /// Names of the user functions called anywhere in the body, in evaluation order.
    pub fn callees(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(&mut |s| {
            for e in s.exprs() {
                e.calls(&mut |name, _| out.push(name));
            }
        });
        out
    }
}

fn walk_block<'a>(block: &'a [Stmt], visit: &mut impl FnMut(&'a Stmt)) {
    for stmt in block {
        visit(stmt);
        if let StmtKind::If { then_block, else_block, .. } = &stmt.kind {
            walk_block(then_block, visit);
            if let Some(b) = else_block {
                walk_block(b, visit);
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Stmt {
    pub id: StmtId,
    pub kind: StmtKind,
    pub pos: Pos,
}

impl PartialEq for Stmt {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id && self.kind == other.kind
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Decl { name: String, init: Option<Expr> },
    Assign { name: String, value: Expr },
    If { cond: Expr, then_block: Vec<Stmt>, else_block: Option<Vec<Stmt>> },
    Return(Option<Expr>),
    Print(Expr),
    Expr(Expr),
    /// Placeholder left behind when an analysis removes a statement that
    /// called an omitted function. Executes as a no-op (or `return 0`).
    Omitted { returns: bool },
}

impl Stmt {
    /// Expressions evaluated by this statement itself (not by nested blocks).
    pub fn exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::Decl { init, .. } => init.iter().collect(),
            StmtKind::Assign { value, .. } => vec![value],
            StmtKind::If { cond, .. } => vec![cond],
            StmtKind::Return(e) => e.iter().collect(),
            StmtKind::Print(e) | StmtKind::Expr(e) => vec![e],
            StmtKind::Omitted { .. } => Vec::new(),
        }
    }

    /// Number of user-function calls evaluated by this statement itself.
    pub fn call_count(&self) -> usize {
        let mut n = 0;
        for e in self.exprs() {
            e.calls(&mut |_, _| n += 1);
        }
        n
    }

    pub fn calls_function(&self, name: &str) -> bool {
        let mut hit = false;
        for e in self.exprs() {
            e.calls(&mut |callee, _| hit |= callee == name);
        }
        hit
    }

    pub fn reads_input(&self) -> bool {
        self.exprs().iter().any(|e| e.reads_input())
    }

    pub fn is_return(&self) -> bool {
        matches!(self.kind, StmtKind::Return(_) | StmtKind::Omitted { returns: true })
    }
}

#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Int(i64),
    Var(String),
    Neg(Box<Expr>),
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Call { callee: String, args: Vec<Expr> },
    Read,
}

impl Expr {
    pub fn new(kind: ExprKind) -> Self {
        Expr { kind, pos: Pos::default() }
    }

    /// Visits user calls in evaluation order: arguments left to right, then the call.
    pub fn calls<'a>(&'a self, visit: &mut impl FnMut(&'a str, &'a Expr)) {
        match &self.kind {
            ExprKind::Int(_) | ExprKind::Var(_) | ExprKind::Read => {}
            ExprKind::Neg(e) => e.calls(visit),
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.calls(visit);
                rhs.calls(visit);
            }
            ExprKind::Call { callee, args } => {
                for a in args {
                    a.calls(visit);
                }
                visit(callee, self);
            }
        }
    }

    pub fn reads_input(&self) -> bool {
        match &self.kind {
            ExprKind::Read => true,
            ExprKind::Int(_) | ExprKind::Var(_) => false,
            ExprKind::Neg(e) => e.reads_input(),
            ExprKind::Binary { lhs, rhs, .. } => lhs.reads_input() || rhs.reads_input(),
            ExprKind::Call { args, .. } => args.iter().any(Expr::reads_input),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Lt => "<",
            BinOp::Gt => ">",
            BinOp::Le => "<=",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
        }
    }

    pub fn from_symbol(s: &str) -> Option<BinOp> {
        Some(match s {
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            "<" => BinOp::Lt,
            ">" => BinOp::Gt,
            "<=" => BinOp::Le,
            ">=" => BinOp::Ge,
            "==" => BinOp::Eq,
            "!=" => BinOp::Ne,
            _ => return None,
        })
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge | BinOp::Eq | BinOp::Ne)
    }

    pub(crate) fn precedence(self) -> u8 {
        match self {
            BinOp::Mul | BinOp::Div => 3,
            BinOp::Add | BinOp::Sub => 2,
            _ => 1,
        }
    }
}
