use std::fmt::{self, Write};

use super::ast::*;

impl fmt::Display for ProgramAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_print(self))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        expr(&mut s, self, 0);
        f.write_str(&s)
    }
}

/// Renders a program in the canonical layout: one statement per line,
/// four-space indentation, minimal parentheses.
pub fn pretty_print(program: &ProgramAst) -> String {
    let mut out = String::new();
    for g in &program.globals {
        let _ = writeln!(out, "int {} = {};", g.name, g.init);
    }
    for (i, func) in program.functions.iter().enumerate() {
        if i > 0 || !program.globals.is_empty() {
            out.push('\n');
        }
        let params: Vec<String> = func.params.iter().map(|p| format!("int {p}")).collect();
        let ret = if func.returns_value { "int" } else { "void" };
        let _ = write!(out, "{ret} {}({}) ", func.name, params.join(", "));
        block(&mut out, &func.body, 0);
        out.push('\n');
    }
    out
}

fn block(out: &mut String, stmts: &[Stmt], depth: usize) {
    out.push_str("{\n");
    for s in stmts {
        stmt(out, s, depth + 1);
    }
    indent(out, depth);
    out.push('}');
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

fn stmt(out: &mut String, s: &Stmt, depth: usize) {
    indent(out, depth);
    match &s.kind {
        StmtKind::Decl { name, init: None } => {
            let _ = write!(out, "int {name};");
        }
        StmtKind::Decl { name, init: Some(e) } => {
            let _ = write!(out, "int {name} = {e};");
        }
        StmtKind::Assign { name, value } => {
            let _ = write!(out, "{name} = {value};");
        }
        StmtKind::If { cond, then_block, else_block } => {
            let _ = write!(out, "if ({cond}) ");
            block(out, then_block, depth);
            if let Some(b) = else_block {
                out.push_str(" else ");
                block(out, b, depth);
            }
        }
        StmtKind::Return(None) => out.push_str("return;"),
        StmtKind::Return(Some(e)) => {
            let _ = write!(out, "return {e};");
        }
        StmtKind::Print(e) => {
            let _ = write!(out, "print({e});");
        }
        StmtKind::Expr(e) => {
            let _ = write!(out, "{e};");
        }
        StmtKind::Omitted { returns: false } => out.push_str("// omitted"),
        StmtKind::Omitted { returns: true } => out.push_str("return 0; // omitted"),
    }
    out.push('\n');
}

const UNARY: u8 = 4;

/// `min_prec` is the weakest binding the surrounding context accepts unparenthesized.
fn expr(out: &mut String, e: &Expr, min_prec: u8) {
    match &e.kind {
        ExprKind::Int(v) => {
            let _ = write!(out, "{v}");
        }
        ExprKind::Var(name) => out.push_str(name),
        ExprKind::Read => out.push_str("read()"),
        ExprKind::Call { callee, args } => {
            out.push_str(callee);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                expr(out, a, 0);
            }
            out.push(')');
        }
        ExprKind::Neg(inner) => {
            out.push('-');
            expr(out, inner, UNARY);
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let prec = op.precedence();
            let wrap = prec < min_prec;
            if wrap {
                out.push('(');
            }
            // comparisons do not chain, so both sides bind tighter
            let (left_min, right_min) = if op.is_comparison() { (prec + 1, prec + 1) } else { (prec, prec + 1) };
            expr(out, lhs, left_min);
            let _ = write!(out, " {} ", op.symbol());
            expr(out, rhs, right_min);
            if wrap {
                out.push(')');
            }
        }
    }
}
