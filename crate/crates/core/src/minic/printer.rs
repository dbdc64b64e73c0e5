// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write;

use super::ast::*;

const INDENT: &str = "    ";

/// Renders a program as canonical Mini-C source.
///
/// Binary operators are parenthesized only where precedence requires it;
/// comma expressions are always parenthesized, since the grammar only admits
/// them in that form.
pub fn print(program: &Program) -> String {
    let mut out = String::new();
    for (i, f) in program.functions.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let params: Vec<String> = f.params.iter().map(|p| format!("int {p}")).collect();
        let _ = write!(out, "int {}({}) ", f.name, params.join(", "));
        write_block(&mut out, &f.body, 0);
        out.push('\n');
    }
    out
}

pub fn print_expr(expr: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, expr);
    out
}

pub fn print_stmt(stmt: &Stmt) -> String {
    let mut out = String::new();
    write_stmt(&mut out, stmt, 0);
    out.truncate(out.trim_end().len());
    out
}

fn write_block(out: &mut String, block: &Block, depth: usize) {
    out.push_str("{\n");
    for stmt in block {
        write_stmt(out, stmt, depth + 1);
    }
    for _ in 0..depth {
        out.push_str(INDENT);
    }
    out.push('}');
}

fn write_stmt(out: &mut String, stmt: &Stmt, depth: usize) {
    for _ in 0..depth {
        out.push_str(INDENT);
    }
    match &stmt.kind {
        StmtKind::Expr(e) => {
            write_expr(out, e);
            out.push(';');
        }
        StmtKind::Decl { name, init } => {
            let _ = write!(out, "int {name} = ");
            write_expr(out, init);
            out.push(';');
        }
        StmtKind::Assign { name, value } => {
            let _ = write!(out, "{name} = ");
            write_expr(out, value);
            out.push(';');
        }
        StmtKind::If { cond, then_block, else_block } => {
            out.push_str("if (");
            write_expr(out, cond);
            out.push_str(") ");
            write_block(out, then_block, depth);
            if let Some(else_block) = else_block {
                out.push_str(" else ");
                write_block(out, else_block, depth);
            }
        }
        StmtKind::While { cond, body } => {
            out.push_str("while (");
            write_expr(out, cond);
            out.push_str(") ");
            write_block(out, body, depth);
        }
        StmtKind::Return(e) => {
            out.push_str("return ");
            write_expr(out, e);
            out.push(';');
        }
    }
    out.push('\n');
}

fn write_expr(out: &mut String, expr: &Expr) {
    match &expr.kind {
        ExprKind::IntLit(v) => {
            let _ = write!(out, "{v}");
        }
        ExprKind::Var(name) => out.push_str(name),
        ExprKind::Binary { op, lhs, rhs } => {
            let prec = op.precedence();
            write_operand(out, lhs, |p| p < prec);
            let _ = write!(out, " {} ", op.symbol());
            write_operand(out, rhs, |p| p <= prec);
        }
        ExprKind::Call { callee, args } => {
            out.push_str(callee);
            out.push('(');
            for (i, arg) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, arg);
            }
            out.push(')');
        }
        ExprKind::Comma(first, second) => {
            out.push('(');
            write_expr(out, first);
            out.push_str(", ");
            write_expr(out, second);
            out.push(')');
        }
    }
}

fn write_operand(out: &mut String, operand: &Expr, needs_parens: impl Fn(u8) -> bool) {
    match &operand.kind {
        ExprKind::Binary { op, .. } if needs_parens(op.precedence()) => {
            out.push('(');
            write_expr(out, operand);
            out.push(')');
        }
        _ => write_expr(out, operand),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minic::parse;

    #[test]
    fn empty_function() {
        let p =
            Program { functions: vec![FunDef { name: "f".into(), params: vec![], body: vec![], pos: Pos::default() }] };
        let text = print(&p);
        assert_eq!(text.split_whitespace().collect::<String>(), "intf(){}");
    }

    #[test]
    fn probed_call_shape() {
        let e = Expr::comma(Expr::call("__probe", vec![Expr::int(0)]), Expr::call("f", vec![]));
        assert_eq!(print_expr(&e), "(__probe(0), f())");
    }

    #[test]
    fn parenthesizes_only_where_needed() {
        let p = parse("int f(){return (1 + 2) * 3 - (4 - 5) + 6 / (7 / 8);}").unwrap();
        assert_eq!(print_stmt(&p.functions[0].body[0]), "return (1 + 2) * 3 - (4 - 5) + 6 / (7 / 8);");
    }

    #[test]
    fn nested_blocks_indent() {
        let p = parse("int f(int a){if(a){while(a){a=a-1;}}else{return 2;}return a;}").unwrap();
        let expected = "int f(int a) {\n    if (a) {\n        while (a) {\n            a = a - 1;\n        }\n    } else {\n        return 2;\n    }\n    return a;\n}\n";
        assert_eq!(print(&p), expected);
    }
}
