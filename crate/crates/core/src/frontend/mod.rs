//! Lexing, parsing and validation of `.mc` source files.
//!
//! Grammar:
//!
//! ```text
//! program := "int" IDENT "(" [ "int" IDENT { "," "int" IDENT } ] ")" block
//! block   := "{" { stmt } "}"
//! stmt    := "int" IDENT "=" expr ";" | IDENT "=" expr ";" | IDENT "++" ";" | IDENT "--" ";"
//!          | "if" "(" expr ")" block [ "else" block ] | "while" "(" expr ")" block
//!          | "return" expr ";"
//! ```
//!
//! The single `return` must close the function body. Declarations are block
//! scoped and may not shadow a visible name. `&&` and `||` evaluate both
//! operands.

mod ast;
mod lexer;
mod parser;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::{self, Write};

pub use ast::{BinaryOp, Expr, ProgramAst, Stmt, Type, UnaryOp};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FrontendError {
    #[error("{line}:{col}: syntax error: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        line: u32,
        col: u32,
        expected: Vec<String>,
        found: String,
    },
    #[error("{line}:{col}: name error: `{name}` {message}")]
    Name {
        name: String,
        line: u32,
        col: u32,
        message: String,
    },
    #[error("{line}:{col}: type error: {message}")]
    Type { line: u32, col: u32, message: String },
    #[error("{line}:{col}: structure error: {message}")]
    Structure { line: u32, col: u32, message: String },
}

impl FrontendError {
    pub fn position(&self) -> (u32, u32) {
        match *self {
            FrontendError::Syntax { line, col, .. }
            | FrontendError::Name { line, col, .. }
            | FrontendError::Type { line, col, .. }
            | FrontendError::Structure { line, col, .. } => (line, col),
        }
    }
}

/// Parses and validates one function.
pub fn parse_program(source: &str) -> Result<ProgramAst, FrontendError> {
    let toks = lexer::tokenize(source)?;
    parser::Parser::new(toks).program()
}

/// Renders `ast` back to source that parses to the same tree.
pub fn pretty_print(ast: &ProgramAst) -> String {
    let mut out = String::new();
    let params: Vec<String> = ast.params.iter().map(|p| alloc::format!("int {p}")).collect();
    let _ = writeln!(out, "int {}({}) {{", ast.name, params.join(", "));
    for s in &ast.body {
        write_stmt(&mut out, s, 1);
    }
    let _ = writeln!(out, "    return {};", ExprDisplay(&ast.return_expr));
    out.push_str("}\n");
    out
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

fn write_block(out: &mut String, body: &[Stmt], depth: usize) {
    out.push_str("{\n");
    for s in body {
        write_stmt(out, s, depth + 1);
    }
    indent(out, depth);
    out.push('}');
}

fn write_stmt(out: &mut String, stmt: &Stmt, depth: usize) {
    indent(out, depth);
    match stmt {
        Stmt::Decl { name, value } => {
            let _ = writeln!(out, "int {name} = {};", ExprDisplay(value));
        }
        Stmt::Assign { name, value } => {
            let _ = writeln!(out, "{name} = {};", ExprDisplay(value));
        }
        Stmt::If {
            cond,
            then_body,
            else_body,
        } => {
            let _ = write!(out, "if ({}) ", ExprDisplay(cond));
            write_block(out, then_body, depth);
            if let Some(e) = else_body {
                out.push_str(" else ");
                write_block(out, e, depth);
            }
            out.push('\n');
        }
        Stmt::While { cond, body } => {
            let _ = write!(out, "while ({}) ", ExprDisplay(cond));
            write_block(out, body, depth);
            out.push('\n');
        }
    }
}

/// Minimal-parenthesis expression printer.
pub struct ExprDisplay<'a>(pub &'a Expr);

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self.0)
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    match e {
        Expr::Int(n) => write!(f, "{n}"),
        Expr::Var(v) => f.write_str(v),
        Expr::Unary(op, inner) => {
            f.write_str(match op {
                UnaryOp::Neg => "-",
                UnaryOp::Not => "!",
            })?;
            match **inner {
                // `--x` would lex as a decrement
                Expr::Binary(..) | Expr::Int(_) | Expr::Unary(..) => {
                    f.write_str("(")?;
                    write_expr(f, inner)?;
                    f.write_str(")")
                }
                _ => write_expr(f, inner),
            }
        }
        Expr::Binary(op, lhs, rhs) => {
            let prec = op.precedence();
            write_operand(f, lhs, prec, false)?;
            write!(f, " {} ", op.symbol())?;
            write_operand(f, rhs, prec, true)
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, parent: u8, right: bool) -> fmt::Result {
    let needs = match e {
        Expr::Binary(op, _, _) => op.precedence() < parent || (right && op.precedence() == parent),
        _ => false,
    };
    if needs {
        f.write_str("(")?;
        write_expr(f, e)?;
        f.write_str(")")
    } else {
        write_expr(f, e)
    }
}
