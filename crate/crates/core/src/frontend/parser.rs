use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::ast::{BinaryOp, Expr, ProgramAst, Stmt, Type, UnaryOp};
use super::lexer::{Pos, Tok, Token};
use super::FrontendError;

pub struct Parser {
    toks: Vec<Token>,
    at: usize,
    scopes: Vec<Vec<String>>,
}

impl Parser {
    pub fn new(toks: Vec<Token>) -> Self {
        Parser {
            toks,
            at: 0,
            scopes: Vec::new(),
        }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn syntax(&self, expected: &[&str]) -> FrontendError {
        let pos = self.pos();
        FrontendError::Syntax {
            line: pos.line,
            col: pos.col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().to_string(),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<Pos, FrontendError> {
        if *self.peek() == tok {
            Ok(self.bump().pos)
        } else {
            Err(self.syntax(&[&tok.to_string()]))
        }
    }

    fn ident(&mut self) -> Result<(String, Pos), FrontendError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let pos = self.bump().pos;
                Ok((name, pos))
            }
            _ => Err(self.syntax(&["identifier"])),
        }
    }

    fn is_declared(&self, name: &str) -> bool {
        self.scopes.iter().any(|s| s.iter().any(|n| n == name))
    }

    fn declare(&mut self, name: &str, pos: Pos) -> Result<(), FrontendError> {
        if self.is_declared(name) {
            return Err(FrontendError::Name {
                name: name.into(),
                line: pos.line,
                col: pos.col,
                message: "is already declared".into(),
            });
        }
        self.scopes
            .last_mut()
            .expect("a scope is open while parsing")
            .push(name.into());
        Ok(())
    }

    fn require_declared(&self, name: &str, pos: Pos) -> Result<(), FrontendError> {
        if self.is_declared(name) {
            Ok(())
        } else {
            Err(FrontendError::Name {
                name: name.into(),
                line: pos.line,
                col: pos.col,
                message: "is not declared".into(),
            })
        }
    }

    pub fn program(&mut self) -> Result<ProgramAst, FrontendError> {
        self.expect(Tok::KwInt)?;
        let (name, _) = self.ident()?;
        self.expect(Tok::LParen)?;
        self.scopes.push(Vec::new());
        let mut params = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                self.expect(Tok::KwInt)?;
                let (p, pos) = self.ident()?;
                self.declare(&p, pos)?;
                params.push(p);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        let open = self.expect(Tok::LBrace)?;

        let mut body = Vec::new();
        let return_expr = loop {
            match self.peek() {
                Tok::KwReturn => {
                    self.bump();
                    let value = self.int_expr()?;
                    self.expect(Tok::Semi)?;
                    if *self.peek() != Tok::RBrace {
                        let pos = self.pos();
                        return Err(FrontendError::Structure {
                            line: pos.line,
                            col: pos.col,
                            message: "`return` must be the last statement of the function".into(),
                        });
                    }
                    self.bump();
                    break value;
                }
                Tok::RBrace => {
                    let pos = self.pos();
                    return Err(FrontendError::Structure {
                        line: pos.line,
                        col: pos.col,
                        message: format!(
                            "function `{name}` (opened at line {}) has no trailing `return`",
                            open.line
                        ),
                    });
                }
                _ => body.push(self.stmt()?),
            }
        };
        if *self.peek() != Tok::Eof {
            return Err(self.syntax(&["end of input"]));
        }
        self.scopes.pop();
        Ok(ProgramAst {
            name,
            params,
            body,
            return_expr,
        })
    }

    fn block(&mut self) -> Result<Vec<Stmt>, FrontendError> {
        self.expect(Tok::LBrace)?;
        self.scopes.push(Vec::new());
        let mut out = Vec::new();
        while *self.peek() != Tok::RBrace {
            if *self.peek() == Tok::Eof {
                return Err(self.syntax(&["`}`"]));
            }
            out.push(self.stmt()?);
        }
        self.bump();
        self.scopes.pop();
        Ok(out)
    }

    fn stmt(&mut self) -> Result<Stmt, FrontendError> {
        match self.peek().clone() {
            Tok::KwInt => {
                self.bump();
                let (name, pos) = self.ident()?;
                self.expect(Tok::Assign)?;
                let value = self.int_expr()?;
                self.expect(Tok::Semi)?;
                // declared after the initializer: `int x = x;` is a name error
                self.declare(&name, pos)?;
                Ok(Stmt::Decl { name, value })
            }
            Tok::Ident(name) => {
                let pos = self.bump().pos;
                self.require_declared(&name, pos)?;
                let stmt = match self.peek() {
                    Tok::Assign => {
                        self.bump();
                        let value = self.int_expr()?;
                        Stmt::Assign { name, value }
                    }
                    Tok::PlusPlus | Tok::MinusMinus => {
                        let op = if *self.peek() == Tok::PlusPlus {
                            BinaryOp::Add
                        } else {
                            BinaryOp::Sub
                        };
                        self.bump();
                        Stmt::Assign {
                            value: Expr::binary(op, Expr::Var(name.clone()), Expr::Int(1)),
                            name,
                        }
                    }
                    _ => return Err(self.syntax(&["`=`", "`++`", "`--`"])),
                };
                self.expect(Tok::Semi)?;
                Ok(stmt)
            }
            Tok::KwIf => {
                self.bump();
                self.expect(Tok::LParen)?;
                let cond = self.bool_expr()?;
                self.expect(Tok::RParen)?;
                let then_body = self.block()?;
                let else_body = if *self.peek() == Tok::KwElse {
                    self.bump();
                    Some(self.block()?)
                } else {
                    None
                };
                Ok(Stmt::If {
                    cond,
                    then_body,
                    else_body,
                })
            }
            Tok::KwWhile => {
                self.bump();
                self.expect(Tok::LParen)?;
                let cond = self.bool_expr()?;
                self.expect(Tok::RParen)?;
                let body = self.block()?;
                Ok(Stmt::While { cond, body })
            }
            Tok::KwReturn => {
                let pos = self.pos();
                Err(FrontendError::Structure {
                    line: pos.line,
                    col: pos.col,
                    message: "`return` is only allowed as the last statement of the function"
                        .into(),
                })
            }
            _ => Err(self.syntax(&["statement"])),
        }
    }

    fn int_expr(&mut self) -> Result<Expr, FrontendError> {
        let pos = self.pos();
        let e = self.expr(1)?;
        if e.ty() != Type::Int {
            return Err(FrontendError::Type {
                line: pos.line,
                col: pos.col,
                message: "expected an integer expression, found a boolean one".into(),
            });
        }
        Ok(e)
    }

    fn bool_expr(&mut self) -> Result<Expr, FrontendError> {
        let pos = self.pos();
        let e = self.expr(1)?;
        if e.ty() != Type::Bool {
            return Err(FrontendError::Type {
                line: pos.line,
                col: pos.col,
                message: "condition must be boolean".into(),
            });
        }
        Ok(e)
    }

    fn binary_op(tok: &Tok) -> Option<BinaryOp> {
        Some(match tok {
            Tok::OrOr => BinaryOp::Or,
            Tok::AndAnd => BinaryOp::And,
            Tok::EqEq => BinaryOp::Eq,
            Tok::NotEq => BinaryOp::Ne,
            Tok::Lt => BinaryOp::Lt,
            Tok::Le => BinaryOp::Le,
            Tok::Gt => BinaryOp::Gt,
            Tok::Ge => BinaryOp::Ge,
            Tok::Plus => BinaryOp::Add,
            Tok::Minus => BinaryOp::Sub,
            Tok::Star => BinaryOp::Mul,
            Tok::Slash => BinaryOp::Div,
            Tok::Percent => BinaryOp::Rem,
            _ => return None,
        })
    }

    /// Precedence climbing; every level is left-associative.
    fn expr(&mut self, min_prec: u8) -> Result<Expr, FrontendError> {
        let mut lhs = self.unary()?;
        while let Some(op) = Self::binary_op(self.peek()) {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            let op_pos = self.bump().pos;
            let rhs = self.expr(prec + 1)?;
            check_operands(op, &lhs, &rhs, op_pos)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, FrontendError> {
        match self.peek() {
            Tok::Minus => {
                let pos = self.bump().pos;
                let operand = self.unary()?;
                match operand {
                    // fold so that MIN_INT is writable as a literal
                    Expr::Int(n) => Ok(Expr::Int(-n)),
                    e if e.ty() == Type::Int => Ok(Expr::Unary(UnaryOp::Neg, Box::new(e))),
                    _ => Err(FrontendError::Type {
                        line: pos.line,
                        col: pos.col,
                        message: "unary `-` applied to a boolean".into(),
                    }),
                }
            }
            Tok::Bang => {
                let pos = self.bump().pos;
                let operand = self.unary()?;
                if operand.ty() != Type::Bool {
                    return Err(FrontendError::Type {
                        line: pos.line,
                        col: pos.col,
                        message: "`!` applied to an integer".into(),
                    });
                }
                Ok(Expr::Unary(UnaryOp::Not, Box::new(operand)))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Expr, FrontendError> {
        match self.peek().clone() {
            Tok::Number(n) => {
                self.bump();
                Ok(Expr::Int(n))
            }
            Tok::Ident(name) => {
                let pos = self.bump().pos;
                self.require_declared(&name, pos)?;
                Ok(Expr::Var(name))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr(1)?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            _ => Err(self.syntax(&["expression"])),
        }
    }
}

fn check_operands(op: BinaryOp, lhs: &Expr, rhs: &Expr, pos: Pos) -> Result<(), FrontendError> {
    let want = match op {
        BinaryOp::And | BinaryOp::Or => Type::Bool,
        _ => Type::Int,
    };
    if lhs.ty() != want || rhs.ty() != want {
        let message = match want {
            Type::Int => format!("operator `{}` needs integer operands", op.symbol()),
            Type::Bool => format!("operator `{}` needs boolean operands", op.symbol()),
        };
        return Err(FrontendError::Type {
            line: pos.line,
            col: pos.col,
            message,
        });
    }
    Ok(())
}
