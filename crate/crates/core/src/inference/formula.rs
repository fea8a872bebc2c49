//! Invariant formulas over `orig(p)`, `return` and integer literals.
//!
//! Text syntax, one formula per line:
//!
//! ```text
//! formula := disj ("==>" formula)?
//! disj    := conj ("||" conj)*
//! conj    := unary ("&&" unary)*
//! unary   := "!" unary | "(" formula ")" | term cmp term
//! term    := "orig" "(" ident ")" | "return" | "-"? integer
//! cmp     := "==" | "!=" | "<" | "<=" | ">" | ">="
//! ```

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::interpreter::Trace;
use crate::solver::CmpOp;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum InvTerm {
    Return,
    Orig(String),
    Int(i64),
}

impl fmt::Display for InvTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InvTerm::Return => f.write_str("return"),
            InvTerm::Orig(p) => write!(f, "orig({p})"),
            InvTerm::Int(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Cmp(InvTerm, CmpOp, InvTerm),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormulaError {
    #[error("column {col}: {msg}")]
    Parse { col: usize, msg: String },
    #[error("unknown term `{0}`")]
    UnknownTerm(String),
}

impl Formula {
    pub fn cmp(a: InvTerm, op: CmpOp, b: InvTerm) -> Formula {
        Formula::Cmp(a, op, b)
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    /// Every term, left to right.
    pub fn terms(&self) -> Vec<&InvTerm> {
        let mut out = Vec::new();
        self.collect_terms(&mut out);
        out
    }

    fn collect_terms<'a>(&'a self, out: &mut Vec<&'a InvTerm>) {
        match self {
            Formula::Cmp(a, _, b) => {
                out.push(a);
                out.push(b);
            }
            Formula::Not(x) => x.collect_terms(out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.collect_terms(out);
                b.collect_terms(out);
            }
        }
    }

    /// Fails on the first `orig(p)` naming something outside `params`.
    pub fn check_terms(&self, params: &[String]) -> Result<(), FormulaError> {
        for t in self.terms() {
            if let InvTerm::Orig(p) = t {
                if !params.contains(p) {
                    return Err(FormulaError::UnknownTerm(t.to_string()));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, value: &dyn Fn(&InvTerm) -> Option<i64>) -> Result<bool, FormulaError> {
        Ok(match self {
            Formula::Cmp(a, op, b) => {
                let get = |t: &InvTerm| value(t).ok_or_else(|| FormulaError::UnknownTerm(t.to_string()));
                op.eval(get(a)?, get(b)?)
            }
            Formula::Not(x) => !x.eval(value)?,
            Formula::And(a, b) => {
                let (a, b) = (a.eval(value)?, b.eval(value)?);
                a && b
            }
            Formula::Or(a, b) => {
                let (a, b) = (a.eval(value)?, b.eval(value)?);
                a || b
            }
            Formula::Implies(a, b) => {
                let (a, b) = (a.eval(value)?, b.eval(value)?);
                !a || b
            }
        })
    }

    fn prec(&self) -> u8 {
        match self {
            Formula::Implies(..) => 0,
            Formula::Or(..) => 1,
            Formula::And(..) => 2,
            Formula::Not(_) | Formula::Cmp(..) => 3,
        }
    }
}

/// Truth of `f` on a recorded run.
pub fn evaluate_invariant(f: &Formula, trace: &Trace) -> Result<bool, FormulaError> {
    f.eval(&|t| match t {
        InvTerm::Return => Some(trace.exit_return),
        InvTerm::Orig(p) => trace.orig(p),
        InvTerm::Int(n) => Some(*n),
    })
}

fn cmp_text(op: CmpOp) -> &'static str {
    match op {
        CmpOp::Eq => "==",
        CmpOp::Ne => "!=",
        CmpOp::Lt => "<",
        CmpOp::Le => "<=",
        CmpOp::Gt => ">",
        CmpOp::Ge => ">=",
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let child = |f: &mut fmt::Formatter<'_>, c: &Formula, min: u8| {
            if c.prec() < min {
                write!(f, "({c})")
            } else {
                write!(f, "{c}")
            }
        };
        match self {
            Formula::Cmp(a, op, b) => write!(f, "{a} {} {b}", cmp_text(*op)),
            Formula::Not(x) => {
                f.write_str("!")?;
                // `!` binds tighter than a comparison
                if matches!(**x, Formula::Not(_)) {
                    write!(f, "{x}")
                } else {
                    write!(f, "({x})")
                }
            }
            Formula::And(a, b) => {
                child(f, a, 2)?;
                f.write_str(" && ")?;
                child(f, b, 3)
            }
            Formula::Or(a, b) => {
                child(f, a, 1)?;
                f.write_str(" || ")?;
                child(f, b, 2)
            }
            Formula::Implies(a, b) => {
                child(f, a, 1)?;
                f.write_str(" ==> ")?;
                child(f, b, 0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Int(i64),
    Ident(String),
    Op(&'static str),
}

fn lex(s: &str) -> Result<Vec<(usize, Tok)>, FormulaError> {
    const OPS: [&str; 14] = [
        "==>", "==", "!=", "<=", ">=", "&&", "||", "<", ">", "!", "(", ")", "-", ",",
    ];
    let b = s.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    while i < b.len() {
        let c = b[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            let n = s[start..i].parse().map_err(|_| FormulaError::Parse {
                col: start + 1,
                msg: "integer literal too large".into(),
            })?;
            out.push((start + 1, Tok::Int(n)));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            out.push((start + 1, Tok::Ident(s[start..i].into())));
        } else if let Some(op) = OPS.iter().find(|op| s[i..].starts_with(**op)) {
            out.push((i + 1, Tok::Op(op)));
            i += op.len();
        } else {
            return Err(FormulaError::Parse {
                col: i + 1,
                msg: alloc::format!("unexpected character `{}`", s[i..].chars().next().unwrap()),
            });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.0)
    }

    fn err<T>(&self, msg: &str) -> Result<T, FormulaError> {
        Err(FormulaError::Parse {
            col: self.col(),
            msg: msg.into(),
        })
    }

    fn eat(&mut self, op: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Op(o)) if *o == op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: &str) -> Result<(), FormulaError> {
        if self.eat(op) {
            Ok(())
        } else {
            self.err(&alloc::format!("expected `{op}`"))
        }
    }

    fn formula(&mut self) -> Result<Formula, FormulaError> {
        let lhs = self.disj()?;
        if self.eat("==>") {
            let rhs = self.formula()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disj(&mut self) -> Result<Formula, FormulaError> {
        let mut f = self.conj()?;
        while self.eat("||") {
            f = Formula::Or(Box::new(f), Box::new(self.conj()?));
        }
        Ok(f)
    }

    fn conj(&mut self) -> Result<Formula, FormulaError> {
        let mut f = self.unary()?;
        while self.eat("&&") {
            f = Formula::And(Box::new(f), Box::new(self.unary()?));
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula, FormulaError> {
        if self.eat("!") {
            return Ok(Formula::Not(Box::new(self.unary()?)));
        }
        if self.eat("(") {
            let f = self.formula()?;
            self.expect(")")?;
            return Ok(f);
        }
        let a = self.term()?;
        let op = match self.peek() {
            Some(Tok::Op("==")) => CmpOp::Eq,
            Some(Tok::Op("!=")) => CmpOp::Ne,
            Some(Tok::Op("<")) => CmpOp::Lt,
            Some(Tok::Op("<=")) => CmpOp::Le,
            Some(Tok::Op(">")) => CmpOp::Gt,
            Some(Tok::Op(">=")) => CmpOp::Ge,
            _ => return self.err("expected a comparison operator"),
        };
        self.pos += 1;
        let b = self.term()?;
        Ok(Formula::Cmp(a, op, b))
    }

    fn term(&mut self) -> Result<InvTerm, FormulaError> {
        let neg = self.eat("-");
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                Ok(InvTerm::Int(if neg { -n } else { n }))
            }
            _ if neg => self.err("expected an integer after `-`"),
            Some(Tok::Ident(id)) if id == "return" => {
                self.pos += 1;
                Ok(InvTerm::Return)
            }
            Some(Tok::Ident(id)) if id == "orig" => {
                self.pos += 1;
                self.expect("(")?;
                let Some(Tok::Ident(p)) = self.peek().cloned() else {
                    return self.err("expected a parameter name");
                };
                self.pos += 1;
                self.expect(")")?;
                Ok(InvTerm::Orig(p))
            }
            Some(Tok::Ident(id)) => Err(FormulaError::UnknownTerm(id)),
            _ => self.err("expected `orig(..)`, `return` or an integer"),
        }
    }
}

pub fn parse_formula(s: &str) -> Result<Formula, FormulaError> {
    let toks = lex(s)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: s.len() + 1,
    };
    let f = p.formula()?;
    if p.pos != p.toks.len() {
        return p.err("unexpected trailing input");
    }
    Ok(f)
}

/// Parses one formula per non-blank line; `#` starts a comment.
pub fn parse_formulas(text: &str) -> Vec<Result<Formula, FormulaError>> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(parse_formula)
        .collect()
}
