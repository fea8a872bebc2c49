//! Syntax-directed static single assignment form.
//!
//! Conditionals carry a join vector `joined = phi(first, second)` where
//! `first`/`second` are the versions reaching the end of the then/else
//! branch. Loops carry a header vector `joined = phi(first, second)` placed
//! before the loop: `first` holds the versions on entry, `second` the
//! versions at the end of the body, and `joined` is both the version seen
//! by the condition and body and the version visible after the loop.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::{self, Write};

use crate::frontend::{BinaryOp, Expr, ExprDisplay, ProgramAst, Stmt, UnaryOp};
use crate::interpreter::{eval_with, Fault, RunOutcome, Trace};
use crate::IntWidth;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SsaVar {
    pub name: String,
    pub version: u32,
}

impl SsaVar {
    pub fn new(name: &str, version: u32) -> Self {
        SsaVar {
            name: name.into(),
            version,
        }
    }
}

impl fmt::Display for SsaVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.name.ends_with(|c: char| c.is_ascii_digit()) {
            write!(f, "{}_{}", self.name, self.version)
        } else {
            write!(f, "{}{}", self.name, self.version)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SsaExpr {
    Int(i64),
    Var(SsaVar),
    Unary(UnaryOp, Box<SsaExpr>),
    Binary(BinaryOp, Box<SsaExpr>, Box<SsaExpr>),
}

impl SsaExpr {
    /// Every variable read, left to right, with repetitions.
    pub fn uses<'a>(&'a self, out: &mut Vec<&'a SsaVar>) {
        match self {
            SsaExpr::Int(_) => {}
            SsaExpr::Var(v) => out.push(v),
            SsaExpr::Unary(_, e) => e.uses(out),
            SsaExpr::Binary(_, l, r) => {
                l.uses(out);
                r.uses(out);
            }
        }
    }

    fn as_display_expr(&self) -> Expr {
        match self {
            SsaExpr::Int(n) => Expr::Int(*n),
            SsaExpr::Var(v) => Expr::Var(v.to_string()),
            SsaExpr::Unary(op, e) => Expr::Unary(*op, Box::new(e.as_display_expr())),
            SsaExpr::Binary(op, l, r) => Expr::binary(*op, l.as_display_expr(), r.as_display_expr()),
        }
    }
}

impl fmt::Display for SsaExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", ExprDisplay(&self.as_display_expr()))
    }
}

/// Positionally aligned φ vectors over the same base names.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Phi {
    pub names: Vec<String>,
    pub first: Vec<SsaVar>,
    pub second: Vec<SsaVar>,
    pub joined: Vec<SsaVar>,
}

impl Phi {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SsaStmt {
    Assign {
        target: SsaVar,
        value: SsaExpr,
    },
    If {
        cond: SsaExpr,
        then_body: Vec<SsaStmt>,
        else_body: Vec<SsaStmt>,
        phi: Phi,
    },
    While {
        phi: Phi,
        cond: SsaExpr,
        body: Vec<SsaStmt>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SsaProgram {
    pub name: String,
    /// Parameters, all at version 0.
    pub params: Vec<SsaVar>,
    pub body: Vec<SsaStmt>,
    pub return_expr: SsaExpr,
}

struct Builder {
    next: BTreeMap<String, u32>,
    current: BTreeMap<String, SsaVar>,
    /// Visible names in declaration order.
    order: Vec<String>,
}

impl Builder {
    fn fresh(&mut self, name: &str) -> SsaVar {
        let n = self.next.entry(name.into()).or_insert(0);
        let v = SsaVar::new(name, *n);
        *n += 1;
        v
    }

    fn rename(&self, e: &Expr) -> SsaExpr {
        match e {
            Expr::Int(n) => SsaExpr::Int(*n),
            Expr::Var(v) => SsaExpr::Var(self.current[v].clone()),
            Expr::Unary(op, e) => SsaExpr::Unary(*op, Box::new(self.rename(e))),
            Expr::Binary(op, l, r) => {
                SsaExpr::Binary(*op, Box::new(self.rename(l)), Box::new(self.rename(r)))
            }
        }
    }

    fn block(&mut self, body: &[Stmt]) -> Vec<SsaStmt> {
        let saved_order = self.order.len();
        let out = body.iter().map(|s| self.stmt(s)).collect();
        for name in self.order.drain(saved_order..) {
            self.current.remove(&name);
        }
        out
    }

    fn stmt(&mut self, s: &Stmt) -> SsaStmt {
        match s {
            Stmt::Decl { name, value } | Stmt::Assign { name, value } => {
                let value = self.rename(value);
                if matches!(s, Stmt::Decl { .. }) {
                    self.order.push(name.clone());
                }
                let target = self.fresh(name);
                self.current.insert(name.clone(), target.clone());
                SsaStmt::Assign { target, value }
            }
            Stmt::If {
                cond,
                then_body,
                else_body,
            } => {
                let cond = self.rename(cond);
                let entry = self.current.clone();
                let then_body = self.block(then_body);
                let after_then = core::mem::replace(&mut self.current, entry.clone());
                let else_body = self.block(else_body.as_deref().unwrap_or(&[]));
                let after_else = core::mem::replace(&mut self.current, entry.clone());

                let mut phi = Phi::default();
                for name in self.order.clone() {
                    let (t, e) = (&after_then[&name], &after_else[&name]);
                    if *t != entry[&name] || *e != entry[&name] {
                        let joined = self.fresh(&name);
                        phi.first.push(t.clone());
                        phi.second.push(e.clone());
                        phi.joined.push(joined.clone());
                        phi.names.push(name.clone());
                        self.current.insert(name, joined);
                    }
                }
                SsaStmt::If {
                    cond,
                    then_body,
                    else_body,
                    phi,
                }
            }
            Stmt::While { cond, body } => {
                let mut assigned = BTreeSet::new();
                assigned_names(body, &mut assigned);
                let mut phi = Phi::default();
                for name in self.order.clone() {
                    if assigned.contains(name.as_str()) {
                        let joined = self.fresh(&name);
                        phi.first.push(self.current[&name].clone());
                        phi.joined.push(joined.clone());
                        phi.names.push(name.clone());
                        self.current.insert(name, joined);
                    }
                }
                let cond = self.rename(cond);
                let body = self.block(body);
                for (name, joined) in phi.names.iter().zip(&phi.joined) {
                    let end = self.current.insert(name.clone(), joined.clone());
                    phi.second.push(end.expect("loop-carried name stays visible"));
                }
                SsaStmt::While { phi, cond, body }
            }
        }
    }
}

fn assigned_names<'a>(body: &'a [Stmt], out: &mut BTreeSet<&'a str>) {
    for s in body {
        match s {
            Stmt::Assign { name, .. } => {
                out.insert(name);
            }
            Stmt::Decl { .. } => {}
            Stmt::If {
                then_body,
                else_body,
                ..
            } => {
                assigned_names(then_body, out);
                if let Some(e) = else_body {
                    assigned_names(e, out);
                }
            }
            Stmt::While { body, .. } => assigned_names(body, out),
        }
    }
}

/// Converts a validated AST into SSA form.
pub fn to_ssa(ast: &ProgramAst) -> SsaProgram {
    let mut b = Builder {
        next: BTreeMap::new(),
        current: BTreeMap::new(),
        order: Vec::new(),
    };
    let params: Vec<SsaVar> = ast
        .params
        .iter()
        .map(|p| {
            let v = b.fresh(p);
            b.current.insert(p.clone(), v.clone());
            b.order.push(p.clone());
            v
        })
        .collect();
    let body = ast.body.iter().map(|s| b.stmt(s)).collect();
    let return_expr = b.rename(&ast.return_expr);
    SsaProgram {
        name: ast.name.clone(),
        params,
        body,
        return_expr,
    }
}

/// Human-readable dump with one `phi` line per merged variable.
pub fn pretty_print_ssa(ssa: &SsaProgram) -> String {
    let mut out = String::new();
    let params: Vec<String> = ssa.params.iter().map(|p| p.to_string()).collect();
    let _ = writeln!(out, "int {}({}) {{", ssa.name, params.join(", "));
    write_ssa_block(&mut out, &ssa.body, 1);
    let _ = writeln!(out, "    return {}", ssa.return_expr);
    out.push_str("}\n");
    out
}

fn write_phi(out: &mut String, phi: &Phi, depth: usize) {
    for i in 0..phi.len() {
        pad(out, depth);
        let _ = writeln!(
            out,
            "{} = phi({}, {})",
            phi.joined[i], phi.first[i], phi.second[i]
        );
    }
}

fn pad(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

fn write_ssa_block(out: &mut String, body: &[SsaStmt], depth: usize) {
    for s in body {
        match s {
            SsaStmt::Assign { target, value } => {
                pad(out, depth);
                let _ = writeln!(out, "{target} = {value}");
            }
            SsaStmt::If {
                cond,
                then_body,
                else_body,
                phi,
            } => {
                pad(out, depth);
                let _ = writeln!(out, "if ({cond}) {{");
                write_ssa_block(out, then_body, depth + 1);
                pad(out, depth);
                out.push_str("} else {\n");
                write_ssa_block(out, else_body, depth + 1);
                pad(out, depth);
                out.push_str("}\n");
                write_phi(out, phi, depth);
            }
            SsaStmt::While { phi, cond, body } => {
                write_phi(out, phi, depth);
                pad(out, depth);
                let _ = writeln!(out, "while ({cond}) {{");
                write_ssa_block(out, body, depth + 1);
                pad(out, depth);
                out.push_str("}\n");
            }
        }
    }
}

/// Checks single assignment, def-before-use dominance and φ alignment.
pub fn validate(ssa: &SsaProgram) -> Result<(), String> {
    struct Check {
        defined: BTreeSet<SsaVar>,
    }
    impl Check {
        fn define(&mut self, v: &SsaVar) -> Result<(), String> {
            if !self.defined.insert(v.clone()) {
                return Err(format!("{v} is defined twice"));
            }
            Ok(())
        }
        fn uses(&self, e: &SsaExpr, visible: &BTreeSet<SsaVar>) -> Result<(), String> {
            let mut vs = Vec::new();
            e.uses(&mut vs);
            match vs.into_iter().find(|v| !visible.contains(*v)) {
                Some(v) => Err(format!("{v} is used where its definition does not dominate")),
                None => Ok(()),
            }
        }
        fn aligned(phi: &Phi) -> Result<(), String> {
            let n = phi.names.len();
            if phi.first.len() != n || phi.second.len() != n || phi.joined.len() != n {
                return Err("phi vectors have different lengths".into());
            }
            for i in 0..n {
                let name = &phi.names[i];
                if phi.first[i].name != *name
                    || phi.second[i].name != *name
                    || phi.joined[i].name != *name
                {
                    return Err(format!("phi position {i} mixes base names"));
                }
            }
            Ok(())
        }
        fn block(&mut self, body: &[SsaStmt], visible: &mut BTreeSet<SsaVar>) -> Result<(), String> {
            for s in body {
                match s {
                    SsaStmt::Assign { target, value } => {
                        self.uses(value, visible)?;
                        self.define(target)?;
                        visible.insert(target.clone());
                    }
                    SsaStmt::If {
                        cond,
                        then_body,
                        else_body,
                        phi,
                    } => {
                        self.uses(cond, visible)?;
                        Self::aligned(phi)?;
                        let mut t = visible.clone();
                        self.block(then_body, &mut t)?;
                        let mut e = visible.clone();
                        self.block(else_body, &mut e)?;
                        for i in 0..phi.len() {
                            if !t.contains(&phi.first[i]) || !e.contains(&phi.second[i]) {
                                return Err(format!("phi {} merges an undefined version", phi.joined[i]));
                            }
                            self.define(&phi.joined[i])?;
                            visible.insert(phi.joined[i].clone());
                        }
                    }
                    SsaStmt::While { phi, cond, body } => {
                        Self::aligned(phi)?;
                        for i in 0..phi.len() {
                            if !visible.contains(&phi.first[i]) {
                                return Err(format!("loop entry version {} undefined", phi.first[i]));
                            }
                            self.define(&phi.joined[i])?;
                            visible.insert(phi.joined[i].clone());
                        }
                        self.uses(cond, visible)?;
                        let mut inner = visible.clone();
                        self.block(body, &mut inner)?;
                        if let Some(v) = phi.second.iter().find(|v| !inner.contains(*v)) {
                            return Err(format!("loop back-edge version {v} undefined"));
                        }
                    }
                }
            }
            Ok(())
        }
    }

    let mut c = Check {
        defined: BTreeSet::new(),
    };
    let mut visible = BTreeSet::new();
    for p in &ssa.params {
        if p.version != 0 {
            return Err(format!("parameter {p} is not at version 0"));
        }
        c.define(p)?;
        visible.insert(p.clone());
    }
    c.block(&ssa.body, &mut visible)?;
    c.uses(&ssa.return_expr, &visible)
}

/// Evaluates SSA form with the interpreter's semantics and step accounting.
pub fn eval(ssa: &SsaProgram, inputs: &[i64], width: IntWidth, step_budget: u64) -> RunOutcome {
    enum Stop {
        Fault(Fault),
        Budget,
    }
    struct M<'a> {
        env: BTreeMap<&'a SsaVar, i64>,
        width: IntWidth,
        steps: u64,
        budget: u64,
    }
    impl<'a> M<'a> {
        fn tick(&mut self) -> Result<(), Stop> {
            self.steps += 1;
            if self.steps > self.budget {
                Err(Stop::Budget)
            } else {
                Ok(())
            }
        }
        fn value(&self, e: &SsaExpr) -> Result<crate::interpreter::Value, Stop> {
            eval_with(&e.as_display_expr(), self.width, &|name| {
                *self
                    .env
                    .iter()
                    .find(|(v, _)| v.to_string() == name)
                    .expect("dominance guarantees a value")
                    .1
            })
            .map_err(Stop::Fault)
        }
        fn block(&mut self, body: &'a [SsaStmt]) -> Result<(), Stop> {
            for s in body {
                self.tick()?;
                match s {
                    SsaStmt::Assign { target, value } => {
                        let v = self.value(value)?.int();
                        self.env.insert(target, v);
                    }
                    SsaStmt::If {
                        cond,
                        then_body,
                        else_body,
                        phi,
                    } => {
                        let taken = self.value(cond)?.bool();
                        let (body, from) = if taken {
                            (then_body, &phi.first)
                        } else {
                            (else_body, &phi.second)
                        };
                        self.block(body)?;
                        for (j, f) in phi.joined.iter().zip(from) {
                            let v = self.env[f];
                            self.env.insert(j, v);
                        }
                    }
                    SsaStmt::While { phi, cond, body } => {
                        for (j, f) in phi.joined.iter().zip(&phi.first) {
                            let v = self.env[f];
                            self.env.insert(j, v);
                        }
                        while self.value(cond)?.bool() {
                            self.block(body)?;
                            self.tick()?;
                            for (j, s) in phi.joined.iter().zip(&phi.second) {
                                let v = self.env[s];
                                self.env.insert(j, v);
                            }
                        }
                    }
                }
            }
            Ok(())
        }
    }

    let mut m = M {
        env: ssa.params.iter().zip(inputs.iter().copied()).collect(),
        width,
        steps: 0,
        budget: step_budget,
    };
    let res = m
        .block(&ssa.body)
        .and_then(|()| m.tick())
        .and_then(|()| m.value(&ssa.return_expr));
    match res {
        Ok(v) => {
            let value = v.int();
            RunOutcome::Returned {
                value,
                trace: Trace {
                    entry: ssa
                        .params
                        .iter()
                        .map(|p| p.name.clone())
                        .zip(inputs.iter().copied())
                        .collect(),
                    exit_return: value,
                    steps: m.steps,
                },
            }
        }
        Err(Stop::Budget) => RunOutcome::DivergedAtBudget,
        Err(Stop::Fault(f)) => RunOutcome::Fault(f),
    }
}
