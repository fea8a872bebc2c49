//! Translation of SSA programs into constraint networks.
//!
//! Straight-line assignments become arithmetic constraints, conditionals
//! become `ite` and loops become `w`. Each top-level SSA version owns one
//! solver variable; branch and loop-body versions are created when the
//! combinator posts the corresponding goal.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::combinators::{post_ite, post_w, LoopTemplate};
use crate::frontend::{BinaryOp, Expr, ExprDisplay, Type, UnaryOp};
use crate::solver::{ArithOp, CmpOp, Constraint, Goal, Status, Store, Term, VarId};
use crate::ssa::{Phi, SsaExpr, SsaProgram, SsaStmt, SsaVar};
use crate::IntWidth;

/// Key of the output variable in `var_index`; `return` is a keyword, so no
/// program variable can collide with it.
pub const RETURN_KEY: &str = "return";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompileError {
    #[error("unsupported construct: {0}")]
    UnsupportedConstruct(String),
    #[error("solution graphs are limited to widths of at most 6 bits, got {0}")]
    WidthTooLarge(u32),
}

/// The relation `prog(In, Out)` as a constraint network.
pub struct CompiledProgram {
    pub store: Store,
    /// Parameters at version 0, in declaration order.
    pub inputs: Vec<VarId>,
    pub output: VarId,
    pub var_index: BTreeMap<SsaVar, VarId>,
    pub width: IntWidth,
}

impl CompiledProgram {
    pub fn var(&self, name: &str, version: u32) -> Option<VarId> {
        self.var_index.get(&SsaVar::new(name, version)).copied()
    }
}

type Env = BTreeMap<SsaVar, VarId>;

fn origin(v: &SsaVar) -> String {
    let s = v.to_string();
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => s,
    }
}

fn lookup(store: &mut Store, env: &Env, v: &SsaVar) -> VarId {
    match env.get(v) {
        Some(&id) => id,
        // unreachable for validated SSA; an unconstrained variable keeps the
        // network well formed
        None => store.new_var(Some(&origin(v))),
    }
}

fn arith_op(op: BinaryOp) -> ArithOp {
    match op {
        BinaryOp::Add => ArithOp::Add,
        BinaryOp::Sub => ArithOp::Sub,
        BinaryOp::Mul => ArithOp::Mul,
        BinaryOp::Div => ArithOp::Div,
        BinaryOp::Rem => ArithOp::Rem,
        _ => unreachable!("not arithmetic"),
    }
}

fn cmp_op(op: BinaryOp) -> CmpOp {
    match op {
        BinaryOp::Eq => CmpOp::Eq,
        BinaryOp::Ne => CmpOp::Ne,
        BinaryOp::Lt => CmpOp::Lt,
        BinaryOp::Le => CmpOp::Le,
        BinaryOp::Gt => CmpOp::Gt,
        BinaryOp::Ge => CmpOp::Ge,
        _ => unreachable!("not a comparison"),
    }
}

/// Integer expression as a term, defining auxiliaries for compound parts.
fn term(store: &mut Store, env: &Env, e: &SsaExpr) -> Term {
    match e {
        SsaExpr::Int(n) => {
            if !store.width().contains(*n) {
                store.post(Constraint::False);
            }
            Term::Const(*n)
        }
        SsaExpr::Var(v) => Term::Var(lookup(store, env, v)),
        _ => {
            let t = store.new_var(None);
            define(store, env, t, e);
            Term::Var(t)
        }
    }
}

/// Posts `target = e`.
fn define(store: &mut Store, env: &Env, target: VarId, e: &SsaExpr) {
    match e {
        SsaExpr::Binary(op, l, r) if op.is_arithmetic() => {
            let (l, r) = (term(store, env, l), term(store, env, r));
            store.post(Constraint::arith(target, arith_op(*op), l, r));
        }
        SsaExpr::Unary(UnaryOp::Neg, x) => {
            let x = term(store, env, x);
            store.post(Constraint::arith(target, ArithOp::Sub, 0, x));
        }
        e => {
            let t = term(store, env, e);
            store.post(Constraint::eq(target, t));
        }
    }
}

/// Boolean expression as a constraint tree. Both operands of `&&` and `||`
/// are evaluated, so their auxiliaries are posted unconditionally.
fn condition(store: &mut Store, env: &Env, e: &SsaExpr) -> Constraint {
    match e {
        SsaExpr::Unary(UnaryOp::Not, x) => condition(store, env, x).negate(),
        SsaExpr::Binary(BinaryOp::And, l, r) => {
            let (l, r) = (condition(store, env, l), condition(store, env, r));
            Constraint::and([l, r])
        }
        SsaExpr::Binary(BinaryOp::Or, l, r) => {
            let (l, r) = (condition(store, env, l), condition(store, env, r));
            Constraint::or([l, r])
        }
        SsaExpr::Binary(op, l, r) if op.is_comparison() => {
            let (l, r) = (term(store, env, l), term(store, env, r));
            Constraint::cmp(l, cmp_op(*op), r)
        }
        _ => unreachable!("checked before compilation"),
    }
}

fn expr_type(e: &SsaExpr) -> Type {
    match e {
        SsaExpr::Int(_) | SsaExpr::Var(_) | SsaExpr::Unary(UnaryOp::Neg, _) => Type::Int,
        SsaExpr::Unary(UnaryOp::Not, _) => Type::Bool,
        SsaExpr::Binary(op, _, _) => op.result_type(),
    }
}

fn check_expr(e: &SsaExpr, want: Type) -> Result<(), CompileError> {
    let ok = expr_type(e) == want
        && match e {
            SsaExpr::Int(_) | SsaExpr::Var(_) => true,
            SsaExpr::Unary(UnaryOp::Neg, x) => check_expr(x, Type::Int).is_ok(),
            SsaExpr::Unary(UnaryOp::Not, x) => check_expr(x, Type::Bool).is_ok(),
            SsaExpr::Binary(op, l, r) => {
                let operand = if op.is_comparison() || op.is_arithmetic() {
                    Type::Int
                } else {
                    Type::Bool
                };
                check_expr(l, operand).is_ok() && check_expr(r, operand).is_ok()
            }
        };
    if ok {
        Ok(())
    } else {
        Err(CompileError::UnsupportedConstruct(e.to_string()))
    }
}

fn check_block(body: &[SsaStmt]) -> Result<(), CompileError> {
    for s in body {
        match s {
            SsaStmt::Assign { value, .. } => check_expr(value, Type::Int)?,
            SsaStmt::If {
                cond,
                then_body,
                else_body,
                ..
            } => {
                check_expr(cond, Type::Bool)?;
                check_block(then_body)?;
                check_block(else_body)?;
            }
            SsaStmt::While { cond, body, .. } => {
                check_expr(cond, Type::Bool)?;
                check_block(body)?;
            }
        }
    }
    Ok(())
}

/// Variables of `env` read anywhere in `body` or `extra`.
fn reads(env: &Env, body: &[SsaStmt], extra: &[&SsaExpr]) -> Vec<VarId> {
    fn block<'a>(body: &'a [SsaStmt], out: &mut Vec<&'a SsaVar>) {
        for s in body {
            match s {
                SsaStmt::Assign { value, .. } => value.uses(out),
                SsaStmt::If {
                    cond,
                    then_body,
                    else_body,
                    phi,
                } => {
                    cond.uses(out);
                    block(then_body, out);
                    block(else_body, out);
                    out.extend(phi.first.iter().chain(&phi.second));
                }
                SsaStmt::While { phi, cond, body } => {
                    out.extend(&phi.first);
                    cond.uses(out);
                    block(body, out);
                }
            }
        }
    }
    let mut used = Vec::new();
    block(body, &mut used);
    for e in extra {
        e.uses(&mut used);
    }
    let set: BTreeSet<VarId> = used.into_iter().filter_map(|v| env.get(v).copied()).collect();
    set.into_iter().collect()
}

struct Ctx {
    unfold_budget: u64,
}

fn compile_block(store: &mut Store, env: &mut Env, body: &[SsaStmt], ctx: &Arc<Ctx>) {
    for s in body {
        match s {
            SsaStmt::Assign { target, value } => {
                let t = match env.get(target) {
                    Some(&t) => t,
                    None => {
                        let t = store.new_var(Some(&origin(target)));
                        env.insert(target.clone(), t);
                        t
                    }
                };
                define(store, env, t, value);
            }
            SsaStmt::If {
                cond,
                then_body,
                else_body,
                phi,
            } => compile_if(store, env, cond, then_body, else_body, phi, ctx),
            SsaStmt::While { phi, cond, body } => compile_while(store, env, phi, cond, body, ctx),
        }
    }
}

fn existing_or_fresh(store: &mut Store, env: &mut Env, v: &SsaVar) -> VarId {
    match env.get(v) {
        Some(&id) => id,
        None => {
            let id = store.new_var(Some(&origin(v)));
            env.insert(v.clone(), id);
            id
        }
    }
}

fn branch_goal(env: Env, body: &[SsaStmt], ctx: &Arc<Ctx>) -> Goal {
    let body: Arc<[SsaStmt]> = body.into();
    let ctx = ctx.clone();
    Arc::new(move |s: &mut Store| {
        let mut env = env.clone();
        compile_block(s, &mut env, &body, &ctx);
    })
}

fn compile_if(
    store: &mut Store,
    env: &mut Env,
    cond: &SsaExpr,
    then_body: &[SsaStmt],
    else_body: &[SsaStmt],
    phi: &Phi,
    ctx: &Arc<Ctx>,
) {
    let c = condition(store, env, cond);
    let read = reads(env, then_body, &[]).into_iter().chain(reads(env, else_body, &[])).collect::<Vec<_>>();
    let mut then_env = env.clone();
    let v0: Vec<VarId> = phi.first.iter().map(|v| existing_or_fresh(store, &mut then_env, v)).collect();
    let mut else_env = env.clone();
    let v1: Vec<VarId> = phi.second.iter().map(|v| existing_or_fresh(store, &mut else_env, v)).collect();
    let v2: Vec<VarId> = phi.joined.iter().map(|v| existing_or_fresh(store, env, v)).collect();
    let then_goal = branch_goal(then_env, then_body, ctx);
    let else_goal = branch_goal(else_env, else_body, ctx);
    post_ite(store, c, &v0, &v1, &v2, then_goal, else_goal, &read);
}

/// A loop body instantiated by rebinding its header versions.
struct SsaLoop {
    names: Vec<String>,
    outer: Env,
    joined: Vec<SsaVar>,
    second: Vec<SsaVar>,
    cond: SsaExpr,
    body: Vec<SsaStmt>,
    reads: Vec<VarId>,
    ctx: Arc<Ctx>,
}

impl SsaLoop {
    fn env(&self, current: &[VarId]) -> Env {
        let mut env = self.outer.clone();
        for (v, &id) in self.joined.iter().zip(current) {
            env.insert(v.clone(), id);
        }
        env
    }
}

impl LoopTemplate for SsaLoop {
    fn names(&self) -> &[String] {
        &self.names
    }

    fn cond(&self, store: &mut Store, current: &[VarId]) -> Constraint {
        condition(store, &self.env(current), &self.cond)
    }

    fn body(&self, store: &mut Store, current: &[VarId], next: &[VarId]) {
        let mut env = self.env(current);
        for (v, &id) in self.second.iter().zip(next) {
            env.insert(v.clone(), id);
        }
        compile_block(store, &mut env, &self.body, &self.ctx);
    }

    fn reads(&self) -> Vec<VarId> {
        self.reads.clone()
    }
}

fn compile_while(
    store: &mut Store,
    env: &mut Env,
    phi: &Phi,
    cond: &SsaExpr,
    body: &[SsaStmt],
    ctx: &Arc<Ctx>,
) {
    let v0: Vec<VarId> = phi.first.iter().map(|v| lookup(store, env, v)).collect();
    let v1: Vec<VarId> = phi
        .names
        .iter()
        .map(|n| store.new_var(Some(&alloc::format!("{n}'"))))
        .collect();
    let outer = env.clone();
    let tmpl = SsaLoop {
        names: phi.names.clone(),
        reads: reads(&outer, body, &[cond]),
        outer,
        joined: phi.joined.clone(),
        second: phi.second.clone(),
        cond: cond.clone(),
        body: body.to_vec(),
        ctx: ctx.clone(),
    };
    let v2: Vec<VarId> = phi.joined.iter().map(|v| existing_or_fresh(store, env, v)).collect();
    post_w(store, Arc::new(tmpl), v0, v1, v2, ctx.unfold_budget);
}

/// Builds the network for `ssa`. Nothing is propagated yet.
pub fn compile(ssa: &SsaProgram, width: IntWidth, unfold_budget: u64) -> Result<CompiledProgram, CompileError> {
    check_block(&ssa.body)?;
    check_expr(&ssa.return_expr, Type::Int)?;
    let mut store = Store::new(width);
    let mut env = Env::new();
    let inputs: Vec<VarId> = ssa
        .params
        .iter()
        .map(|p| {
            let id = store.new_var(Some(&origin(p)));
            env.insert(p.clone(), id);
            id
        })
        .collect();
    let ctx = Arc::new(Ctx { unfold_budget });
    compile_block(&mut store, &mut env, &ssa.body, &ctx);
    let output = store.new_var(Some("RET"));
    define(&mut store, &env, output, &ssa.return_expr);
    env.insert(SsaVar::new(RETURN_KEY, 0), output);
    Ok(CompiledProgram {
        store,
        inputs,
        output,
        var_index: env,
        width,
    })
}

/// All `(inputs, output)` pairs found by exhaustive labeling. Leaves that
/// hit the unfold budget are left out.
pub fn solution_graph(ssa: &SsaProgram, width: IntWidth) -> Result<BTreeSet<(Vec<i64>, i64)>, CompileError> {
    if width.bits() > 6 {
        return Err(CompileError::WidthTooLarge(width.bits()));
    }
    let mut prog = compile(ssa, width, width.default_unfold_budget())?;
    let mut out = BTreeSet::new();
    if prog.store.propagate() != Ok(Status::Fixpoint) {
        return Ok(out);
    }
    let mut vars = prog.inputs.clone();
    vars.push(prog.output);
    let n = prog.inputs.len();
    prog.store
        .label_each(&vars, u64::MAX, &mut |s, vals| {
            if !s.is_tainted() {
                out.insert((vals[..n].to_vec(), vals[n]));
            }
            false
        })
        .expect("no propagation budget or deadline set");
    Ok(out)
}

/// Readable listing of the network in clause form.
pub fn emit_clp(ssa: &SsaProgram) -> String {
    let upper = |v: &SsaVar| origin(v);
    let vec = |vs: &[SsaVar]| {
        let items: Vec<String> = vs.iter().map(upper).collect();
        alloc::format!("[{}]", items.join(","))
    };
    let params: Vec<String> = ssa.params.iter().map(upper).collect();
    let mut out = String::new();
    let _ = writeln!(out, "{}([{}],[RET]) :-", ssa.name, params.join(","));
    let mut items: Vec<String> = ssa.body.iter().map(|s| clp_stmt(s, true, 1, &vec)).collect();
    items.push(alloc::format!("    RET = {}", display(&ssa.return_expr, true)));
    out.push_str(&items.join(",\n"));
    out.push_str(".\n");
    out
}

fn display(e: &SsaExpr, versioned: bool) -> String {
    fn conv(e: &SsaExpr, versioned: bool) -> Expr {
        match e {
            SsaExpr::Int(n) => Expr::Int(*n),
            SsaExpr::Var(v) if versioned => Expr::Var(origin(v)),
            SsaExpr::Var(v) => Expr::Var(v.name.clone()),
            SsaExpr::Unary(op, x) => Expr::Unary(*op, alloc::boxed::Box::new(conv(x, versioned))),
            SsaExpr::Binary(op, l, r) => Expr::binary(*op, conv(l, versioned), conv(r, versioned)),
        }
    }
    ExprDisplay(&conv(e, versioned)).to_string()
}

fn clp_list(body: &[SsaStmt], depth: usize, vec: &dyn Fn(&[SsaVar]) -> String) -> String {
    let pad = "    ".repeat(depth);
    let items: Vec<String> = body
        .iter()
        .map(|s| clp_stmt(s, false, depth, vec)[pad.len()..].to_string())
        .collect();
    alloc::format!("{pad}[{}]", items.join(&alloc::format!(",\n{pad} ")))
}

fn clp_stmt(s: &SsaStmt, top: bool, depth: usize, vec: &dyn Fn(&[SsaVar]) -> String) -> String {
    let pad = "    ".repeat(depth);
    match s {
        SsaStmt::Assign { target, value } => {
            let t = if top { origin(target) } else { target.name.clone() };
            alloc::format!("{pad}{t} = {}", display(value, top))
        }
        SsaStmt::If {
            cond,
            then_body,
            else_body,
            phi,
        } => alloc::format!(
            "{pad}ite({}, {}, {}, {},\n{},\n{})",
            display(cond, false),
            vec(&phi.first),
            vec(&phi.second),
            vec(&phi.joined),
            clp_list(then_body, depth + 1, vec),
            clp_list(else_body, depth + 1, vec),
        ),
        SsaStmt::While { phi, cond, body } => alloc::format!(
            "{pad}w({}, {}, {}, {},\n{})",
            display(cond, false),
            vec(&phi.first),
            vec(&phi.second),
            vec(&phi.joined),
            clp_list(body, depth + 1, vec),
        ),
    }
}
