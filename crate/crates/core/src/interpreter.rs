//! Big-step interpreter over [`ProgramAst`]: the ground truth every other
//! stage is checked against.
//!
//! Arithmetic is over mathematical integers; any value (literal or
//! intermediate) outside the configured width is an overflow fault rather
//! than a wraparound, mirroring how the constraint network clips every
//! variable to its type's range.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::frontend::{BinaryOp, Expr, ProgramAst, Stmt, UnaryOp};
use crate::IntWidth;

pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Fault {
    Overflow,
    DivisionByZero,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    /// Parameter values at entry (`orig(p)`), in parameter order.
    pub entry: Vec<(String, i64)>,
    pub exit_return: i64,
    /// Executed statements plus evaluated loop conditions.
    pub steps: u64,
}

impl Trace {
    pub fn orig(&self, param: &str) -> Option<i64> {
        self.entry.iter().find(|(p, _)| p == param).map(|&(_, v)| v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunOutcome {
    Returned { value: i64, trace: Trace },
    DivergedAtBudget,
    Fault(Fault),
}

impl RunOutcome {
    pub fn returned(&self) -> Option<i64> {
        match self {
            RunOutcome::Returned { value, .. } => Some(*value),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RunError {
    #[error("expected {expected} inputs, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("input {value} for `{param}` is outside the {width}-bit range")]
    OutOfRange {
        param: String,
        value: i64,
        width: IntWidth,
    },
}

/// Truncating integer arithmetic with range checks.
pub fn apply_arith(op: BinaryOp, a: i64, b: i64, width: IntWidth) -> Result<i64, Fault> {
    let v = match op {
        BinaryOp::Add => a.checked_add(b),
        BinaryOp::Sub => a.checked_sub(b),
        BinaryOp::Mul => a.checked_mul(b),
        BinaryOp::Div => {
            if b == 0 {
                return Err(Fault::DivisionByZero);
            }
            a.checked_div(b)
        }
        BinaryOp::Rem => {
            if b == 0 {
                return Err(Fault::DivisionByZero);
            }
            // sign follows the dividend; MIN % -1 is 0
            Some(a.checked_rem(b).unwrap_or(0))
        }
        _ => unreachable!("{op:?} is not arithmetic"),
    };
    match v {
        Some(v) if width.contains(v) => Ok(v),
        _ => Err(Fault::Overflow),
    }
}

pub fn apply_comparison(op: BinaryOp, a: i64, b: i64) -> bool {
    match op {
        BinaryOp::Eq => a == b,
        BinaryOp::Ne => a != b,
        BinaryOp::Lt => a < b,
        BinaryOp::Le => a <= b,
        BinaryOp::Gt => a > b,
        BinaryOp::Ge => a >= b,
        _ => unreachable!("{op:?} is not a comparison"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Value {
    Int(i64),
    Bool(bool),
}

impl Value {
    pub(crate) fn int(self) -> i64 {
        match self {
            Value::Int(v) => v,
            Value::Bool(_) => unreachable!("type checker admitted a boolean where an int is required"),
        }
    }

    pub(crate) fn bool(self) -> bool {
        match self {
            Value::Bool(b) => b,
            Value::Int(_) => unreachable!("type checker admitted an int where a boolean is required"),
        }
    }
}

/// Strict expression evaluation shared with the SSA evaluator: both operands
/// of `&&` and `||` are evaluated.
pub(crate) fn eval_with<V>(expr: &Expr, width: IntWidth, lookup: &V) -> Result<Value, Fault>
where
    V: Fn(&str) -> i64,
{
    Ok(match expr {
        Expr::Int(n) => {
            if !width.contains(*n) {
                return Err(Fault::Overflow);
            }
            Value::Int(*n)
        }
        Expr::Var(name) => Value::Int(lookup(name)),
        Expr::Unary(UnaryOp::Neg, e) => {
            let v = eval_with(e, width, lookup)?.int();
            apply_arith(BinaryOp::Sub, 0, v, width).map(Value::Int)?
        }
        Expr::Unary(UnaryOp::Not, e) => Value::Bool(!eval_with(e, width, lookup)?.bool()),
        Expr::Binary(op, l, r) => {
            let l = eval_with(l, width, lookup)?;
            let r = eval_with(r, width, lookup)?;
            match op {
                BinaryOp::And => Value::Bool(l.bool() & r.bool()),
                BinaryOp::Or => Value::Bool(l.bool() | r.bool()),
                op if op.is_comparison() => Value::Bool(apply_comparison(*op, l.int(), r.int())),
                op => Value::Int(apply_arith(*op, l.int(), r.int(), width)?),
            }
        }
    })
}

enum Stop {
    Fault(Fault),
    Budget,
}

struct Machine {
    env: BTreeMap<String, i64>,
    width: IntWidth,
    steps: u64,
    budget: u64,
}

impl Machine {
    fn tick(&mut self) -> Result<(), Stop> {
        self.steps += 1;
        if self.steps > self.budget {
            Err(Stop::Budget)
        } else {
            Ok(())
        }
    }

    fn eval(&self, e: &Expr) -> Result<Value, Stop> {
        eval_with(e, self.width, &|name| self.env[name]).map_err(Stop::Fault)
    }

    fn exec_block(&mut self, body: &[Stmt]) -> Result<(), Stop> {
        body.iter().try_for_each(|s| self.exec(s))
    }

    fn exec(&mut self, stmt: &Stmt) -> Result<(), Stop> {
        self.tick()?;
        match stmt {
            Stmt::Decl { name, value } | Stmt::Assign { name, value } => {
                let v = self.eval(value)?.int();
                self.env.insert(name.clone(), v);
            }
            Stmt::If {
                cond,
                then_body,
                else_body,
            } => {
                if self.eval(cond)?.bool() {
                    self.exec_block(then_body)?;
                } else if let Some(e) = else_body {
                    self.exec_block(e)?;
                }
            }
            Stmt::While { cond, body } => {
                while self.eval(cond)?.bool() {
                    self.exec_block(body)?;
                    self.tick()?;
                }
            }
        }
        Ok(())
    }
}

/// Runs `ast` on `inputs` (one per parameter).
pub fn run(
    ast: &ProgramAst,
    inputs: &[i64],
    width: IntWidth,
    step_budget: u64,
) -> Result<RunOutcome, RunError> {
    if inputs.len() != ast.params.len() {
        return Err(RunError::Arity {
            expected: ast.params.len(),
            got: inputs.len(),
        });
    }
    for (p, &v) in ast.params.iter().zip(inputs) {
        if !width.contains(v) {
            return Err(RunError::OutOfRange {
                param: p.clone(),
                value: v,
                width,
            });
        }
    }
    let entry: Vec<(String, i64)> = ast.params.iter().cloned().zip(inputs.iter().copied()).collect();
    let mut m = Machine {
        env: entry.iter().cloned().collect(),
        width,
        steps: 0,
        budget: step_budget,
    };
    let result = m
        .exec_block(&ast.body)
        .and_then(|()| m.tick())
        .and_then(|()| m.eval(&ast.return_expr));
    Ok(match result {
        Ok(v) => {
            let value = v.int();
            RunOutcome::Returned {
                value,
                trace: Trace {
                    entry,
                    exit_return: value,
                    steps: m.steps,
                },
            }
        }
        Err(Stop::Budget) => RunOutcome::DivergedAtBudget,
        Err(Stop::Fault(f)) => RunOutcome::Fault(f),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Excluded {
    Outcome(RunOutcome),
    Invalid(RunError),
}

/// Traces of the terminating runs plus the suite indices that were left out.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SuiteRun {
    pub traces: Vec<Trace>,
    pub excluded: Vec<(usize, Excluded)>,
}

pub fn run_suite(
    ast: &ProgramAst,
    suite: &[Vec<i64>],
    width: IntWidth,
    step_budget: u64,
) -> SuiteRun {
    let mut out = SuiteRun::default();
    for (i, inputs) in suite.iter().enumerate() {
        match run(ast, inputs, width, step_budget) {
            Ok(RunOutcome::Returned { trace, .. }) => out.traces.push(trace),
            Ok(other) => out.excluded.push((i, Excluded::Outcome(other))),
            Err(e) => out.excluded.push((i, Excluded::Invalid(e))),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_program;
    use alloc::vec;

    const FOO: &str = "int foo(int n, int r) { int s = 0; while (n > 0) { n--; if (s == 0) { s = 1; r++; } else { s = 0; r--; } } return r; }";

    fn foo() -> ProgramAst {
        parse_program(FOO).unwrap()
    }

    fn ret(ast: &ProgramAst, inputs: &[i64]) -> RunOutcome {
        run(ast, inputs, IntWidth::W8, DEFAULT_STEP_BUDGET).unwrap()
    }

    #[test]
    fn foo_examples() {
        let ast = foo();
        assert_eq!(ret(&ast, &[5, 3]).returned(), Some(4));
        assert_eq!(ret(&ast, &[1, 0]).returned(), Some(1));
        assert_eq!(ret(&ast, &[1, -1]).returned(), Some(0));
        assert_eq!(ret(&ast, &[0, 9]).returned(), Some(9));
    }

    #[test]
    fn trace_records_entry_values() {
        let ast = foo();
        let RunOutcome::Returned { trace, .. } = ret(&ast, &[2, 7]) else {
            panic!()
        };
        assert_eq!(trace.entry, vec![("n".into(), 2), ("r".into(), 7)]);
        assert_eq!(trace.orig("r"), Some(7));
        assert_eq!(trace.exit_return, 7);
        // decl, while, 2 iterations of (n--, if, branch x2, cond), return
        assert_eq!(trace.steps, 1 + 1 + 2 * (1 + 1 + 2 + 1) + 1);
    }

    #[test]
    fn faults() {
        let ovf = parse_program("int f(int x){ return x + 1; }").unwrap();
        assert_eq!(ret(&ovf, &[127]), RunOutcome::Fault(Fault::Overflow));
        let neg = parse_program("int f(int x){ return -x; }").unwrap();
        assert_eq!(ret(&neg, &[-128]), RunOutcome::Fault(Fault::Overflow));
        let div = parse_program("int f(int x, int y){ return x / y; }").unwrap();
        assert_eq!(ret(&div, &[3, 0]), RunOutcome::Fault(Fault::DivisionByZero));
        assert_eq!(ret(&div, &[-128, -1]), RunOutcome::Fault(Fault::Overflow));
        assert_eq!(ret(&div, &[-7, 2]).returned(), Some(-3));
        let rem = parse_program("int f(int x, int y){ return x % y; }").unwrap();
        assert_eq!(ret(&rem, &[-7, 2]).returned(), Some(-1));
        assert_eq!(ret(&rem, &[7, -2]).returned(), Some(1));
        assert_eq!(ret(&rem, &[-128, -1]).returned(), Some(0));
        let lit = parse_program("int f(int x){ return 200 - 100; }").unwrap();
        assert_eq!(ret(&lit, &[0]), RunOutcome::Fault(Fault::Overflow));
    }

    #[test]
    fn strict_connectives() {
        let ast = parse_program("int f(int x, int y){ int r = 0; if (y != 0 && x / y > 1) { r = 1; } return r; }")
            .unwrap();
        assert_eq!(ret(&ast, &[4, 2]).returned(), Some(1));
        assert_eq!(ret(&ast, &[4, 0]), RunOutcome::Fault(Fault::DivisionByZero));
    }

    #[test]
    fn budget() {
        let ast = parse_program("int f(int x){ while (x == x) { x = x; } return x; }").unwrap();
        assert_eq!(ret(&ast, &[0]), RunOutcome::DivergedAtBudget);
        let ast = foo();
        let tight = run(&ast, &[5, 3], IntWidth::W8, 10).unwrap();
        assert_eq!(tight, RunOutcome::DivergedAtBudget);
    }

    #[test]
    fn input_validation() {
        let ast = foo();
        assert!(matches!(
            run(&ast, &[1], IntWidth::W8, 10),
            Err(RunError::Arity { expected: 2, got: 1 })
        ));
        assert!(matches!(
            run(&ast, &[1, 300], IntWidth::W8, 10),
            Err(RunError::OutOfRange { .. })
        ));
    }

    #[test]
    fn suites() {
        let ast = parse_program("int f(int x, int y){ return x / y; }").unwrap();
        let suite = vec![vec![4, 2], vec![1, 0], vec![6, 3]];
        let res = run_suite(&ast, &suite, IntWidth::W8, 100);
        assert_eq!(res.traces.len(), 2);
        assert_eq!(
            res.excluded,
            vec![(1, Excluded::Outcome(RunOutcome::Fault(Fault::DivisionByZero)))]
        );
        assert!(run_suite(&ast, &[], IntWidth::W8, 100).traces.is_empty());
    }
}
