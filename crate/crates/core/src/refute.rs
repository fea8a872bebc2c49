//! Proving and disproving invariants by refutation: `prog ⊨ I` holds exactly
//! when `prog ∧ ¬I` has no solution.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::compile::{compile, CompileError, CompiledProgram};
use crate::frontend::ProgramAst;
use crate::inference::{evaluate_invariant, Formula, FormulaError, InvTerm};
use crate::interpreter::{run, RunOutcome, DEFAULT_STEP_BUDGET};
use crate::solver::{Abort, Constraint, Deadline, LabelEnd, Stats, Status, Term, DEFAULT_PROPAGATION_BUDGET};
use crate::ssa::to_ssa;
use crate::IntWidth;

pub const DEFAULT_LABEL_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnknownReason {
    LabelBudget,
    UnfoldBudget,
    PropagationBudget,
    WallClock,
}

impl UnknownReason {
    pub fn as_str(self) -> &'static str {
        match self {
            UnknownReason::LabelBudget => "label-budget",
            UnknownReason::UnfoldBudget => "unfold-budget",
            UnknownReason::PropagationBudget => "propagation-budget",
            UnknownReason::WallClock => "wall-clock",
        }
    }
}

impl From<Abort> for UnknownReason {
    fn from(a: Abort) -> Self {
        match a {
            Abort::PropagationBudget => UnknownReason::PropagationBudget,
            Abort::WallClock => UnknownReason::WallClock,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Proved,
    Disproved {
        inputs: Vec<(String, i64)>,
        output: i64,
        interpreter_confirmed: bool,
    },
    Unknown(UnknownReason),
    /// A solution the interpreter does not reproduce.
    InternalError(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckReport {
    pub verdict: Verdict,
    pub stats: Stats,
}

#[derive(Clone)]
pub struct CheckConfig {
    pub width: IntWidth,
    /// `None` means `2 * MAX_INT + 4`.
    pub unfold_budget: Option<u64>,
    pub label_budget: u64,
    pub propagation_budget: u64,
    pub step_budget: u64,
    pub deadline: Option<Deadline>,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            width: IntWidth::W8,
            unfold_budget: None,
            label_budget: DEFAULT_LABEL_BUDGET,
            propagation_budget: DEFAULT_PROPAGATION_BUDGET,
            step_budget: DEFAULT_STEP_BUDGET,
            deadline: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CheckError {
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Compile(#[from] CompileError),
}

fn term(t: &InvTerm, params: &[String], prog: &CompiledProgram) -> Result<Term, FormulaError> {
    match t {
        InvTerm::Return => Ok(Term::Var(prog.output)),
        InvTerm::Int(n) => Ok(Term::Const(*n)),
        InvTerm::Orig(p) => params
            .iter()
            .position(|q| q == p)
            .map(|i| Term::Var(prog.inputs[i]))
            .ok_or_else(|| FormulaError::UnknownTerm(t.to_string())),
    }
}

fn positive(f: &Formula, params: &[String], prog: &CompiledProgram) -> Result<Constraint, FormulaError> {
    Ok(match f {
        Formula::Cmp(a, op, b) => Constraint::cmp(term(a, params, prog)?, *op, term(b, params, prog)?),
        Formula::Not(x) => positive(x, params, prog)?.negate(),
        Formula::And(a, b) => Constraint::and([positive(a, params, prog)?, positive(b, params, prog)?]),
        Formula::Or(a, b) => Constraint::or([positive(a, params, prog)?, positive(b, params, prog)?]),
        Formula::Implies(a, b) => Constraint::or([positive(a, params, prog)?.negate(), positive(b, params, prog)?]),
    })
}

/// `¬f` in negation normal form over the program's input and output
/// variables; `params` names the inputs in order.
pub fn negate_invariant(f: &Formula, params: &[String], prog: &CompiledProgram) -> Result<Constraint, FormulaError> {
    Ok(positive(f, params, prog)?.negate())
}

enum Found {
    Confirmed(Vec<i64>, i64),
    Unconfirmed(String),
}

/// Decides `ast ⊨ f` within the budgets of `cfg`.
pub fn check_invariant(ast: &ProgramAst, f: &Formula, cfg: &CheckConfig) -> Result<CheckReport, CheckError> {
    f.check_terms(&ast.params)?;
    let unfold = cfg.unfold_budget.unwrap_or(cfg.width.default_unfold_budget());
    let mut prog = compile(&to_ssa(ast), cfg.width, unfold)?;
    let neg = negate_invariant(f, &ast.params, &prog)?;
    prog.store.set_propagation_budget(cfg.propagation_budget);
    prog.store.set_deadline(cfg.deadline.clone());
    prog.store.post(neg);

    let report = |verdict, prog: &CompiledProgram| CheckReport {
        verdict,
        stats: prog.store.stats(),
    };
    let untainted_proof = |prog: &CompiledProgram| {
        if prog.store.was_tainted() {
            Verdict::Unknown(UnknownReason::UnfoldBudget)
        } else {
            Verdict::Proved
        }
    };

    match prog.store.propagate() {
        Err(a) => return Ok(report(Verdict::Unknown(a.into()), &prog)),
        Ok(Status::Failed) => return Ok(report(untainted_proof(&prog), &prog)),
        Ok(Status::Fixpoint) => {}
    }

    let mut vars = prog.inputs.clone();
    vars.push(prog.output);
    let n = prog.inputs.len();
    let mut found = None;
    let end = prog.store.label_each(&vars, cfg.label_budget, &mut |s, vals| {
        let (inputs, output) = (&vals[..n], vals[n]);
        let confirmed = match run(ast, inputs, cfg.width, cfg.step_budget) {
            Ok(RunOutcome::Returned { value, trace }) => {
                value == output && evaluate_invariant(f, &trace) == Ok(false)
            }
            _ => false,
        };
        if confirmed {
            found = Some(Found::Confirmed(inputs.to_vec(), output));
        } else if !s.is_tainted() {
            found = Some(Found::Unconfirmed(alloc::format!(
                "solution {inputs:?} → {output} is not a violating run"
            )));
        }
        found.is_some()
    });
    let verdict = match (end, found) {
        (Ok(LabelEnd::Stopped), Some(Found::Confirmed(inputs, output))) => Verdict::Disproved {
            inputs: ast.params.iter().cloned().zip(inputs).collect(),
            output,
            interpreter_confirmed: true,
        },
        (Ok(LabelEnd::Stopped), Some(Found::Unconfirmed(msg))) => Verdict::InternalError(msg),
        (Ok(LabelEnd::Stopped), None) => unreachable!("stopped without a solution"),
        (Ok(LabelEnd::Exhausted), _) => untainted_proof(&prog),
        // a tainted search cannot prove anything, however long it runs
        (Ok(LabelEnd::BudgetOut), _) if prog.store.was_tainted() => Verdict::Unknown(UnknownReason::UnfoldBudget),
        (Ok(LabelEnd::BudgetOut), _) => Verdict::Unknown(UnknownReason::LabelBudget),
        (Err(a), _) => Verdict::Unknown(a.into()),
    };
    Ok(report(verdict, &prog))
}

/// Independent checks, one fresh store each, in input order.
pub fn check_all(ast: &ProgramAst, fs: &[Formula], cfg: &CheckConfig) -> Vec<Result<CheckReport, CheckError>> {
    fs.iter().map(|f| check_invariant(ast, f, cfg)).collect()
}
