use alloc::vec::Vec;
use core::fmt;

/// Handle of a finite-domain variable inside one store.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct VarId(pub(crate) u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "_{}", self.0)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Term {
    Var(VarId),
    Const(i64),
}

impl From<VarId> for Term {
    fn from(v: VarId) -> Self {
        Term::Var(v)
    }
}

impl From<i64> for Term {
    fn from(c: i64) -> Self {
        Term::Const(c)
    }
}

impl Term {
    pub fn var(self) -> Option<VarId> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }

    fn value(self, lookup: &dyn Fn(VarId) -> i64) -> i64 {
        match self {
            Term::Var(v) => lookup(v),
            Term::Const(c) => c,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
        }
    }

    /// The operator with its operands exchanged: `a op b ⇔ b op.swap() a`.
    pub fn swap(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Ge => CmpOp::Le,
            op => op,
        }
    }

    pub fn eval(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "≠",
            CmpOp::Lt => "<",
            CmpOp::Le => "≤",
            CmpOp::Gt => ">",
            CmpOp::Ge => "≥",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

impl ArithOp {
    /// Mathematical result with truncated division; `None` on a zero divisor.
    pub fn eval(self, a: i64, b: i64) -> Option<i128> {
        let (a, b) = (a as i128, b as i128);
        match self {
            ArithOp::Add => Some(a + b),
            ArithOp::Sub => Some(a - b),
            ArithOp::Mul => Some(a * b),
            ArithOp::Div => (b != 0).then(|| a / b),
            ArithOp::Rem => (b != 0).then(|| a % b),
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
            ArithOp::Rem => "mod",
        }
    }
}

/// Constraints in negation normal form.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Constraint {
    True,
    False,
    Cmp(Term, CmpOp, Term),
    /// `target = lhs op rhs`
    Arith {
        target: VarId,
        op: ArithOp,
        lhs: Term,
        rhs: Term,
    },
    /// `¬(target = lhs op rhs)`, also true when the operation is undefined.
    ArithNe {
        target: VarId,
        op: ArithOp,
        lhs: Term,
        rhs: Term,
    },
    And(Vec<Constraint>),
    Or(Vec<Constraint>),
}

impl Constraint {
    pub fn cmp(a: impl Into<Term>, op: CmpOp, b: impl Into<Term>) -> Self {
        Constraint::Cmp(a.into(), op, b.into())
    }

    pub fn eq(a: impl Into<Term>, b: impl Into<Term>) -> Self {
        Self::cmp(a, CmpOp::Eq, b)
    }

    pub fn arith(target: VarId, op: ArithOp, lhs: impl Into<Term>, rhs: impl Into<Term>) -> Self {
        Constraint::Arith {
            target,
            op,
            lhs: lhs.into(),
            rhs: rhs.into(),
        }
    }

    /// Conjunction with `True` units dropped and nested conjunctions flattened.
    pub fn and(parts: impl IntoIterator<Item = Constraint>) -> Self {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Constraint::True => {}
                Constraint::False => return Constraint::False,
                Constraint::And(inner) => out.extend(inner),
                p => out.push(p),
            }
        }
        match out.len() {
            0 => Constraint::True,
            1 => out.pop().unwrap(),
            _ => Constraint::And(out),
        }
    }

    pub fn or(parts: impl IntoIterator<Item = Constraint>) -> Self {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Constraint::False => {}
                Constraint::True => return Constraint::True,
                Constraint::Or(inner) => out.extend(inner),
                p => out.push(p),
            }
        }
        match out.len() {
            0 => Constraint::False,
            1 => out.pop().unwrap(),
            _ => Constraint::Or(out),
        }
    }

    /// `v[i] = w[i]` for every position.
    pub fn vec_eq(v: &[VarId], w: &[VarId]) -> Self {
        debug_assert_eq!(v.len(), w.len());
        Self::and(v.iter().zip(w).map(|(&a, &b)| Self::eq(a, b)))
    }

    /// Negation, pushed to the leaves.
    pub fn negate(&self) -> Constraint {
        match self {
            Constraint::True => Constraint::False,
            Constraint::False => Constraint::True,
            Constraint::Cmp(a, op, b) => Constraint::Cmp(*a, op.negate(), *b),
            Constraint::Arith {
                target,
                op,
                lhs,
                rhs,
            } => Constraint::ArithNe {
                target: *target,
                op: *op,
                lhs: *lhs,
                rhs: *rhs,
            },
            Constraint::ArithNe {
                target,
                op,
                lhs,
                rhs,
            } => Constraint::Arith {
                target: *target,
                op: *op,
                lhs: *lhs,
                rhs: *rhs,
            },
            Constraint::And(cs) => Self::or(cs.iter().map(Self::negate)),
            Constraint::Or(cs) => Self::and(cs.iter().map(Self::negate)),
        }
    }

    pub fn vars(&self, out: &mut Vec<VarId>) {
        let mut term = |t: &Term| {
            if let Term::Var(v) = t {
                out.push(*v);
            }
        };
        match self {
            Constraint::True | Constraint::False => {}
            Constraint::Cmp(a, _, b) => {
                term(a);
                term(b);
            }
            Constraint::Arith {
                target, lhs, rhs, ..
            }
            | Constraint::ArithNe {
                target, lhs, rhs, ..
            } => {
                term(&Term::Var(*target));
                term(lhs);
                term(rhs);
            }
            Constraint::And(cs) | Constraint::Or(cs) => cs.iter().for_each(|c| c.vars(out)),
        }
    }

    /// Truth value under a total valuation.
    pub fn eval(&self, lookup: &dyn Fn(VarId) -> i64) -> bool {
        match self {
            Constraint::True => true,
            Constraint::False => false,
            Constraint::Cmp(a, op, b) => op.eval(a.value(lookup), b.value(lookup)),
            Constraint::Arith {
                target,
                op,
                lhs,
                rhs,
            } => op.eval(lhs.value(lookup), rhs.value(lookup)) == Some(lookup(*target) as i128),
            Constraint::ArithNe {
                target,
                op,
                lhs,
                rhs,
            } => op.eval(lhs.value(lookup), rhs.value(lookup)) != Some(lookup(*target) as i128),
            Constraint::And(cs) => cs.iter().all(|c| c.eval(lookup)),
            Constraint::Or(cs) => cs.iter().any(|c| c.eval(lookup)),
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, cs: &[Constraint], sep: &str| {
            f.write_str("(")?;
            for (i, c) in cs.iter().enumerate() {
                if i > 0 {
                    f.write_str(sep)?;
                }
                write!(f, "{c}")?;
            }
            f.write_str(")")
        };
        match self {
            Constraint::True => f.write_str("true"),
            Constraint::False => f.write_str("false"),
            Constraint::Cmp(a, op, b) => write!(f, "{a} {} {b}", op.symbol()),
            Constraint::Arith {
                target,
                op,
                lhs,
                rhs,
            } => write!(f, "{target} = {lhs} {} {rhs}", op.symbol()),
            Constraint::ArithNe {
                target,
                op,
                lhs,
                rhs,
            } => write!(f, "{target} ≠ {lhs} {} {rhs}", op.symbol()),
            Constraint::And(cs) => list(f, cs, " ∧ "),
            Constraint::Or(cs) => list(f, cs, " ∨ "),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negation_normal_form() {
        let (x, y) = (VarId(0), VarId(1));
        let c = Constraint::and([
            Constraint::cmp(x, CmpOp::Lt, y),
            Constraint::or([Constraint::eq(x, 3), Constraint::cmp(y, CmpOp::Ge, 0)]),
        ]);
        let n = c.negate();
        assert_eq!(
            n,
            Constraint::Or(alloc::vec![
                Constraint::cmp(x, CmpOp::Ge, y),
                Constraint::And(alloc::vec![
                    Constraint::cmp(x, CmpOp::Ne, 3),
                    Constraint::cmp(y, CmpOp::Lt, 0)
                ]),
            ])
        );
        assert_eq!(n.negate(), c);
        for a in -3..4 {
            for b in -3..4 {
                let look = |v: VarId| if v == x { a } else { b };
                assert_eq!(c.eval(&look), !n.eval(&look));
            }
        }
    }

    #[test]
    fn undefined_arithmetic_is_false() {
        let (x, y) = (VarId(0), VarId(1));
        let c = Constraint::arith(x, ArithOp::Div, 4, y);
        let zero = |v: VarId| if v == x { 0 } else { 0 };
        assert!(!c.eval(&zero));
        assert!(c.negate().eval(&zero));
        assert_eq!(ArithOp::Rem.eval(-7, 2), Some(-1));
        assert_eq!(ArithOp::Div.eval(-7, 2), Some(-3));
    }
}
