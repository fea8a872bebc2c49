//! Likely invariants at the exit point, from a fixed template pool checked
//! against execution traces.
//!
//! Terms are `return` followed by `orig(p)` for each parameter. The pool:
//!
//! * `t == c`, `t >= c`, `t <= c` for constants `c` observed for `t`;
//! * `t1 op t2` for every pair of distinct terms and every comparison;
//! * `t1 == c1 ==> t2 == c2` for observed constants.
//!
//! Survivors are pruned: only the tightest bounds are kept and bounds are
//! dropped for constant terms; `<=`/`>=` go when `==` holds on the same
//! pair, and `<=`/`!=` go when `<` holds (likewise for `>`); implications go
//! when their antecedent holds in fewer than two traces or their consequent
//! holds in every trace.

mod formula;

pub use formula::{evaluate_invariant, parse_formula, parse_formulas, Formula, FormulaError, InvTerm};

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::interpreter::Trace;
use crate::solver::CmpOp;

/// Minimum number of traces in which an implication's antecedent must hold.
pub const IMPLICATION_SUPPORT: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InferenceError {
    #[error("no traces to infer from")]
    EmptyTraceSet,
}

const OPS: [CmpOp; 6] = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];

fn terms(traces: &[Trace]) -> Vec<InvTerm> {
    let mut out = alloc::vec![InvTerm::Return];
    out.extend(traces[0].entry.iter().map(|(p, _)| InvTerm::Orig(p.clone())));
    out
}

fn value(t: &InvTerm, trace: &Trace) -> Option<i64> {
    match t {
        InvTerm::Return => Some(trace.exit_return),
        InvTerm::Orig(p) => trace.orig(p),
        InvTerm::Int(n) => Some(*n),
    }
}

fn eq(t: &InvTerm, c: i64) -> Formula {
    Formula::cmp(t.clone(), CmpOp::Eq, InvTerm::Int(c))
}

/// The instantiated pool, in template order, then term order, then constant.
pub fn generate_candidates(traces: &[Trace]) -> Result<Vec<Formula>, InferenceError> {
    if traces.is_empty() {
        return Err(InferenceError::EmptyTraceSet);
    }
    let terms = terms(traces);
    let observed: Vec<BTreeSet<i64>> = terms
        .iter()
        .map(|t| traces.iter().filter_map(|tr| value(t, tr)).collect())
        .collect();
    let mut out = Vec::new();
    for op in [CmpOp::Eq, CmpOp::Ge, CmpOp::Le] {
        for (t, vals) in terms.iter().zip(&observed) {
            out.extend(vals.iter().map(|&c| Formula::cmp(t.clone(), op, InvTerm::Int(c))));
        }
    }
    for (i, a) in terms.iter().enumerate() {
        for b in &terms[i + 1..] {
            out.extend(OPS.iter().map(|&op| Formula::cmp(a.clone(), op, b.clone())));
        }
    }
    for (i, (a, va)) in terms.iter().zip(&observed).enumerate() {
        for &c1 in va {
            for (j, (b, vb)) in terms.iter().zip(&observed).enumerate() {
                if i != j {
                    out.extend(vb.iter().map(|&c2| Formula::implies(eq(a, c1), eq(b, c2))));
                }
            }
        }
    }
    Ok(out)
}

fn holds(f: &Formula, traces: &[Trace]) -> bool {
    traces.iter().all(|t| evaluate_invariant(f, t) == Ok(true))
}

fn support(f: &Formula, traces: &[Trace]) -> usize {
    traces.iter().filter(|t| evaluate_invariant(f, t) == Ok(true)).count()
}

/// Candidates true on every trace, after subsumption pruning. Order is kept.
pub fn filter_candidates(candidates: &[Formula], traces: &[Trace]) -> Vec<Formula> {
    let survivors: Vec<&Formula> = candidates.iter().filter(|f| holds(f, traces)).collect();

    let mut constant: BTreeSet<&InvTerm> = BTreeSet::new();
    let mut lower: BTreeMap<&InvTerm, i64> = BTreeMap::new();
    let mut upper: BTreeMap<&InvTerm, i64> = BTreeMap::new();
    let mut pair_ops: BTreeMap<(&InvTerm, &InvTerm), Vec<CmpOp>> = BTreeMap::new();
    for f in &survivors {
        if let Formula::Cmp(t, op, rhs) = f {
            match (rhs, op) {
                (InvTerm::Int(_), CmpOp::Eq) => {
                    constant.insert(t);
                }
                (InvTerm::Int(c), CmpOp::Ge) => {
                    let e = lower.entry(t).or_insert(*c);
                    *e = (*e).max(*c);
                }
                (InvTerm::Int(c), CmpOp::Le) => {
                    let e = upper.entry(t).or_insert(*c);
                    *e = (*e).min(*c);
                }
                (InvTerm::Int(_), _) => {}
                (b, op) => pair_ops.entry((t, b)).or_default().push(*op),
            }
        }
    }

    let keep = |f: &Formula| -> bool {
        match f {
            Formula::Cmp(t, op, InvTerm::Int(c)) => match op {
                CmpOp::Ge => !constant.contains(t) && lower.get(t) == Some(c),
                CmpOp::Le => !constant.contains(t) && upper.get(t) == Some(c),
                _ => true,
            },
            Formula::Cmp(a, op, b) => {
                let ops = &pair_ops[&(a, b)];
                let has = |o: CmpOp| ops.contains(&o);
                match op {
                    CmpOp::Le => !has(CmpOp::Eq) && !has(CmpOp::Lt),
                    CmpOp::Ge => !has(CmpOp::Eq) && !has(CmpOp::Gt),
                    CmpOp::Ne => !has(CmpOp::Lt) && !has(CmpOp::Gt),
                    _ => true,
                }
            }
            Formula::Implies(ante, cons) => {
                support(ante, traces) >= IMPLICATION_SUPPORT && !holds(cons, traces)
            }
            _ => true,
        }
    };
    survivors.into_iter().filter(|f| keep(f)).cloned().collect()
}

/// `generate_candidates` followed by `filter_candidates`.
pub fn infer(traces: &[Trace]) -> Result<Vec<Formula>, InferenceError> {
    Ok(filter_candidates(&generate_candidates(traces)?, traces))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_program, tests::FOO};
    use crate::interpreter::run_suite;
    use crate::IntWidth;
    use alloc::string::ToString;
    use alloc::vec;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    fn trace(n: i64, r: i64, ret: i64) -> Trace {
        Trace {
            entry: vec![("n".into(), n), ("r".into(), r)],
            exit_return: ret,
            steps: 0,
        }
    }

    fn texts(fs: &[Formula]) -> Vec<alloc::string::String> {
        fs.iter().map(|f| f.to_string()).collect()
    }

    #[test]
    fn single_trace_pool() {
        let c = texts(&generate_candidates(&[trace(1, 0, 1)]).unwrap());
        for want in [
            "orig(r) == 0",
            "return == 1",
            "return > orig(r)",
            "orig(r) == 0 ==> return == 1",
            "return < orig(n)",
            "return >= 1",
        ] {
            assert!(c.iter().any(|x| x == want), "{want} missing");
        }
        // 3 terms × 3 unary templates, 3 pairs × 6 ops, 6 ordered pairs × 1 × 1
        assert_eq!(c.len(), 9 + 18 + 6);
    }

    #[test]
    fn empty_trace_set_is_an_error() {
        assert_eq!(generate_candidates(&[]), Err(InferenceError::EmptyTraceSet));
        assert!(filter_candidates(&[], &[trace(0, 0, 0)]).is_empty());
    }

    #[test]
    fn falsified_candidate_is_removed() {
        let f = parse_formula("return == orig(r)").unwrap();
        assert!(filter_candidates(&[f], &[trace(1, 0, 1)]).is_empty());
    }

    #[test]
    fn pruning_keeps_tightest_forms() {
        let ts = [trace(8, 3, 3), trace(9, 5, 5), trace(10, 5, 5)];
        let out = texts(&infer(&ts).unwrap());
        assert!(out.contains(&"return == orig(r)".into()));
        assert!(!out.contains(&"return >= orig(r)".into()));
        assert!(out.contains(&"orig(n) >= 8".into()));
        assert!(!out.contains(&"orig(n) >= 7".into()));
        assert!(out.contains(&"return < orig(n)".into()));
        assert!(!out.contains(&"return != orig(n)".into()));
        // antecedent seen twice
        assert!(out.contains(&"return == 5 ==> orig(r) == 5".into()));
        // antecedent seen once
        assert!(!out.iter().any(|f| f.starts_with("return == 3 ==>")));
    }

    /// Branch-covering suite for `foo`: loop unfoldings from 0 to 454.
    fn foo_suite() -> Vec<Vec<i64>> {
        let mut s = vec![vec![0, 0], vec![-3, 0], vec![0, 7], vec![-5, -2], vec![-1, 4]];
        for (n, r) in [(2, 0), (4, 0), (10, 0), (100, 0), (454, 0), (6, 3), (8, -7), (200, 50), (454, -100)] {
            s.push(vec![n, r]);
        }
        for (n, r) in [(1, 5), (3, 3), (5, 3), (7, 1), (9, -9), (11, 20), (99, -30), (1, 1), (13, 2), (453, 4), (21, -2)] {
            s.push(vec![n, r]);
        }
        s
    }

    #[test]
    fn foo_suite_yields_the_three_invariants() {
        let ast = parse_program(FOO).unwrap();
        let suite = foo_suite();
        assert!(suite.len() >= 25);
        let run = run_suite(&ast, &suite, IntWidth::W32, 1_000_000);
        assert_eq!(run.traces.len(), suite.len());
        let out = infer(&run.traces).unwrap();
        let text = texts(&out);
        for want in ["orig(r) == 0 ==> return == 0", "return == 0 ==> orig(r) == 0", "return >= orig(r)"] {
            assert!(text.iter().any(|x| x == want), "{want} missing from {text:?}");
        }
        for f in &out {
            assert!(holds(f, &run.traces), "{f}");
        }
    }

    fn arb_traces() -> impl Strategy<Value = Vec<Trace>> {
        proptest::collection::vec((-3i64..4, -3i64..4, -3i64..4), 1..8)
            .prop_map(|v| v.into_iter().map(|(n, r, x)| trace(n, r, x)).collect())
    }

    proptest! {
        #[test]
        fn reported_invariants_hold(ts in arb_traces()) {
            for f in infer(&ts).unwrap() {
                prop_assert!(holds(&f, &ts));
            }
        }

        #[test]
        fn every_true_unpruned_candidate_is_reported(ts in arb_traces()) {
            let pool = generate_candidates(&ts).unwrap();
            let out = filter_candidates(&pool, &ts);
            for f in &pool {
                if holds(f, &ts) && !out.contains(f) {
                    // dropped only by a stronger survivor or a support rule
                    let pruned = match f {
                        Formula::Cmp(_, op, _) => matches!(op, CmpOp::Ge | CmpOp::Le | CmpOp::Ne),
                        Formula::Implies(..) => true,
                        _ => false,
                    };
                    prop_assert!(pruned, "{} wrongly dropped", f);
                }
            }
        }

        #[test]
        fn output_is_deterministic(ts in arb_traces()) {
            prop_assert_eq!(infer(&ts).unwrap(), infer(&ts).unwrap());
        }
    }
}
