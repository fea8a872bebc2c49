use super::*;
use alloc::vec;
use proptest::prelude::*;

const W4: IntWidth = IntWidth::W4;

fn store_with(width: IntWidth, n: usize) -> (Store, Vec<VarId>) {
    let mut s = Store::new(width);
    let vs = (0..n).map(|_| s.new_var(None)).collect();
    (s, vs)
}

fn goal(c: Constraint) -> Goal {
    Arc::new(move |s: &mut Store| s.post(c.clone()))
}

#[test]
fn new_store_widths() {
    for (w, lo, hi) in [(IntWidth::W8, -128, 127), (IntWidth::W32, -(1 << 31), (1 << 31) - 1), (W4, -8, 7)] {
        let mut s = Store::new(w);
        let x = s.new_var(Some("x"));
        assert_eq!(s.dom(x), &Domain::range(lo, hi));
        assert!(!s.is_failed());
    }
}

#[test]
fn new_var_and_post() {
    let (mut s, v) = store_with(IntWidth::W8, 2);
    assert_ne!(v[0], v[1]);
    s.post(Constraint::eq(v[0], 5));
    assert_eq!(s.propagate(), Ok(Status::Fixpoint));
    assert_eq!(s.dom(v[0]), &Domain::singleton(5));
}

#[test]
fn contradiction_fails() {
    let (mut s, v) = store_with(IntWidth::W8, 1);
    s.post(Constraint::eq(v[0], 3));
    s.post(Constraint::eq(v[0], 4));
    assert_eq!(s.propagate(), Ok(Status::Failed));
}

#[test]
fn strict_order_prunes_matching_brute_force() {
    let (mut s, v) = store_with(IntWidth::W8, 2);
    s.post(Constraint::cmp(v[0], CmpOp::Ge, 0));
    s.post(Constraint::cmp(v[0], CmpOp::Le, 10));
    s.post(Constraint::cmp(v[1], CmpOp::Ge, 0));
    s.post(Constraint::cmp(v[1], CmpOp::Le, 10));
    s.post(Constraint::cmp(v[0], CmpOp::Lt, v[1]));
    s.propagate().unwrap();
    let pairs: Vec<(i64, i64)> = (0..=10).flat_map(|a| (0..=10).map(move |b| (a, b))).filter(|(a, b)| a < b).collect();
    let xs = Domain::from_values(pairs.iter().map(|p| p.0));
    let ys = Domain::from_values(pairs.iter().map(|p| p.1));
    assert_eq!(s.dom(v[0]), &xs);
    assert_eq!(s.dom(v[1]), &ys);
}

#[test]
fn propagate_examples() {
    let mut s = Store::new(IntWidth::W8);
    assert_eq!(s.propagate(), Ok(Status::Fixpoint));
    let x = s.new_var(None);
    s.post(Constraint::cmp(x, CmpOp::Le, 5));
    s.post(Constraint::cmp(x, CmpOp::Ge, 0));
    s.post(Constraint::cmp(x, CmpOp::Gt, 5));
    assert_eq!(s.propagate(), Ok(Status::Failed));
}

#[test]
fn entailment_examples() {
    let (mut s, v) = store_with(IntWidth::W8, 1);
    let x = v[0];
    let gt0 = Constraint::cmp(x, CmpOp::Gt, 0);
    s.post(Constraint::cmp(x, CmpOp::Ge, -1));
    s.post(Constraint::cmp(x, CmpOp::Le, 5));
    s.propagate().unwrap();
    assert_eq!(s.entailment(&gt0), Entailment::Unknown);
    s.post(Constraint::cmp(x, CmpOp::Ge, 1));
    s.propagate().unwrap();
    assert_eq!(s.entailment(&gt0), Entailment::Entailed);
    assert_eq!(s.entailment(&Constraint::cmp(x, CmpOp::Gt, 9)), Entailment::Disentailed);
}

#[test]
fn guarded_examples() {
    for (lo, hi, expect) in [(1, 5, Some(1)), (-5, -1, None)] {
        let (mut s, v) = store_with(IntWidth::W8, 2);
        s.post(Constraint::cmp(v[0], CmpOp::Ge, lo));
        s.post(Constraint::cmp(v[0], CmpOp::Le, hi));
        s.post_guarded(Constraint::cmp(v[0], CmpOp::Gt, 0), goal(Constraint::eq(v[1], 1)));
        s.propagate().unwrap();
        assert_eq!(s.value(v[1]), expect);
        if expect.is_none() {
            assert_eq!(s.dom(v[1]), &Domain::full(IntWidth::W8));
        }
    }
    let (mut s, v) = store_with(IntWidth::W8, 2);
    s.post(Constraint::cmp(v[0], CmpOp::Ge, -1));
    s.post(Constraint::cmp(v[0], CmpOp::Le, 5));
    s.post_guarded(Constraint::cmp(v[0], CmpOp::Gt, 0), goal(Constraint::eq(v[1], 1)));
    s.propagate().unwrap();
    assert_eq!(s.value(v[1]), None);
    s.post(Constraint::eq(v[0], 2));
    s.propagate().unwrap();
    assert_eq!(s.value(v[1]), Some(1));
}

#[test]
fn constructive_disjunction_examples() {
    // (X0=1 ∧ X2=X0) ⊻ (X1=3 ∧ X2=X1)
    let (mut s, v) = store_with(IntWidth::W8, 3);
    s.post_constructive_disjunction(
        Constraint::and([Constraint::eq(v[0], 1), Constraint::eq(v[2], v[0])]),
        Constraint::and([Constraint::eq(v[1], 3), Constraint::eq(v[2], v[1])]),
    );
    s.propagate().unwrap();
    assert_eq!(s.dom(v[2]), &Domain::from_values([1, 3]));

    let (mut s, v) = store_with(IntWidth::W8, 1);
    s.post_constructive_disjunction(Constraint::eq(v[0], 1), Constraint::eq(v[0], 1));
    s.propagate().unwrap();
    assert_eq!(s.value(v[0]), Some(1));

    let (mut s, v) = store_with(IntWidth::W8, 1);
    s.post(Constraint::cmp(v[0], CmpOp::Ge, 0));
    s.post(Constraint::cmp(v[0], CmpOp::Le, 5));
    s.post_constructive_disjunction(Constraint::eq(v[0], 1), Constraint::cmp(v[0], CmpOp::Gt, 9));
    s.propagate().unwrap();
    assert_eq!(s.value(v[0]), Some(1));
}

#[test]
fn disjunction_with_both_branches_failing_fails() {
    let (mut s, v) = store_with(IntWidth::W8, 1);
    s.post(Constraint::eq(v[0], 0));
    s.post(Constraint::or([Constraint::eq(v[0], 1), Constraint::eq(v[0], 2)]));
    assert_eq!(s.propagate(), Ok(Status::Failed));
}

#[test]
fn snapshot_restore() {
    let (mut s, v) = store_with(IntWidth::W8, 2);
    s.post(Constraint::cmp(v[0], CmpOp::Lt, v[1]));
    s.propagate().unwrap();
    let before = alloc::format!("{s:?}");

    let t = s.snapshot();
    s.post(Constraint::eq(v[0], 1));
    let extra = s.new_var(None);
    s.post(Constraint::eq(extra, v[1]));
    s.propagate().unwrap();
    assert_eq!(s.dom(v[1]).min(), 2);
    s.restore(t).unwrap();
    assert_eq!(alloc::format!("{s:?}"), before);
    assert_eq!(s.var_count(), 2);

    // nested, LIFO
    let outer = s.snapshot();
    s.post(Constraint::eq(v[0], 1));
    s.propagate().unwrap();
    let inner = s.snapshot();
    s.post(Constraint::eq(v[1], 9));
    s.propagate().unwrap();
    s.restore(inner).unwrap();
    assert_eq!(s.value(v[0]), Some(1));
    assert_eq!(s.value(v[1]), None);
    s.restore(outer).unwrap();
    assert_eq!(alloc::format!("{s:?}"), before);

    // failure is undone
    let t = s.snapshot();
    s.post(Constraint::False);
    assert_eq!(s.propagate(), Ok(Status::Failed));
    s.restore(t).unwrap();
    assert!(!s.is_failed());
    assert_eq!(s.propagate(), Ok(Status::Fixpoint));
}

#[test]
fn restore_out_of_order_is_rejected() {
    let mut s = Store::new(W4);
    let outer = s.snapshot();
    let inner = s.snapshot();
    assert_eq!(s.restore(outer), Err(TokenOrderViolation));
    s.restore(inner).unwrap();
}

#[test]
fn label_examples() {
    let (mut s, v) = store_with(IntWidth::W8, 1);
    s.post(Constraint::False);
    assert_eq!(s.label(&v, 100), Ok(LabelOutcome::Exhausted));

    let (mut s, v) = store_with(IntWidth::W8, 2);
    for &x in &v {
        s.post(Constraint::cmp(x, CmpOp::Ge, 0));
        s.post(Constraint::cmp(x, CmpOp::Le, 10));
    }
    let sum = s.new_var(None);
    s.post(Constraint::arith(sum, ArithOp::Add, v[0], v[1]));
    s.post(Constraint::eq(sum, 10));
    match s.label(&v, 1000).unwrap() {
        LabelOutcome::Solution(vals) => assert_eq!(vals[0] + vals[1], 10),
        other => panic!("{other:?}"),
    }
}

#[test]
fn label_budget() {
    let (mut s, v) = store_with(IntWidth::W8, 2);
    s.post(Constraint::cmp(v[0], CmpOp::Ne, v[0]));
    assert_eq!(s.label(&v, 0), Ok(LabelOutcome::Exhausted));
    // pigeonhole: five pairwise distinct values in [0,3]
    let (mut s, v) = store_with(IntWidth::W8, 5);
    for (i, &a) in v.iter().enumerate() {
        s.post(Constraint::cmp(a, CmpOp::Ge, 0));
        s.post(Constraint::cmp(a, CmpOp::Le, 3));
        for &b in &v[..i] {
            s.post(Constraint::cmp(a, CmpOp::Ne, b));
        }
    }
    assert_eq!(s.propagate(), Ok(Status::Fixpoint));
    assert_eq!(s.label(&v, 5), Ok(LabelOutcome::BudgetOut));
    assert_eq!(s.stats().label_nodes, 5);
}

#[test]
fn difference_graph_entails_chains() {
    let (mut s, v) = store_with(IntWidth::W8, 4);
    // v0 > v1, v1 = v2, v3 = v0 + 1
    s.post(Constraint::cmp(v[0], CmpOp::Gt, v[1]));
    s.post(Constraint::eq(v[1], v[2]));
    s.post(Constraint::arith(v[3], ArithOp::Add, v[0], 1));
    s.propagate().unwrap();
    let ne = Constraint::cmp(v[3], CmpOp::Ne, v[2]);
    assert_eq!(s.entailment(&ne), Entailment::Unknown);
    assert_eq!(s.store_entailment(&ne), Entailment::Entailed);
    assert_eq!(s.store_entailment(&Constraint::cmp(v[2], CmpOp::Ge, v[3])), Entailment::Disentailed);
}

#[test]
fn guard_fires_through_graph_without_domain_change() {
    let (mut s, v) = store_with(IntWidth::W8, 3);
    s.post_guarded(Constraint::cmp(v[1], CmpOp::Ne, v[0]), goal(Constraint::eq(v[2], 7)));
    s.propagate().unwrap();
    assert_eq!(s.value(v[2]), None);
    s.post(Constraint::arith(v[1], ArithOp::Sub, v[0], 3));
    s.propagate().unwrap();
    assert_eq!(s.value(v[2]), Some(7));
}

#[test]
fn hull_entailment_ignores_holes_between_variables() {
    let (mut s, v) = store_with(IntWidth::W8, 2);
    s.post(Constraint::eq(v[0], 0));
    s.post(Constraint::cmp(v[1], CmpOp::Ne, 0));
    s.propagate().unwrap();
    assert_eq!(s.entailment(&Constraint::cmp(v[0], CmpOp::Ne, v[1])), Entailment::Unknown);
    assert_eq!(s.entailment(&Constraint::cmp(v[1], CmpOp::Ne, 0)), Entailment::Entailed);
}

#[test]
fn propagation_budget_aborts() {
    let (mut s, v) = store_with(IntWidth::W32, 2);
    s.set_propagation_budget(50);
    s.post(Constraint::cmp(v[0], CmpOp::Lt, v[1]));
    s.post(Constraint::cmp(v[1], CmpOp::Lt, v[0]));
    assert_eq!(s.propagate(), Err(Abort::PropagationBudget));
    assert_eq!(s.abort_reason(), Some(Abort::PropagationBudget));
}

#[test]
fn taint_is_trailed_and_sticky() {
    let mut s = Store::new(W4);
    let t = s.snapshot();
    s.taint();
    assert!(s.is_tainted());
    s.restore(t).unwrap();
    assert!(!s.is_tainted());
    assert!(s.was_tainted());
}

// ---- brute-force properties at width 4 ----

const NV: usize = 3;

fn term() -> impl Strategy<Value = Term> {
    prop_oneof![
        3 => (0..NV as u32).prop_map(|i| Term::Var(VarId(i))),
        1 => (-8i64..8).prop_map(Term::Const),
    ]
}

fn cmp_op() -> impl Strategy<Value = CmpOp> {
    prop_oneof![
        Just(CmpOp::Eq),
        Just(CmpOp::Ne),
        Just(CmpOp::Lt),
        Just(CmpOp::Le),
        Just(CmpOp::Gt),
        Just(CmpOp::Ge)
    ]
}

fn arith_op() -> impl Strategy<Value = ArithOp> {
    prop_oneof![
        Just(ArithOp::Add),
        Just(ArithOp::Sub),
        Just(ArithOp::Mul),
        Just(ArithOp::Div),
        Just(ArithOp::Rem)
    ]
}

fn leaf() -> impl Strategy<Value = Constraint> {
    prop_oneof![
        (term(), cmp_op(), term()).prop_map(|(a, op, b)| Constraint::Cmp(a, op, b)),
        (0..NV as u32, arith_op(), term(), term())
            .prop_map(|(t, op, l, r)| Constraint::arith(VarId(t), op, l, r)),
        (0..NV as u32, arith_op(), term(), term())
            .prop_map(|(t, op, l, r)| Constraint::arith(VarId(t), op, l, r).negate()),
    ]
}

fn constraint() -> impl Strategy<Value = Constraint> {
    leaf().prop_recursive(2, 6, 3, |inner| {
        prop_oneof![
            proptest::collection::vec(inner.clone(), 2..3).prop_map(Constraint::and),
            proptest::collection::vec(inner, 2..3).prop_map(Constraint::or),
        ]
    })
}

fn valuations() -> impl Iterator<Item = [i64; NV]> {
    let r = W4.min_int()..=W4.max_int();
    r.clone()
        .flat_map(move |a| r.clone().flat_map(move |b| W4.values().map(move |c| [a, b, c])))
}

fn holds(cs: &[Constraint], val: &[i64; NV]) -> bool {
    cs.iter().all(|c| c.eval(&|v: VarId| val[v.index()]))
}

fn fresh(cs: &[Constraint]) -> (Store, Vec<VarId>) {
    let (mut s, v) = store_with(W4, NV);
    for c in cs {
        s.post(c.clone());
    }
    (s, v)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pruning_never_loses_a_solution(cs in proptest::collection::vec(constraint(), 1..4)) {
        let (mut s, v) = fresh(&cs);
        let status = s.propagate().unwrap();
        for val in valuations().filter(|val| holds(&cs, val)) {
            prop_assert_eq!(status, Status::Fixpoint, "solution {:?} exists", val);
            for i in 0..NV {
                prop_assert!(s.dom(v[i]).contains(val[i]), "{:?} pruned from var {}", val, i);
            }
        }
    }

    #[test]
    fn propagation_only_shrinks(cs in proptest::collection::vec(constraint(), 1..4), extra in constraint()) {
        let (mut s, v) = fresh(&cs);
        if s.propagate().unwrap() == Status::Fixpoint {
            let before: Vec<Domain> = v.iter().map(|x| s.dom(*x).clone()).collect();
            s.post(extra);
            if s.propagate().unwrap() == Status::Fixpoint {
                for i in 0..NV {
                    prop_assert!(s.dom(v[i]).is_subset(&before[i]));
                }
            }
        }
    }

    #[test]
    fn labeling_agrees_with_brute_force(cs in proptest::collection::vec(constraint(), 1..4)) {
        let (mut s, v) = fresh(&cs);
        let any = valuations().any(|val| holds(&cs, &val));
        match s.label(&v, u64::MAX).unwrap() {
            LabelOutcome::Solution(vals) => {
                let val = [vals[0], vals[1], vals[2]];
                prop_assert!(holds(&cs, &val), "{:?} violates {:?}", val, cs);
            }
            LabelOutcome::Exhausted => prop_assert!(!any, "exhausted but a solution exists"),
            LabelOutcome::BudgetOut => unreachable!(),
        }
    }

    #[test]
    fn entailment_is_conservative(cs in proptest::collection::vec(leaf(), 0..3), q in constraint()) {
        let (mut s, _) = fresh(&cs);
        if s.propagate().unwrap() == Status::Fixpoint {
            let in_domains = |val: &[i64; NV]| (0..NV).all(|i| s.dom(VarId(i as u32)).contains(val[i]));
            let sat = |val: &[i64; NV]| q.eval(&|v: VarId| val[v.index()]);
            match s.entailment(&q) {
                Entailment::Entailed => prop_assert!(valuations().filter(in_domains).all(|v| sat(&v))),
                Entailment::Disentailed => prop_assert!(!valuations().filter(in_domains).any(|v| sat(&v))),
                Entailment::Unknown => {}
            }
            // graph-aided entailment is judged against the store's solutions
            let sols: Vec<[i64; NV]> = valuations().filter(|v| holds(&cs, v)).collect();
            match s.store_entailment(&q) {
                Entailment::Entailed => prop_assert!(sols.iter().all(sat)),
                Entailment::Disentailed => prop_assert!(!sols.iter().any(sat)),
                Entailment::Unknown => {}
            }
        }
    }

    #[test]
    fn constructive_disjunction_keeps_both_projections(
        cs in proptest::collection::vec(leaf(), 0..3),
        a in constraint(),
        b in constraint(),
    ) {
        let (mut s, v) = fresh(&cs);
        s.post_constructive_disjunction(a.clone(), b.clone());
        let status = s.propagate().unwrap();
        let with = |extra: &Constraint| {
            let mut all = cs.clone();
            all.push(extra.clone());
            valuations().filter(move |val| holds(&all, val)).collect::<Vec<_>>()
        };
        let sols: Vec<[i64; NV]> = with(&a).into_iter().chain(with(&b)).collect();
        if !sols.is_empty() {
            prop_assert_eq!(status, Status::Fixpoint);
        }
        for val in sols {
            for i in 0..NV {
                prop_assert!(s.dom(v[i]).contains(val[i]));
            }
        }
    }

    #[test]
    fn restore_is_exact(cs in proptest::collection::vec(constraint(), 0..3), more in proptest::collection::vec(constraint(), 1..3)) {
        let (mut s, _) = fresh(&cs);
        let _ = s.propagate().unwrap();
        let before = alloc::format!("{s:?}");
        let t = s.snapshot();
        for c in more {
            s.post(c);
        }
        let _ = s.propagate().unwrap();
        s.restore(t).unwrap();
        prop_assert_eq!(alloc::format!("{s:?}"), before);
    }
}

#[test]
fn guard_of_vector_disequality() {
    let (mut s, v) = store_with(IntWidth::W8, 5);
    let head = Constraint::or([Constraint::cmp(v[0], CmpOp::Ne, v[2]), Constraint::cmp(v[1], CmpOp::Ne, v[3])]);
    s.post_guarded(head, goal(Constraint::eq(v[4], 1)));
    s.post(Constraint::eq(v[1], 2));
    s.post(Constraint::eq(v[3], 5));
    s.propagate().unwrap();
    assert_eq!(s.value(v[4]), Some(1));
    assert_eq!(vec![s.value(v[0]), s.value(v[2])], vec![None, None]);
}
