//! One line per acceptance criterion; exits non-zero if any fails.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use invcheck::formats::parse_suite;
use invcheck_core::combinators::post_ite;
use invcheck_core::compile::{compile, solution_graph};
use invcheck_core::frontend::{parse_program, ProgramAst};
use invcheck_core::inference::{evaluate_invariant, generate_candidates, infer, parse_formula, Formula};
use invcheck_core::interpreter::{run, run_suite, RunOutcome};
use invcheck_core::refute::{check_invariant, negate_invariant, CheckConfig, CheckReport, UnknownReason, Verdict};
use invcheck_core::solver::{CmpOp, Constraint, Domain, Goal, Status, Store};
use invcheck_core::ssa::to_ssa;
use invcheck_core::IntWidth;

const INV1: &str = "orig(r) == 0 ==> return == 0";
const INV2: &str = "return == 0 ==> orig(r) == 0";
const INV3: &str = "return >= orig(r)";

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn program(name: &str) -> ProgramAst {
    parse_program(&std::fs::read_to_string(corpus(name)).unwrap()).unwrap()
}

fn check(ast: &ProgramAst, inv: &str, cfg: &CheckConfig) -> CheckReport {
    check_invariant(ast, &parse_formula(inv).unwrap(), cfg).unwrap()
}

fn violates(ast: &ProgramAst, inv: &str, inputs: &[i64], width: IntWidth) -> bool {
    match run(ast, inputs, width, 1_000_000) {
        Ok(RunOutcome::Returned { trace, .. }) => {
            evaluate_invariant(&parse_formula(inv).unwrap(), &trace) == Ok(false)
        }
        _ => false,
    }
}

type Outcome = Result<String, String>;

fn within(limit: Duration, start: Instant, detail: String) -> Outcome {
    let t = start.elapsed();
    if t < limit {
        Ok(format!("{detail}; {} ms < {} ms", t.as_millis(), limit.as_millis()))
    } else {
        Err(format!("{detail}; took {} ms, limit {} ms", t.as_millis(), limit.as_millis()))
    }
}

fn forward_execution() -> Outcome {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_invcheck"))
        .args(["run", corpus("foo.mc").to_str().unwrap(), "5", "3"])
        .output()
        .unwrap();
    let printed = String::from_utf8_lossy(&out.stdout).to_string();
    if printed != "4\n" {
        return Err(format!("run printed {printed:?}"));
    }
    let mut p = compile(&to_ssa(&program("foo.mc")), IntWidth::W8, IntWidth::W8.default_unfold_budget()).unwrap();
    p.store.post(Constraint::eq(p.inputs[0], 5));
    p.store.post(Constraint::eq(p.inputs[1], 3));
    let status = p.store.propagate();
    let (ret, nodes) = (p.store.value(p.output), p.store.stats().label_nodes);
    if status != Ok(Status::Fixpoint) || ret != Some(4) || nodes != 0 {
        return Err(format!("propagation gave {status:?}, RET {ret:?}, {nodes} label nodes"));
    }
    within(Duration::from_secs(1), start, "run prints 4, RET = 4 with 0 label nodes".into())
}

fn disproved(ast: &ProgramAst, inv: &str, known: &[i64], extra: impl Fn(&[(String, i64)], i64) -> bool) -> Outcome {
    let start = Instant::now();
    let r = check(ast, inv, &CheckConfig::default());
    let Verdict::Disproved {
        inputs,
        output,
        interpreter_confirmed,
    } = &r.verdict
    else {
        return Err(format!("verdict {:?}", r.verdict));
    };
    let values: Vec<i64> = inputs.iter().map(|p| p.1).collect();
    if !interpreter_confirmed || !violates(ast, inv, &values, IntWidth::W8) {
        return Err(format!("counterexample {inputs:?} → {output} not confirmed"));
    }
    if !extra(inputs, *output) {
        return Err(format!("counterexample {inputs:?} → {output} has the wrong shape"));
    }
    if !violates(ast, inv, known, IntWidth::W8) {
        return Err(format!("instance {known:?} does not violate"));
    }
    within(
        Duration::from_secs(5),
        start,
        format!("counterexample {inputs:?} → {output}, instance {known:?} violates"),
    )
}

fn propagation_shape() -> Outcome {
    let ast = program("foo.mc");
    let mut p = compile(&to_ssa(&ast), IntWidth::W8, IntWidth::W8.default_unfold_budget()).unwrap();
    let neg = negate_invariant(&parse_formula(INV1).unwrap(), &ast.params, &p).unwrap();
    p.store.post(neg);
    let status = p.store.propagate();
    let ret = p.store.dom(p.output).clone();
    let n0 = p.store.dom(p.inputs[0]).clone();
    let want_ret = Domain::from_intervals([(-128, -1), (1, 127)]);
    if status == Ok(Status::Fixpoint) && ret == want_ret && n0 == Domain::full(IntWidth::W8) {
        Ok(format!("RET ∈ {ret}, N0 ∈ {n0}"))
    } else {
        Err(format!("{status:?}: RET ∈ {ret}, N0 ∈ {n0}"))
    }
}

fn proof_without_search() -> Outcome {
    let start = Instant::now();
    let r = check(&program("foo.mc"), INV3, &CheckConfig::default());
    let detail = format!(
        "{:?}, {} label nodes, {} unfoldings",
        r.verdict, r.stats.label_nodes, r.stats.unfoldings
    );
    if r.verdict != Verdict::Proved || r.stats.label_nodes != 0 || r.stats.unfoldings != 127 {
        return Err(detail);
    }
    within(Duration::from_secs(30), start, detail)
}

fn constructive_disjunction() -> Outcome {
    let mut st = Store::new(IntWidth::W8);
    let [c, x0, x1, x2] = std::array::from_fn(|_| st.new_var(None));
    let start = Instant::now();
    let then_goal: Goal = Arc::new(move |s: &mut Store| s.post(Constraint::eq(x0, 1)));
    let else_goal: Goal = Arc::new(move |s: &mut Store| s.post(Constraint::eq(x1, 3)));
    post_ite(&mut st, Constraint::cmp(c, CmpOp::Gt, 0), &[x0], &[x1], &[x2], then_goal, else_goal, &[]);
    let status = st.propagate();
    let t = start.elapsed();
    let d = st.dom(x2).clone();
    if status != Ok(Status::Fixpoint) || d != Domain::from_values([1, 3]) {
        return Err(format!("X2 ∈ {d}"));
    }
    if t >= Duration::from_millis(1) {
        return Err(format!("X2 ∈ {d}; took {} µs, limit 1000 µs", t.as_micros()));
    }
    Ok(format!("X2 ∈ {d}; {} µs < 1000 µs", t.as_micros()))
}

fn inferred() -> Result<Vec<Formula>, String> {
    let ast = program("foo.mc");
    let suite = parse_suite(&std::fs::read_to_string(corpus("foo_suite25.txt")).unwrap()).unwrap();
    let runs = run_suite(&ast, &suite, IntWidth::W32, 1_000_000);
    if suite.len() < 25 || !runs.excluded.is_empty() {
        return Err(format!("{} cases, {} left out", suite.len(), runs.excluded.len()));
    }
    let unfold: BTreeSet<i64> = suite.iter().map(|c| c[0].max(0)).collect();
    if unfold.first() != Some(&0) || unfold.last() != Some(&454) {
        return Err(format!("unfoldings span {:?}..{:?}", unfold.first(), unfold.last()));
    }
    let out = infer(&runs.traces).map_err(|e| e.to_string())?;
    for f in &out {
        if !runs.traces.iter().all(|t| evaluate_invariant(f, t) == Ok(true)) {
            return Err(format!("reported `{f}` is false on a trace"));
        }
    }
    Ok(out)
}

fn inference_reproduction() -> Outcome {
    let out = inferred()?;
    let text: Vec<String> = out.iter().map(|f| f.to_string()).collect();
    for want in [INV1, INV2, INV3] {
        if !text.iter().any(|t| t == want) {
            return Err(format!("`{want}` not among {} invariants", text.len()));
        }
    }
    Ok(format!("{} invariants, all three present, all true on 25 traces", text.len()))
}

fn end_to_end() -> Outcome {
    let out = inferred()?;
    let ast = program("foo.mc");
    let mut verdicts = Vec::new();
    for want in [INV1, INV2, INV3] {
        let f = out
            .iter()
            .find(|f| f.to_string() == want)
            .ok_or_else(|| format!("`{want}` not inferred"))?;
        verdicts.push(match check_invariant(&ast, f, &CheckConfig::default()).unwrap().verdict {
            Verdict::Proved => "proved",
            Verdict::Disproved { .. } => "disproved",
            _ => "other",
        });
    }
    let mut sorted = verdicts.clone();
    sorted.sort();
    if sorted == ["disproved", "disproved", "proved"] {
        Ok(format!("{verdicts:?}"))
    } else {
        Err(format!("{verdicts:?}"))
    }
}

fn interpreter_graph(ast: &ProgramAst, width: IntWidth) -> BTreeSet<(Vec<i64>, i64)> {
    let mut out = BTreeSet::new();
    for a in width.values() {
        for b in width.values() {
            if let Ok(RunOutcome::Returned { value, .. }) = run(ast, &[a, b], width, 100_000) {
                out.insert((vec![a, b], value));
            }
        }
    }
    out
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let w = IntWidth::W4;
    let names = [
        "foo.mc",
        "nested_if.mc",
        "sequential_loops.mc",
        "gcd.mc",
        "catch_up.mc",
        "div_neg.mc",
    ];
    let seeds = [[0, 0], [1, 2], [-3, 1], [5, -2], [2, 2], [7, 3]];
    let mut checks = 0;
    for name in names {
        let ast = program(name);
        let graph = solution_graph(&to_ssa(&ast), w).unwrap();
        let truth = interpreter_graph(&ast, w);
        if graph != truth {
            return Err(format!("{name}: solution graph differs ({} vs {} pairs)", graph.len(), truth.len()));
        }
        let suite: Vec<Vec<i64>> = seeds.iter().map(|s| s.to_vec()).collect();
        let traces = run_suite(&ast, &suite, w, 100_000).traces;
        let pool = generate_candidates(&traces).unwrap();
        let cfg = CheckConfig {
            width: w,
            ..CheckConfig::default()
        };
        let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
        let chunk = pool.len().div_ceil(jobs).max(1);
        let mismatch = std::thread::scope(|s| {
            let handles: Vec<_> = pool
                .chunks(chunk)
                .map(|part| {
                    let (ast, cfg, truth) = (&ast, &cfg, &truth);
                    s.spawn(move || {
                        for f in part {
                            let holds = truth.iter().all(|(i, o)| {
                                f.eval(&|t| match t {
                                    invcheck_core::inference::InvTerm::Return => Some(*o),
                                    invcheck_core::inference::InvTerm::Orig(p) => {
                                        ast.params.iter().position(|q| q == p).map(|k| i[k])
                                    }
                                    invcheck_core::inference::InvTerm::Int(n) => Some(*n),
                                }) == Ok(true)
                            });
                            let v = check_invariant(ast, f, cfg).unwrap().verdict;
                            let ok = match v {
                                Verdict::Proved => holds,
                                Verdict::Disproved { .. } => !holds,
                                _ => false,
                            };
                            if !ok {
                                return Some(format!("`{f}`: {v:?}, brute force says holds = {holds}"));
                            }
                        }
                        None
                    })
                })
                .collect();
            handles.into_iter().find_map(|h| h.join().unwrap())
        });
        if let Some(m) = mismatch {
            return Err(format!("{name}: {m}"));
        }
        checks += pool.len();
    }
    within(
        Duration::from_secs(300),
        start,
        format!("{} programs, graphs equal, {checks} pool verdicts match", names.len()),
    )
}

fn degradation() -> Outcome {
    let ast = program("foo.mc");
    let low_unfold = CheckConfig {
        unfold_budget: Some(10),
        ..CheckConfig::default()
    };
    let v3 = check(&ast, INV3, &low_unfold).verdict;
    if v3 != Verdict::Unknown(UnknownReason::UnfoldBudget) {
        return Err(format!("invariant 3 with 10 unfoldings: {v3:?}"));
    }
    let low_label = CheckConfig {
        label_budget: 1,
        ..CheckConfig::default()
    };
    let v1 = check(&ast, INV1, &low_label).verdict;
    match v1 {
        Verdict::Unknown(_) | Verdict::Disproved { .. } => Ok(format!("{v3:?}; {v1:?}")),
        v => Err(format!("invariant 1 with label budget 1: {v:?}")),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("forward execution", forward_execution),
        ("invariant 1 disproved", || {
            disproved(&program("foo.mc"), INV1, &[1, 0], |i, o| i[1].1 == 0 && o != 0)
        }),
        ("propagation shape", propagation_shape),
        ("invariant 2 disproved", || disproved(&program("foo.mc"), INV2, &[1, -1], |_, _| true)),
        ("invariant 3 proved", proof_without_search),
        ("constructive disjunction", constructive_disjunction),
        ("inference reproduction", inference_reproduction),
        ("end-to-end triple", end_to_end),
        ("oracle equivalence", oracle_equivalence),
        ("verdict degradation", degradation),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
