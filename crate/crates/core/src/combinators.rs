//! The `ite` and `w` control-flow combinators, built from guarded
//! constraints and constructive disjunction.
//!
//! `ite(C, v0, v1, v2, Then, Else)` posts five members of one group:
//!
//! ```text
//! C                      → Then ∧ v2 = v0
//! ¬C                     → Else ∧ v2 = v1
//! ¬(C ∧ Then ∧ v2 = v0)  → ¬C ∧ Else ∧ v2 = v1
//! ¬(¬C ∧ Else ∧ v2 = v1) → C ∧ Then ∧ v2 = v0
//! (C ∧ Then ∧ v2 = v0) ⊻ (¬C ∧ Else ∧ v2 = v1)
//! ```
//!
//! `w(C, v0, v1, v2, Body)` posts four:
//!
//! ```text
//! C                    → Body ∧ w(C', v1, v3, v2, Body')
//! ¬C                   → v2 = v0
//! ¬(C ∧ Body)          → ¬C ∧ v2 = v0
//! ¬(¬C ∧ v0 = v2)      → C ∧ Body ∧ w(C', v1, v3, v2, Body')
//! ```
//!
//! The inner `w` is materialized only when a guard fires. When the unfold
//! budget is spent the inner `w` is dropped and the store is tainted.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::solver::{Constraint, Goal, GuardSpec, Head, Store, VarId};

/// A loop's condition and body, instantiable over any vector of variables
/// positionally matching the loop-carried names.
pub trait LoopTemplate: Send + Sync {
    /// Base names of the loop-carried variables.
    fn names(&self) -> &[String];

    /// Posts the definitions the condition needs over `current` and
    /// returns the condition.
    fn cond(&self, store: &mut Store, current: &[VarId]) -> Constraint;

    /// Posts one iteration reading `current` and defining `next`.
    fn body(&self, store: &mut Store, current: &[VarId], next: &[VarId]);

    /// Loop-invariant variables the condition or body read.
    fn reads(&self) -> Vec<VarId> {
        Vec::new()
    }
}

fn watch_list(parts: &[&[VarId]], cond: &Constraint) -> Vec<VarId> {
    let mut w: Vec<VarId> = parts.iter().flat_map(|p| p.iter().copied()).collect();
    cond.vars(&mut w);
    w
}

/// Posts `ite`. `then_t` must define `v0` and `else_t` must define `v1`;
/// `reads` lists the variables the branches read.
#[allow(clippy::too_many_arguments)]
pub fn post_ite(
    store: &mut Store,
    cond: Constraint,
    v0: &[VarId],
    v1: &[VarId],
    v2: &[VarId],
    then_t: Goal,
    else_t: Goal,
    reads: &[VarId],
) {
    assert!(v0.len() == v1.len() && v1.len() == v2.len(), "φ vectors differ in length");
    let not_cond = cond.negate();
    let then_eq = Constraint::vec_eq(v2, v0);
    let else_eq = Constraint::vec_eq(v2, v1);

    let then_body: Goal = {
        let (t, eq) = (then_t.clone(), then_eq.clone());
        Arc::new(move |s: &mut Store| {
            t(s);
            s.post(eq.clone());
        })
    };
    let else_body: Goal = {
        let (e, eq) = (else_t.clone(), else_eq.clone());
        Arc::new(move |s: &mut Store| {
            e(s);
            s.post(eq.clone());
        })
    };
    let then_full: Goal = {
        let (c, t) = (cond.clone(), then_body.clone());
        Arc::new(move |s: &mut Store| {
            s.post(c.clone());
            t(s);
        })
    };
    let else_full: Goal = {
        let (c, e) = (not_cond.clone(), else_body.clone());
        Arc::new(move |s: &mut Store| {
            s.post(c.clone());
            e(s);
        })
    };

    let group = Some(store.new_group());
    let watch = watch_list(&[v0, v1, v2, reads], &cond);
    store.add_guard(GuardSpec {
        head: Head::Ask(cond),
        tail: then_body,
        group,
        speculative: true,
        watch: watch.clone(),
    });
    store.add_guard(GuardSpec {
        head: Head::Ask(not_cond),
        tail: else_body,
        group,
        speculative: true,
        watch: watch.clone(),
    });
    store.add_guard(GuardSpec {
        head: Head::Refute(then_full.clone()),
        tail: else_full.clone(),
        group,
        speculative: false,
        watch: watch.clone(),
    });
    store.add_guard(GuardSpec {
        head: Head::Refute(else_full.clone()),
        tail: then_full.clone(),
        group,
        speculative: false,
        watch: watch.clone(),
    });
    store.add_disjunction(then_full, else_full, group, watch);
}

/// Posts `w` over the loop described by `tmpl`. `v0` holds the values on
/// entry, `v1` receives the values after one iteration and `v2` the values
/// after the loop.
pub fn post_w(
    store: &mut Store,
    tmpl: Arc<dyn LoopTemplate>,
    v0: Vec<VarId>,
    v1: Vec<VarId>,
    v2: Vec<VarId>,
    depth_left: u64,
) {
    assert!(v0.len() == v1.len() && v1.len() == v2.len(), "φ vectors differ in length");
    let cond = tmpl.cond(store, &v0);
    let not_cond = cond.negate();
    let exit_eq = Constraint::vec_eq(&v2, &v0);

    let enter: Goal = {
        let (tmpl, v0, v1, v2) = (tmpl.clone(), v0.clone(), v1.clone(), v2.clone());
        Arc::new(move |s: &mut Store| {
            tmpl.body(s, &v0, &v1);
            if depth_left == 0 {
                s.taint();
            } else {
                s.note_unfold();
                let v3: Vec<VarId> = tmpl
                    .names()
                    .iter()
                    .map(|n| s.new_var(Some(&format!("{n}'"))))
                    .collect();
                post_w(s, tmpl.clone(), v1.clone(), v3, v2.clone(), depth_left - 1);
            }
        })
    };
    let attempt: Goal = {
        let (c, tmpl, v0, v1) = (cond.clone(), tmpl.clone(), v0.clone(), v1.clone());
        Arc::new(move |s: &mut Store| {
            s.post(c.clone());
            tmpl.body(s, &v0, &v1);
        })
    };
    let skip: Goal = {
        let eq = exit_eq.clone();
        Arc::new(move |s: &mut Store| s.post(eq.clone()))
    };
    let refuted_skip: Goal = {
        let c = Constraint::and([not_cond.clone(), exit_eq.clone()]);
        Arc::new(move |s: &mut Store| s.post(c.clone()))
    };
    let forced_enter: Goal = {
        let (c, enter) = (cond.clone(), enter.clone());
        Arc::new(move |s: &mut Store| {
            s.post(c.clone());
            enter(s);
        })
    };
    let changed = Constraint::or(
        core::iter::once(cond.clone()).chain(
            v0.iter()
                .zip(&v2)
                .map(|(&a, &b)| Constraint::cmp(a, crate::solver::CmpOp::Ne, b)),
        ),
    );

    let group = Some(store.new_group());
    let watch = watch_list(&[&v0, &v2, &tmpl.reads()], &cond);
    for (head, tail) in [
        (Head::Ask(cond), enter),
        (Head::Ask(not_cond), skip),
        (Head::Refute(attempt), refuted_skip),
        (Head::Ask(changed), forced_enter),
    ] {
        store.add_guard(GuardSpec {
            head,
            tail,
            group,
            speculative: false,
            watch: watch.clone(),
        });
    }
}

/// The refutation guard of `w` on its own: when `C ∧ Body` over `v0 → v1`
/// fails speculatively, posts `¬C ∧ v2 = v0`. Returns whether it did.
pub fn check_body_contradiction(
    store: &mut Store,
    tmpl: &Arc<dyn LoopTemplate>,
    v0: &[VarId],
    v1: &[VarId],
    v2: &[VarId],
) -> bool {
    let cond = tmpl.cond(store, v0);
    let attempt: Goal = {
        let (c, tmpl, v0, v1) = (cond.clone(), tmpl.clone(), v0.to_vec(), v1.to_vec());
        Arc::new(move |s: &mut Store| {
            s.post(c.clone());
            tmpl.body(s, &v0, &v1);
        })
    };
    if store.refutes(&attempt) {
        store.post(Constraint::and([cond.negate(), Constraint::vec_eq(v2, v0)]));
        true
    } else {
        false
    }
}
