//! Finite-domain constraint store.
//!
//! Domains are interval unions. Primitive propagators run from a FIFO agenda;
//! once it is empty, suspended reactors (guarded constraints and
//! constructive disjunctions) are re-examined in registration order. All
//! state changes are trailed while a snapshot is open, so `restore` is exact.
//!
//! Guards decide entailment against the domains plus a difference-bound
//! graph built from posted `x ≤ y + c` style constraints. Speculative
//! propagation (used by refutation heads and constructive disjunction) is
//! shallow: it runs primitives and reactors marked speculative only.

mod constraint;
mod domain;
mod propagators;

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

pub use constraint::{ArithOp, CmpOp, Constraint, Term, VarId};
pub use domain::{ByMagnitude, Domain, MAX_INTERVALS};

use crate::IntWidth;

/// Deferred constraint poster.
pub type Goal = Arc<dyn Fn(&mut Store) + Send + Sync>;

/// Returns true once the caller's time limit has passed.
pub type Deadline = Arc<dyn Fn() -> bool + Send + Sync>;

pub const DEFAULT_PROPAGATION_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum Abort {
    #[error("propagation budget exhausted")]
    PropagationBudget,
    #[error("wall-clock limit reached")]
    WallClock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("restore or release must target the most recent open snapshot")]
pub struct TokenOrderViolation;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Fixpoint,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entailment {
    Entailed,
    Disentailed,
    Unknown,
}

impl Entailment {
    pub fn not(self) -> Entailment {
        match self {
            Entailment::Entailed => Entailment::Disentailed,
            Entailment::Disentailed => Entailment::Entailed,
            Entailment::Unknown => Entailment::Unknown,
        }
    }
}

/// Snapshot handle; consumed by `restore` or `release`.
#[derive(Debug)]
#[must_use]
pub struct Token {
    depth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupId(u32);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelOutcome {
    Solution(Vec<i64>),
    Exhausted,
    BudgetOut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelEnd {
    Stopped,
    Exhausted,
    BudgetOut,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub propagations: u64,
    pub unfoldings: u64,
    pub label_nodes: u64,
}

pub enum Head {
    Ask(Constraint),
    /// Entailed when speculatively posting the goal fails.
    Refute(Goal),
}

pub struct GuardSpec {
    pub head: Head,
    pub tail: Goal,
    /// Once any member of a group fires, the others are discarded.
    pub group: Option<GroupId>,
    /// Whether the guard may run inside speculative propagation.
    pub speculative: bool,
    /// Extra variables whose changes re-examine the guard.
    pub watch: Vec<VarId>,
}

struct VarState {
    dom: Domain,
    origin: Option<String>,
    props: Vec<u32>,
    reactors: Vec<u32>,
    out: Vec<u32>,
}

#[derive(Clone, Copy)]
enum Prop {
    Cmp {
        x: VarId,
        op: CmpOp,
        y: VarId,
    },
    Arith {
        x: VarId,
        op: ArithOp,
        y: Term,
        z: Term,
        negated: bool,
    },
}

impl Prop {
    fn vars(self) -> impl Iterator<Item = VarId> {
        let (a, b, c) = match self {
            Prop::Cmp { x, y, .. } => (Some(x), Some(y), None),
            Prop::Arith { x, y, z, .. } => (Some(x), y.var(), z.var()),
        };
        a.into_iter().chain(b).chain(c)
    }
}

enum ReactorKind {
    Guard { head: Head, tail: Goal },
    Disjunction { branches: [Goal; 2] },
}

struct Reactor {
    kind: Arc<ReactorKind>,
    alive: bool,
    group: Option<u32>,
    speculative: bool,
    watch: Vec<VarId>,
}

/// `to - from ≤ w`
#[derive(Clone, Copy)]
struct Edge {
    from: VarId,
    to: VarId,
    w: i64,
}

enum TrailEntry {
    Dom(VarId, Domain),
    Dead(u32),
    Group(u32),
    Taint(bool),
}

struct Frame {
    trail: usize,
    nvars: usize,
    nprops: usize,
    nreactors: usize,
    ngroups: usize,
    nedges: usize,
    queue: VecDeque<u32>,
    pending: BTreeSet<u32>,
    failed: bool,
}

pub struct Store {
    width: IntWidth,
    vars: Vec<VarState>,
    props: Vec<Prop>,
    queued: Vec<bool>,
    queue: VecDeque<u32>,
    reactors: Vec<Reactor>,
    pending: BTreeSet<u32>,
    groups: Vec<bool>,
    edges: Vec<Edge>,
    trail: Vec<TrailEntry>,
    frames: Vec<Frame>,
    failed: bool,
    spec_depth: u32,
    taint: bool,
    taint_ever: bool,
    stats: Stats,
    prop_budget: u64,
    deadline: Option<Deadline>,
    abort: Option<Abort>,
}

impl Store {
    pub fn new(width: IntWidth) -> Self {
        Store {
            width,
            vars: Vec::new(),
            props: Vec::new(),
            queued: Vec::new(),
            queue: VecDeque::new(),
            reactors: Vec::new(),
            pending: BTreeSet::new(),
            groups: Vec::new(),
            edges: Vec::new(),
            trail: Vec::new(),
            frames: Vec::new(),
            failed: false,
            spec_depth: 0,
            taint: false,
            taint_ever: false,
            stats: Stats::default(),
            prop_budget: DEFAULT_PROPAGATION_BUDGET,
            deadline: None,
            abort: None,
        }
    }

    pub fn width(&self) -> IntWidth {
        self.width
    }

    pub fn set_propagation_budget(&mut self, budget: u64) {
        self.prop_budget = budget;
    }

    pub fn set_deadline(&mut self, deadline: Option<Deadline>) {
        self.deadline = deadline;
    }

    pub fn stats(&self) -> Stats {
        self.stats
    }

    pub fn abort_reason(&self) -> Option<Abort> {
        self.abort
    }

    pub fn is_failed(&self) -> bool {
        self.failed
    }

    /// Taint on the current search branch.
    pub fn is_tainted(&self) -> bool {
        self.taint
    }

    /// Whether any branch was ever tainted.
    pub fn was_tainted(&self) -> bool {
        self.taint_ever
    }

    pub fn is_speculating(&self) -> bool {
        self.spec_depth > 0
    }

    pub fn var_count(&self) -> usize {
        self.vars.len()
    }

    pub fn new_var(&mut self, origin: Option<&str>) -> VarId {
        let id = VarId(self.vars.len() as u32);
        self.vars.push(VarState {
            dom: Domain::full(self.width),
            origin: origin.map(String::from),
            props: Vec::new(),
            reactors: Vec::new(),
            out: Vec::new(),
        });
        id
    }

    pub fn dom(&self, v: VarId) -> &Domain {
        &self.vars[v.index()].dom
    }

    pub fn value(&self, v: VarId) -> Option<i64> {
        self.dom(v).value()
    }

    pub fn origin(&self, v: VarId) -> Option<&str> {
        self.vars[v.index()].origin.as_deref()
    }

    pub fn new_group(&mut self) -> GroupId {
        self.groups.push(false);
        GroupId(self.groups.len() as u32 - 1)
    }

    fn term_dom(&self, t: Term) -> Domain {
        match t {
            Term::Var(v) => self.dom(v).clone(),
            Term::Const(c) => Domain::singleton(c),
        }
    }

    fn record(&mut self, e: TrailEntry) {
        if !self.frames.is_empty() {
            self.trail.push(e);
        }
    }

    fn fail(&mut self) {
        self.failed = true;
    }

    /// Intersects `v`'s domain with `d`.
    fn narrow(&mut self, v: VarId, d: &Domain) {
        let cur = &self.vars[v.index()].dom;
        let new = cur.intersect(d);
        if new == *cur {
            return;
        }
        let old = core::mem::replace(&mut self.vars[v.index()].dom, new);
        self.record(TrailEntry::Dom(v, old));
        if self.vars[v.index()].dom.is_empty() {
            self.fail();
            return;
        }
        self.wake(v);
    }

    fn wake(&mut self, v: VarId) {
        let state = &self.vars[v.index()];
        for &p in &state.props {
            if !self.queued[p as usize] {
                self.queued[p as usize] = true;
                self.queue.push_back(p);
            }
        }
        for &r in &state.reactors {
            if self.reactors[r as usize].alive {
                self.pending.insert(r);
            }
        }
    }

    fn wake_reactors(&mut self, v: VarId) {
        for &r in &self.vars[v.index()].reactors {
            if self.reactors[r as usize].alive {
                self.pending.insert(r);
            }
        }
    }

    fn add_prop(&mut self, p: Prop) {
        let id = self.props.len() as u32;
        self.props.push(p);
        self.queued.push(true);
        self.queue.push_back(id);
        for v in p.vars() {
            self.vars[v.index()].props.push(id);
        }
    }

    fn add_edge(&mut self, from: VarId, to: VarId, w: i64) {
        let id = self.edges.len() as u32;
        self.edges.push(Edge { from, to, w });
        self.vars[from.index()].out.push(id);
        self.wake_reactors(from);
        self.wake_reactors(to);
    }

    /// Adds `c`; propagation happens in `propagate`.
    pub fn post(&mut self, c: Constraint) {
        if self.failed {
            return;
        }
        match c {
            Constraint::True => {}
            Constraint::False => self.fail(),
            Constraint::Cmp(a, op, b) => self.post_cmp(a, op, b),
            Constraint::Arith {
                target,
                op,
                lhs,
                rhs,
            } => {
                match (op, lhs, rhs) {
                    (ArithOp::Add, Term::Var(y), Term::Const(c))
                    | (ArithOp::Add, Term::Const(c), Term::Var(y)) => {
                        self.add_edge(y, target, c);
                        self.add_edge(target, y, -c);
                    }
                    (ArithOp::Sub, Term::Var(y), Term::Const(c)) => {
                        self.add_edge(y, target, -c);
                        self.add_edge(target, y, c);
                    }
                    _ => {}
                }
                self.add_prop(Prop::Arith {
                    x: target,
                    op,
                    y: lhs,
                    z: rhs,
                    negated: false,
                });
            }
            Constraint::ArithNe {
                target,
                op,
                lhs,
                rhs,
            } => self.add_prop(Prop::Arith {
                x: target,
                op,
                y: lhs,
                z: rhs,
                negated: true,
            }),
            Constraint::And(cs) => {
                for c in cs {
                    self.post(c);
                }
            }
            Constraint::Or(mut cs) => {
                if cs.len() == 1 {
                    return self.post(cs.pop().unwrap());
                }
                let first = cs.remove(0);
                let rest = Constraint::or(cs);
                self.post_constructive_disjunction(first, rest);
            }
        }
    }

    fn post_cmp(&mut self, a: Term, op: CmpOp, b: Term) {
        match (a, b) {
            (Term::Const(x), Term::Const(y)) => {
                if !op.eval(x, y) {
                    self.fail();
                }
            }
            (Term::Const(k), Term::Var(v)) => self.post_cmp(Term::Var(v), op.swap(), Term::Const(k)),
            (Term::Var(v), Term::Const(k)) => {
                let d = self.dom(v);
                let new = match op {
                    CmpOp::Eq => d.intersect(&Domain::singleton(k)),
                    CmpOp::Ne => d.remove(k),
                    CmpOp::Lt => d.restrict(i64::MIN, k.saturating_sub(1)),
                    CmpOp::Le => d.restrict(i64::MIN, k),
                    CmpOp::Gt => d.restrict(k.saturating_add(1), i64::MAX),
                    CmpOp::Ge => d.restrict(k, i64::MAX),
                };
                self.narrow(v, &new);
            }
            (Term::Var(x), Term::Var(y)) if x == y => {
                if !op.eval(0, 0) {
                    self.fail();
                }
            }
            (Term::Var(x), Term::Var(y)) => {
                let (x, op, y) = match op {
                    CmpOp::Gt => (y, CmpOp::Lt, x),
                    CmpOp::Ge => (y, CmpOp::Le, x),
                    _ => (x, op, y),
                };
                match op {
                    CmpOp::Eq => {
                        self.add_edge(x, y, 0);
                        self.add_edge(y, x, 0);
                    }
                    CmpOp::Lt => self.add_edge(y, x, -1),
                    CmpOp::Le => self.add_edge(y, x, 0),
                    _ => {}
                }
                self.add_prop(Prop::Cmp { x, op, y });
            }
        }
    }

    fn run_prop(&mut self, id: u32) {
        match self.props[id as usize] {
            Prop::Cmp { x, op, y } => {
                let [nx, ny] = propagators::cmp(op, self.dom(x), self.dom(y));
                self.narrow(x, &nx);
                if !self.failed {
                    self.narrow(y, &ny);
                }
            }
            Prop::Arith {
                x,
                op,
                y,
                z,
                negated: false,
            } => {
                let [nx, ny, nz] =
                    propagators::arith(op, self.dom(x), &self.term_dom(y), &self.term_dom(z));
                if nx.is_empty() || ny.is_empty() || nz.is_empty() {
                    return self.fail();
                }
                self.narrow(x, &nx);
                for (t, d) in [(y, ny), (z, nz)] {
                    if let (Term::Var(v), false) = (t, self.failed) {
                        self.narrow(v, &d);
                    }
                }
            }
            Prop::Arith {
                x,
                op,
                y,
                z,
                negated: true,
            } => {
                let (a, b) = (self.term_dom(y).value(), self.term_dom(z).value());
                if let (Some(a), Some(b)) = (a, b) {
                    if let Some(r) = op.eval(a, b) {
                        if let Ok(r) = i64::try_from(r) {
                            let d = self.dom(x).remove(r);
                            self.narrow(x, &d);
                        }
                    }
                }
            }
        }
    }

    fn clear_agenda(&mut self) {
        for p in self.queue.drain(..) {
            self.queued[p as usize] = false;
        }
        self.pending.clear();
    }

    /// Runs propagators and reactors to a fixpoint or failure.
    pub fn propagate(&mut self) -> Result<Status, Abort> {
        loop {
            if let Some(a) = self.abort {
                return Err(a);
            }
            if self.failed {
                self.clear_agenda();
                return Ok(Status::Failed);
            }
            if let Some(p) = self.queue.pop_front() {
                self.queued[p as usize] = false;
                self.stats.propagations += 1;
                if self.stats.propagations > self.prop_budget {
                    self.abort = Some(Abort::PropagationBudget);
                    continue;
                }
                if self.stats.propagations % 1024 == 0 && self.deadline_passed() {
                    self.abort = Some(Abort::WallClock);
                    continue;
                }
                self.run_prop(p);
                continue;
            }
            if let Some(r) = self.pending.pop_first() {
                if self.spec_depth > 0 && !self.reactors[r as usize].speculative {
                    continue;
                }
                self.run_reactor(r);
                continue;
            }
            return Ok(Status::Fixpoint);
        }
    }

    fn deadline_passed(&self) -> bool {
        self.deadline.as_ref().is_some_and(|d| d())
    }

    fn add_reactor(&mut self, kind: ReactorKind, group: Option<GroupId>, speculative: bool, mut watch: Vec<VarId>) {
        watch.sort_unstable();
        watch.dedup();
        let id = self.reactors.len() as u32;
        for v in &watch {
            self.vars[v.index()].reactors.push(id);
        }
        self.reactors.push(Reactor {
            kind: Arc::new(kind),
            alive: true,
            group: group.map(|g| g.0),
            speculative,
            watch,
        });
        self.pending.insert(id);
    }

    /// Suspends `head → tail`.
    pub fn post_guarded(&mut self, head: Constraint, tail: Goal) {
        self.add_guard(GuardSpec {
            head: Head::Ask(head),
            tail,
            group: None,
            speculative: true,
            watch: Vec::new(),
        });
    }

    pub fn add_guard(&mut self, spec: GuardSpec) {
        let mut watch = spec.watch;
        if let Head::Ask(c) = &spec.head {
            c.vars(&mut watch);
        }
        self.add_reactor(
            ReactorKind::Guard {
                head: spec.head,
                tail: spec.tail,
            },
            spec.group,
            spec.speculative,
            watch,
        );
    }

    /// Constructive disjunction of two goals, re-examined when `watch` changes.
    pub fn add_disjunction(&mut self, a: Goal, b: Goal, group: Option<GroupId>, watch: Vec<VarId>) {
        self.add_reactor(ReactorKind::Disjunction { branches: [a, b] }, group, false, watch);
    }

    pub fn post_constructive_disjunction(&mut self, c1: Constraint, c2: Constraint) {
        let mut watch = Vec::new();
        c1.vars(&mut watch);
        c2.vars(&mut watch);
        let group = self.new_group();
        let a: Goal = Arc::new(move |s: &mut Store| s.post(c1.clone()));
        let b: Goal = Arc::new(move |s: &mut Store| s.post(c2.clone()));
        self.add_disjunction(a, b, Some(group), watch);
    }

    fn kill(&mut self, r: u32) {
        if self.reactors[r as usize].alive {
            self.reactors[r as usize].alive = false;
            self.record(TrailEntry::Dead(r));
        }
    }

    fn commit(&mut self, r: u32) {
        self.kill(r);
        if let Some(g) = self.reactors[r as usize].group {
            if !self.groups[g as usize] {
                self.groups[g as usize] = true;
                self.record(TrailEntry::Group(g));
            }
        }
    }

    fn run_reactor(&mut self, r: u32) {
        let re = &self.reactors[r as usize];
        if !re.alive {
            return;
        }
        if re.group.is_some_and(|g| self.groups[g as usize]) {
            return self.kill(r);
        }
        let kind = re.kind.clone();
        match &*kind {
            ReactorKind::Guard {
                head: Head::Ask(c),
                tail,
            } => match self.entail(c, true) {
                Entailment::Entailed => {
                    self.commit(r);
                    tail(self);
                }
                Entailment::Disentailed => self.kill(r),
                Entailment::Unknown => {}
            },
            ReactorKind::Guard {
                head: Head::Refute(goal),
                tail,
            } => {
                if self.refutes(goal) {
                    self.commit(r);
                    tail(self);
                }
            }
            ReactorKind::Disjunction { branches: [a, b] } => {
                let ra = self.speculate(a, true);
                if self.abort.is_some() {
                    return;
                }
                let rb = self.speculate(b, true);
                if self.abort.is_some() {
                    return;
                }
                match (ra, rb) {
                    (None, None) => {
                        self.kill(r);
                        self.fail();
                    }
                    (Some(_), None) => {
                        self.commit(r);
                        a(self);
                    }
                    (None, Some(_)) => {
                        self.commit(r);
                        b(self);
                    }
                    (Some(da), Some(db)) => {
                        for (v, d1) in da {
                            if let Some(d2) = db.get(&v) {
                                self.narrow(v, &d1.union(d2));
                                if self.failed {
                                    return;
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    /// Posts `goal` on a snapshot and propagates shallowly. `None` means
    /// failure; otherwise the final domains of pre-existing variables that
    /// changed (collected only when `collect`).
    fn speculate(&mut self, goal: &Goal, collect: bool) -> Option<BTreeMap<VarId, Domain>> {
        let nvars = self.vars.len();
        let token = self.snapshot();
        let start = self.trail.len();
        self.spec_depth += 1;
        goal(self);
        let status = self.propagate();
        self.spec_depth -= 1;
        let out = match status {
            Ok(Status::Failed) => None,
            Err(_) => Some(BTreeMap::new()),
            Ok(Status::Fixpoint) => {
                let mut touched = BTreeMap::new();
                if collect {
                    for e in &self.trail[start..] {
                        if let TrailEntry::Dom(v, _) = e {
                            if v.index() < nvars {
                                touched.entry(*v).or_insert_with(|| self.vars[v.index()].dom.clone());
                            }
                        }
                    }
                }
                Some(touched)
            }
        };
        self.restore(token).expect("speculation restores its own snapshot");
        out
    }

    /// Whether speculatively posting `goal` leads to failure.
    pub fn refutes(&mut self, goal: &Goal) -> bool {
        self.speculate(goal, false).is_none() && self.abort.is_none()
    }

    /// Marks the current branch, and the run, as relying on a relaxation.
    pub fn taint(&mut self) {
        if !self.taint {
            self.record(TrailEntry::Taint(false));
            self.taint = true;
        }
        self.taint_ever = true;
    }

    /// Counts one loop unfolding outside speculation.
    pub fn note_unfold(&mut self) {
        if self.spec_depth == 0 {
            self.stats.unfoldings += 1;
        }
    }

    /// Three-valued entailment against the current domains only.
    pub fn entailment(&self, c: &Constraint) -> Entailment {
        self.entail(c, false)
    }

    /// Entailment against the domains and the difference-bound graph, as
    /// used by guards.
    pub fn store_entailment(&self, c: &Constraint) -> Entailment {
        self.entail(c, true)
    }

    fn entail(&self, c: &Constraint, graph: bool) -> Entailment {
        use Entailment::*;
        if self.failed {
            // no valuation left, so everything holds vacuously
            return Entailed;
        }
        match c {
            Constraint::True => Entailed,
            Constraint::False => Disentailed,
            Constraint::Cmp(a, op, b) => match (*a, *b) {
                (Term::Const(x), Term::Const(y)) => {
                    if op.eval(x, y) {
                        Entailed
                    } else {
                        Disentailed
                    }
                }
                (Term::Var(v), Term::Const(k)) => var_const(self.dom(v), *op, k),
                (Term::Const(k), Term::Var(v)) => var_const(self.dom(v), op.swap(), k),
                (Term::Var(x), Term::Var(y)) => self.var_var(x, *op, y, graph),
            },
            Constraint::Arith {
                target,
                op,
                lhs,
                rhs,
            } => self.entail_arith(*target, *op, *lhs, *rhs),
            Constraint::ArithNe {
                target,
                op,
                lhs,
                rhs,
            } => self.entail_arith(*target, *op, *lhs, *rhs).not(),
            Constraint::And(cs) => {
                let mut acc = Entailed;
                for c in cs {
                    match self.entail(c, graph) {
                        Disentailed => return Disentailed,
                        Unknown => acc = Unknown,
                        Entailed => {}
                    }
                }
                acc
            }
            Constraint::Or(cs) => {
                let mut acc = Disentailed;
                for c in cs {
                    match self.entail(c, graph) {
                        Entailed => return Entailed,
                        Unknown => acc = Unknown,
                        Disentailed => {}
                    }
                }
                acc
            }
        }
    }

    fn entail_arith(&self, x: VarId, op: ArithOp, y: Term, z: Term) -> Entailment {
        let (dx, dy, dz) = (self.dom(x), self.term_dom(y), self.term_dom(z));
        let [nx, ny, nz] = propagators::arith(op, dx, &dy, &dz);
        if nx.is_empty() || ny.is_empty() || nz.is_empty() {
            return Entailment::Disentailed;
        }
        match (dx.value(), dy.value(), dz.value()) {
            (Some(v), Some(a), Some(b)) if op.eval(a, b) == Some(v as i128) => Entailment::Entailed,
            (Some(_), Some(_), Some(_)) => Entailment::Disentailed,
            _ => Entailment::Unknown,
        }
    }

    fn var_var(&self, x: VarId, op: CmpOp, y: VarId, graph: bool) -> Entailment {
        if x == y {
            return if op.eval(0, 0) {
                Entailment::Entailed
            } else {
                Entailment::Disentailed
            };
        }
        let (dx, dy) = (self.dom(x), self.dom(y));
        // upper bounds of x - y and y - x
        let mut xy = dx.max() - dy.min();
        let mut yx = dy.max() - dx.min();
        let decide = |xy: i64, yx: i64| -> Entailment {
            let (ent, dis) = match op {
                CmpOp::Lt => (xy <= -1, yx <= 0),
                CmpOp::Le => (xy <= 0, yx <= -1),
                CmpOp::Gt => (yx <= -1, xy <= 0),
                CmpOp::Ge => (yx <= 0, xy <= -1),
                CmpOp::Eq => (xy <= 0 && yx <= 0, xy <= -1 || yx <= -1),
                CmpOp::Ne => (xy <= -1 || yx <= -1, xy <= 0 && yx <= 0),
            };
            if ent {
                Entailment::Entailed
            } else if dis {
                Entailment::Disentailed
            } else {
                Entailment::Unknown
            }
        };
        let first = decide(xy, yx);
        if first != Entailment::Unknown || !graph || self.edges.is_empty() {
            return first;
        }
        if let Some(d) = self.diff_bound(y, x) {
            xy = xy.min(d);
        }
        if let Some(d) = self.diff_bound(x, y) {
            yx = yx.min(d);
        }
        decide(xy, yx)
    }

    /// Shortest-path upper bound on `to - from` through the difference
    /// graph; `None` when unreachable or when the search gives up.
    fn diff_bound(&self, from: VarId, to: VarId) -> Option<i64> {
        if self.vars[from.index()].out.is_empty() {
            return None;
        }
        let mut dist: BTreeMap<VarId, i64> = BTreeMap::new();
        let mut queue = VecDeque::new();
        let mut inq = BTreeSet::new();
        dist.insert(from, 0);
        queue.push_back(from);
        inq.insert(from);
        let mut budget = 64 * self.edges.len() + 64;
        while let Some(u) = queue.pop_front() {
            inq.remove(&u);
            let du = dist[&u];
            for &e in &self.vars[u.index()].out {
                let e = self.edges[e as usize];
                let nd = du + e.w;
                if dist.get(&e.to).is_none_or(|&d| nd < d) {
                    if budget == 0 {
                        return None;
                    }
                    budget -= 1;
                    dist.insert(e.to, nd);
                    if inq.insert(e.to) {
                        queue.push_back(e.to);
                    }
                }
            }
        }
        dist.get(&to).copied()
    }

    pub fn snapshot(&mut self) -> Token {
        self.frames.push(Frame {
            trail: self.trail.len(),
            nvars: self.vars.len(),
            nprops: self.props.len(),
            nreactors: self.reactors.len(),
            ngroups: self.groups.len(),
            nedges: self.edges.len(),
            queue: self.queue.clone(),
            pending: self.pending.clone(),
            failed: self.failed,
        });
        Token {
            depth: self.frames.len(),
        }
    }

    /// Rolls back to the state captured by `token`.
    pub fn restore(&mut self, token: Token) -> Result<(), TokenOrderViolation> {
        if token.depth != self.frames.len() {
            return Err(TokenOrderViolation);
        }
        let f = self.frames.pop().expect("depth checked");
        while self.trail.len() > f.trail {
            match self.trail.pop().expect("length checked") {
                TrailEntry::Dom(v, d) => self.vars[v.index()].dom = d,
                TrailEntry::Dead(r) => self.reactors[r as usize].alive = true,
                TrailEntry::Group(g) => self.groups[g as usize] = false,
                TrailEntry::Taint(prev) => self.taint = prev,
            }
        }
        for p in self.queue.drain(..) {
            self.queued[p as usize] = false;
        }
        for id in f.nprops..self.props.len() {
            for v in self.props[id].vars() {
                let w = &mut self.vars[v.index()].props;
                while w.last().is_some_and(|&p| p as usize >= f.nprops) {
                    w.pop();
                }
            }
        }
        self.props.truncate(f.nprops);
        self.queued.truncate(f.nprops);
        for id in f.nreactors..self.reactors.len() {
            for i in 0..self.reactors[id].watch.len() {
                let v = self.reactors[id].watch[i];
                let w = &mut self.vars[v.index()].reactors;
                while w.last().is_some_and(|&r| r as usize >= f.nreactors) {
                    w.pop();
                }
            }
        }
        self.reactors.truncate(f.nreactors);
        for id in f.nedges..self.edges.len() {
            let from = self.edges[id].from;
            let w = &mut self.vars[from.index()].out;
            while w.last().is_some_and(|&e| e as usize >= f.nedges) {
                w.pop();
            }
        }
        self.edges.truncate(f.nedges);
        self.vars.truncate(f.nvars);
        self.groups.truncate(f.ngroups);
        self.queue = f.queue;
        for &p in &self.queue {
            self.queued[p as usize] = true;
        }
        self.pending = f.pending;
        self.failed = f.failed;
        Ok(())
    }

    /// Keeps the changes made since `token` and closes it.
    pub fn release(&mut self, token: Token) -> Result<(), TokenOrderViolation> {
        if token.depth != self.frames.len() {
            return Err(TokenOrderViolation);
        }
        self.frames.pop();
        if self.frames.is_empty() {
            self.trail.clear();
        }
        Ok(())
    }

    /// Depth-first search over `vars` in the given order, values by
    /// increasing magnitude. Returns the first solution.
    pub fn label(&mut self, vars: &[VarId], budget: u64) -> Result<LabelOutcome, Abort> {
        let mut found = None;
        let end = self.label_each(vars, budget, &mut |_, vals| {
            found = Some(vals.to_vec());
            true
        })?;
        Ok(match end {
            LabelEnd::Stopped => LabelOutcome::Solution(found.expect("stopped on a solution")),
            LabelEnd::Exhausted => LabelOutcome::Exhausted,
            LabelEnd::BudgetOut => LabelOutcome::BudgetOut,
        })
    }

    /// Like `label`, calling `on_solution` at every leaf until it returns
    /// true. The store is back at its entry state on return.
    pub fn label_each(
        &mut self,
        vars: &[VarId],
        budget: u64,
        on_solution: &mut dyn FnMut(&Store, &[i64]) -> bool,
    ) -> Result<LabelEnd, Abort> {
        let mut nodes = 0;
        let res = self.dfs(vars, budget, &mut nodes, on_solution);
        match res {
            Ok(Some(end)) => Ok(end),
            Ok(None) => Ok(LabelEnd::Exhausted),
            Err(a) => Err(a),
        }
    }

    fn dfs(
        &mut self,
        vars: &[VarId],
        budget: u64,
        nodes: &mut u64,
        on_solution: &mut dyn FnMut(&Store, &[i64]) -> bool,
    ) -> Result<Option<LabelEnd>, Abort> {
        if self.propagate()? == Status::Failed {
            return Ok(None);
        }
        let Some(&v) = vars.iter().find(|v| !self.dom(**v).is_fixed()) else {
            let vals: Vec<i64> = vars.iter().map(|v| self.value(*v).expect("all fixed")).collect();
            return Ok(on_solution(self, &vals).then_some(LabelEnd::Stopped));
        };
        let dom = self.dom(v).clone();
        for val in dom.by_magnitude() {
            if *nodes >= budget {
                return Ok(Some(LabelEnd::BudgetOut));
            }
            if self.deadline_passed() {
                self.abort = Some(Abort::WallClock);
                return Err(Abort::WallClock);
            }
            *nodes += 1;
            self.stats.label_nodes += 1;
            let token = self.snapshot();
            self.narrow(v, &Domain::singleton(val));
            let res = self.dfs(vars, budget, nodes, on_solution);
            self.restore(token).expect("labeling restores in order");
            if let Some(end) = res? {
                return Ok(Some(end));
            }
        }
        Ok(None)
    }

    /// Domains as a readable listing, for debugging and reports.
    pub fn describe(&self, v: VarId) -> String {
        match self.origin(v) {
            Some(o) => alloc::format!("{o} ∈ {}", self.dom(v)),
            None => alloc::format!("{v} ∈ {}", self.dom(v)),
        }
    }
}

fn var_const(d: &Domain, op: CmpOp, k: i64) -> Entailment {
    let (ent, dis) = match op {
        CmpOp::Eq => (d.value() == Some(k), !d.contains(k)),
        CmpOp::Ne => (!d.contains(k), d.value() == Some(k)),
        CmpOp::Lt => (d.max() < k, d.min() >= k),
        CmpOp::Le => (d.max() <= k, d.min() > k),
        CmpOp::Gt => (d.min() > k, d.max() <= k),
        CmpOp::Ge => (d.min() >= k, d.max() < k),
    };
    if ent {
        Entailment::Entailed
    } else if dis {
        Entailment::Disentailed
    } else {
        Entailment::Unknown
    }
}

impl core::fmt::Debug for Store {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let mut m = f.debug_map();
        for i in 0..self.vars.len() {
            let v = VarId(i as u32);
            m.entry(&self.origin(v).map_or_else(|| alloc::format!("{v}"), String::from), self.dom(v));
        }
        m.finish()
    }
}

const _: fn() = || {
    fn send<T: Send>() {}
    send::<Store>();
};

#[cfg(test)]
mod tests;
