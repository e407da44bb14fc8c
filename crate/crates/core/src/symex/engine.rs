//! Path exploration with forking fault semantics.
//!
//! Each instruction is executed against a decision script. When execution
//! reaches a choice the script does not cover (a fault occurrence, a
//! symbolic branch, an assertion), the state is forked and every feasible
//! child re-executes the instruction with one more decision. Memory effects
//! and occurrence counts are committed only when an instruction completes,
//! so re-execution is side-effect free.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::report::ReportTable;
use super::solver::{holds, slice, Ranges, Solver, SolverStats};
use super::term::{Model, Term, VarId, VarKind, VarTable};
use crate::absint::{self, AbsResult, AnalysisOptions, AssertStatus, FaultInjection, FaultValue, RunOptions, Termination};
use crate::frontend::ast::*;
use crate::frontend::cfg::{build_all, BlockId, Cfg, InstrKind, Terminator};
use crate::instrument::{FaultConfig, FaultModel, FaultSetting, Registry, SiteId};
use crate::memory::{Frame, Obj, ObjRef, Store};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Search {
    #[default]
    Dfs,
    Bfs,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub timeout: Option<Duration>,
    /// Stop after this many explored paths.
    pub max_paths: Option<u64>,
    /// Symbolic iterations of one loop header in one frame.
    pub unroll_limit: u32,
    pub max_call_depth: usize,
    /// Instructions per path.
    pub max_steps: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { timeout: None, max_paths: None, unroll_limit: 512, max_call_depth: 64, max_steps: 1_000_000 }
    }
}

impl Budget {
    pub fn with_timeout(t: Duration) -> Budget {
        Budget { timeout: Some(t), ..Budget::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExploreOptions {
    pub max_faults: u32,
    pub budget: Budget,
    pub search: Search,
}

impl ExploreOptions {
    pub fn faults(max_faults: u32) -> ExploreOptions {
        ExploreOptions { max_faults, budget: Budget::default(), search: Search::Dfs }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultEvent {
    pub site: SiteId,
    pub occurrence: u32,
    pub value: i64,
}

/// What makes two attack paths the same for counting purposes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Signature {
    pub assertion: AssertId,
    /// Faulted sites, sorted, with repetition.
    pub sites: Vec<SiteId>,
    pub faults: u32,
}

impl std::fmt::Display for Signature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s: Vec<String> = self.sites.iter().map(|s| s.to_string()).collect();
        write!(f, "{} [{}]", self.assertion, s.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackPath {
    pub assertion: AssertId,
    pub inputs: BTreeMap<String, i64>,
    pub faults: Vec<FaultEvent>,
    /// Visited blocks as (function, block).
    pub trace: Vec<(usize, BlockId)>,
}

impl AttackPath {
    pub fn signature(&self) -> Signature {
        let mut sites: Vec<SiteId> = self.faults.iter().map(|f| f.site).collect();
        sites.sort();
        Signature { assertion: self.assertion, sites, faults: self.faults.len() as u32 }
    }
}

/// A path left unfinished when a limit was hit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EarlyTrace {
    pub reason: String,
    pub fault_count: u32,
    pub steps: u64,
    /// Faults injected at each site along the path so far.
    pub site_triggers: BTreeMap<SiteId, u32>,
    /// Evaluations of each site along the path so far.
    pub evaluations: BTreeMap<SiteId, u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExploreStats {
    pub completed_paths: u64,
    pub early_traces: u64,
    /// Completed paths plus early traces.
    pub explored_paths: u64,
    pub pruned_states: u64,
    pub forks: u64,
    pub instructions: u64,
    pub solver_queries: u64,
    pub sat_calls: u64,
    pub replay_defects: u64,
    pub unknown_queries: u64,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExploreResult {
    /// One path per signature, in discovery order.
    pub attacks: Vec<AttackPath>,
    pub table: ReportTable,
    pub early: Vec<EarlyTrace>,
    pub stats: ExploreStats,
    /// No limit was hit and every solver query was decided.
    pub complete: bool,
}

impl ExploreResult {
    pub fn signatures(&self) -> BTreeSet<Signature> {
        self.attacks.iter().map(|a| a.signature()).collect()
    }

    /// Early traces as line-delimited JSON.
    pub fn early_jsonl(&self) -> String {
        self.early.iter().map(|e| serde_json::to_string(e).expect("serializable") + "\n").collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SymexError {
    #[error("site {0} is not in the registry")]
    UnknownSite(SiteId),
    #[error("program has no entry function")]
    NoEntry,
    #[error("replay ended with {got:?} instead of violating {expected}")]
    ReplayMismatch { expected: AssertId, got: Termination },
}

#[derive(Clone)]
struct Pos {
    func: usize,
    block: BlockId,
    index: usize,
    loops: HashMap<BlockId, u32>,
}

#[derive(Clone)]
struct State {
    store: Store<Term>,
    stack: Vec<Pos>,
    pc: Vec<Term>,
    model: Model,
    fault_count: u32,
    faults: Vec<(SiteId, u32, VarId)>,
    occ: BTreeMap<SiteId, u32>,
    blocks: Vec<(usize, BlockId)>,
    steps: u64,
    script: Vec<bool>,
    /// Fault count when the current step started.
    step_faults: u32,
}

impl State {
    fn multiset(&self) -> Vec<SiteId> {
        let mut v: Vec<SiteId> = self.faults.iter().map(|f| f.0).collect();
        v.sort();
        v
    }
}

enum ForkKind {
    Fault { site: SiteId, occurrence: u32, pre: Term },
    /// Both sides continue; `header` marks a loop test.
    Bool { cond: Term, header: bool },
    /// The false side is a violation.
    Assert { id: AssertId, cond: Term },
}

enum Interrupt {
    Fork(ForkKind),
    /// The path ends inside the instruction (out-of-bounds access).
    OutOfBounds,
}

enum Write {
    Scalar(Term),
    Cells(Vec<(usize, Term)>),
    Zero,
}

enum Ctrl {
    Next,
    Jump(BlockId),
    Call { func: usize, slots: Vec<Obj<Term>> },
    Return,
    Halt,
}

struct Effects {
    /// Target object, record field, write.
    writes: Vec<(ObjRef, Option<usize>, Write)>,
    /// Writes applied after a return pops the frame.
    ret_write: Option<(ObjRef, Option<usize>, Write)>,
    ctrl: Ctrl,
}

/// Read-only context of an exploration.
struct Ctx<'a> {
    p: &'a Program,
    cfgs: &'a [Cfg],
    strategy: &'a FaultConfig,
    model_kind: FaultModel,
    site_ty: Vec<ScalarType>,
    max_faults: u32,
    proven: BTreeSet<AssertId>,
}

/// Types of every named input: the domain hull type when a domain is
/// declared, else the widest type it is read at.
fn input_types(p: &Program) -> BTreeMap<String, ScalarType> {
    let mut out: BTreeMap<String, ScalarType> = BTreeMap::new();
    let mut note = |n: &str, t: ScalarType| {
        let e = out.entry(n.to_string()).or_insert(t);
        if t.bits() > e.bits() {
            *e = t;
        }
    };
    if let Some(entry) = p.entry {
        for pa in &p.functions[entry].params {
            match pa.ty {
                ParamType::Scalar(t) => note(&pa.name, t),
                ParamType::RecordPtr(r) => {
                    for f in &p.records[r].fields {
                        if let FieldType::Scalar(t) = f.ty {
                            note(&f.name, t);
                        }
                    }
                }
                ParamType::ArrayRef(..) => {}
            }
        }
    }
    for f in &p.functions {
        visit_stmts(&f.body, &mut |s| {
            let mut s = s.clone();
            stmt_exprs_mut(&mut s, &mut |e| {
                e.walk(&mut |x| {
                    if let ExprKind::Input(n) = &x.kind {
                        note(n, x.ty)
                    }
                })
            });
        });
    }
    for (n, d) in &p.domains {
        if let Some(t) = out.get_mut(n) {
            let (lo, hi) = d.hull();
            *t = if lo >= i32::MIN as i64 && hi <= i32::MAX as i64 {
                ScalarType::I32
            } else {
                ScalarType::U32
            };
        }
    }
    out
}

fn has_site(p: &Program, e: &Expr) -> bool {
    let mut found = false;
    e.walk(&mut |x| found |= p.fault_site_of(x).is_some());
    found
}

fn has_index(e: &Expr) -> bool {
    let mut found = false;
    e.walk(&mut |x| found |= matches!(&x.kind, ExprKind::Load(pl) if pl.index.is_some()));
    found
}

struct Exec<'c, 'a, 's> {
    cx: &'c Ctx<'a>,
    vars: &'c mut VarTable,
    inputs: &'c BTreeMap<String, VarId>,
    st: &'s State,
    cursor: usize,
    occ: BTreeMap<SiteId, u32>,
    /// Faults taken so far in this step.
    taken: u32,
}

impl Exec<'_, '_, '_> {
    fn decide(&mut self, k: ForkKind) -> Result<bool, Interrupt> {
        if self.cursor < self.st.script.len() {
            self.cursor += 1;
            return Ok(self.st.script[self.cursor - 1]);
        }
        Err(Interrupt::Fork(k))
    }

    /// A boolean choice on `cond`, taken without forking when it is constant.
    fn branch(&mut self, cond: Term, header: bool) -> Result<bool, Interrupt> {
        match cond.as_const() {
            Some(v) => Ok(v != 0),
            None => self.decide(ForkKind::Bool { cond, header }),
        }
    }

    fn input(&self, name: &str) -> Term {
        let v = self.inputs[name];
        let info = self.vars.get(v);
        match info.values.as_deref() {
            Some(&[k]) => Term::konst(k, info.ty),
            _ => Term::var(v, info.ty),
        }
    }

    fn inject(&mut self, s: u32, pre: Term) -> Result<Term, Interrupt> {
        let site = SiteId(s);
        let d = self.occ.entry(site).or_insert(0);
        *d += 1;
        let occurrence = self.st.occ.get(&site).copied().unwrap_or(0) + *d;
        let ty = self.cx.site_ty[s as usize];
        match self.cx.strategy.setting(site) {
            FaultSetting::Fixed(v) => Ok(Term::konst(v, ty)),
            FaultSetting::Symbolic => {
                if self.st.step_faults + self.taken >= self.cx.max_faults {
                    return Ok(Term::konst(0, ty));
                }
                if self.decide(ForkKind::Fault { site, occurrence, pre })? {
                    self.taken += 1;
                    let v = self.vars.intern(VarKind::Fault { site, occurrence }, ty, None).0;
                    Ok(Term::var(v, ty))
                } else {
                    Ok(Term::konst(0, ty))
                }
            }
        }
    }

    fn eval(&mut self, store: &Store<Term>, e: &Expr) -> Result<Term, Interrupt> {
        Ok(match &e.kind {
            ExprKind::Const(v) => Term::konst(*v, e.ty),
            ExprKind::Input(name) => {
                let v = self.input(name);
                Term::cast(e.ty, v)
            }
            ExprKind::Load(pl) => {
                if let Some(s) = self.cx.p.fault_site_of(e) {
                    let inj = self.inject(s, Term::konst(0, e.ty))?;
                    return Ok(Term::cast(e.ty, inj));
                }
                self.load(store, pl)?
            }
            ExprKind::Unary(op, a) => Term::unary(*op, self.eval(store, a)?),
            ExprKind::Cast(a) => Term::cast(e.ty, self.eval(store, a)?),
            ExprKind::Binary(op, a, b) => {
                let x = self.eval(store, a)?;
                match op {
                    BinOp::LogAnd | BinOp::LogOr => {
                        let and = *op == BinOp::LogAnd;
                        if let Some(v) = x.as_const() {
                            if (v != 0) != and {
                                return Ok(Term::truth(!and));
                            }
                            return Ok(Term::nonzero(self.eval(store, b)?));
                        }
                        if has_site(self.cx.p, b) || has_index(b) {
                            // evaluate the right operand only on paths that reach it
                            let t = self.branch(x, false)?;
                            if t != and {
                                return Ok(Term::truth(!and));
                            }
                            return Ok(Term::nonzero(self.eval(store, b)?));
                        }
                        let y = self.eval(store, b)?;
                        Term::binary(*op, x, y)
                    }
                    BinOp::Xor if self.cx.p.fault_site_of(b).is_some() => {
                        let s = self.cx.p.fault_site_of(b).unwrap();
                        let inj = self.inject(s, x.clone())?;
                        Term::binary(BinOp::Xor, x, Term::cast(a.ty, inj))
                    }
                    _ => {
                        let y = self.eval(store, b)?;
                        Term::binary(*op, x, y)
                    }
                }
            }
        })
    }

    /// Feasible cell indices of a symbolic index, forking off the
    /// out-of-bounds case when it cannot be excluded.
    fn cells(&mut self, idx: &Term, len: usize) -> Result<(usize, usize), Interrupt> {
        let mut r = Ranges::new(self.vars);
        let pc = slice(&self.st.pc, std::slice::from_ref(idx));
        r.propagate(&pc);
        let (lo, hi) = r.eval(idx);
        if lo < 0 || hi >= len as i64 {
            let ty = idx.ty();
            let inb = if ty.signed() {
                Term::and(
                    Term::binary(BinOp::Ge, idx.clone(), Term::konst(0, ty)),
                    Term::binary(BinOp::Lt, idx.clone(), Term::konst(len as i64, ty)),
                )
            } else {
                Term::binary(BinOp::Lt, idx.clone(), Term::konst(len.min(ty.max() as usize) as i64, ty))
            };
            if !self.branch(inb, false)? {
                return Err(Interrupt::OutOfBounds);
            }
        }
        Ok((lo.max(0) as usize, hi.min(len as i64 - 1) as usize))
    }

    fn index(&mut self, store: &Store<Term>, pl: &Place) -> Result<Option<Term>, Interrupt> {
        match &pl.index {
            None => Ok(None),
            Some(ix) => Ok(Some(self.eval(store, ix)?)),
        }
    }

    fn load(&mut self, store: &Store<Term>, pl: &Place) -> Result<Term, Interrupt> {
        let idx = self.index(store, pl)?;
        let o = store.container(pl);
        match (o, idx) {
            (Obj::Scalar(_, v), None) => Ok(v.clone()),
            (Obj::Array(_, vs), Some(i)) => {
                if let Some(k) = i.as_const() {
                    if k < 0 || k as usize >= vs.len() {
                        return Err(Interrupt::OutOfBounds);
                    }
                    return Ok(vs[k as usize].clone());
                }
                let (lo, hi) = self.cells(&i, vs.len())?;
                let ty = i.ty();
                let mut acc = vs[hi].clone();
                for k in (lo..hi).rev() {
                    let hit = Term::binary(BinOp::Eq, i.clone(), Term::konst(k as i64, ty));
                    acc = Term::ite(hit, vs[k].clone(), acc);
                }
                Ok(acc)
            }
            _ => unreachable!("place shape"),
        }
    }

    /// Resolve a store to `pl` of value `v` (index evaluated after the value).
    fn write(&mut self, store: &Store<Term>, pl: &Place, v: Term) -> Result<(ObjRef, Option<usize>, Write), Interrupt> {
        let idx = self.index(store, pl)?;
        let target = store.target(pl.var);
        let field = match store.get(target) {
            Obj::Record(_) => pl.field,
            _ => None,
        };
        let w = match (store.container(pl), idx) {
            (Obj::Scalar(t, _), None) => Write::Scalar(Term::cast(*t, v)),
            (Obj::Array(t, vs), Some(i)) => {
                let v = Term::cast(*t, v);
                if let Some(k) = i.as_const() {
                    if k < 0 || k as usize >= vs.len() {
                        return Err(Interrupt::OutOfBounds);
                    }
                    Write::Cells(vec![(k as usize, v)])
                } else {
                    let (lo, hi) = self.cells(&i, vs.len())?;
                    let ty = i.ty();
                    Write::Cells(
                        (lo..=hi)
                            .map(|k| {
                                let hit = Term::binary(BinOp::Eq, i.clone(), Term::konst(k as i64, ty));
                                (k, Term::ite(hit, v.clone(), vs[k].clone()))
                            })
                            .collect(),
                    )
                }
            }
            _ => unreachable!("place shape"),
        };
        Ok((target, field, w))
    }

    fn step(&mut self) -> Result<Effects, Interrupt> {
        let st = self.st;
        let pos = st.stack.last().expect("running state has a frame");
        let cfg = &self.cx.cfgs[pos.func];
        let block = &cfg.blocks[pos.block];
        let store = &st.store;
        let mut fx = Effects { writes: Vec::new(), ret_write: None, ctrl: Ctrl::Next };
        if pos.index < block.instrs.len() {
            match &block.instrs[pos.index].kind {
                InstrKind::Assign { place, value } => {
                    let v = self.eval(store, value)?;
                    fx.writes.push(self.write(store, place, v)?);
                }
                InstrKind::Zero { slot } => {
                    let fr = store.current();
                    fx.writes.push((ObjRef::Slot { frame: fr, slot: *slot }, None, Write::Zero));
                }
                InstrKind::Print(e) => {
                    self.eval(store, e)?;
                }
                InstrKind::Assert { id, cond, .. } => {
                    if !(self.cx.proven.contains(id) && !has_site(self.cx.p, cond)) {
                        let c = self.eval(store, cond)?;
                        let ok = match c.as_const() {
                            Some(v) if v != 0 => true,
                            _ => self.decide(ForkKind::Assert { id: *id, cond: c })?,
                        };
                        if !ok {
                            unreachable!("violations never continue");
                        }
                    }
                }
                InstrKind::Call { func, args, .. } => {
                    let callee = &self.cx.p.functions[*func];
                    let mut slots = Vec::with_capacity(callee.slot_count());
                    for (a, pa) in args.iter().zip(&callee.params) {
                        match (a, pa.ty) {
                            (Arg::Value(e), ParamType::Scalar(t)) => {
                                let v = self.eval(store, e)?;
                                slots.push(Obj::Scalar(t, Term::cast(t, v)));
                            }
                            (Arg::Ref(v), _) => slots.push(Obj::Ref(store.target(*v))),
                            _ => unreachable!("argument kind mismatch"),
                        }
                    }
                    for l in &callee.locals {
                        slots.push(Obj::new(self.cx.p, l.ty, &mut |t| Term::konst(0, t)));
                    }
                    fx.ctrl = Ctrl::Call { func: *func, slots };
                }
            }
            return Ok(fx);
        }
        match &block.term {
            Terminator::Goto(t) => fx.ctrl = Ctrl::Jump(*t),
            Terminator::Branch { cond, then_bb, else_bb } => {
                let c = self.eval(store, cond)?;
                let header = cfg.loop_headers.contains(&pos.block);
                fx.ctrl = Ctrl::Jump(if self.branch(c, header)? { *then_bb } else { *else_bb });
            }
            Terminator::Halt => fx.ctrl = Ctrl::Halt,
            Terminator::Exit => fx.ctrl = Ctrl::Return,
            Terminator::Return(e) => {
                let v = match e {
                    Some(e) => Some(self.eval(store, e)?),
                    None => None,
                };
                fx.ctrl = Ctrl::Return;
                if st.stack.len() > 1 {
                    let caller = &st.stack[st.stack.len() - 2];
                    let ins = &self.cx.cfgs[caller.func].blocks[caller.block].instrs[caller.index];
                    if let InstrKind::Call { dest: Some(d), .. } = &ins.kind {
                        let v = v.unwrap_or_else(|| Term::konst(0, ScalarType::I32));
                        if d.index.is_some() {
                            let mut popped = store.clone();
                            popped.frames.pop();
                            fx.ret_write = Some(self.write(&popped, d, v)?);
                        } else {
                            let target = caller_target(store, d.var);
                            let t = match (store.get(target), d.field) {
                                (Obj::Record(fs), Some(f)) => match &fs[f] {
                                    Obj::Scalar(t, _) => *t,
                                    _ => unreachable!("scalar destination"),
                                },
                                (Obj::Scalar(t, _), _) => *t,
                                _ => unreachable!("scalar destination"),
                            };
                            let field = if matches!(store.get(target), Obj::Record(_)) { d.field } else { None };
                            fx.ret_write = Some((target, field, Write::Scalar(Term::cast(t, v))));
                        }
                    }
                }
            }
        }
        Ok(fx)
    }
}

/// `store.target(v)` as seen from the caller of the current frame.
fn caller_target(store: &Store<Term>, v: VarRef) -> ObjRef {
    match v {
        VarRef::Global(g) => ObjRef::Global(g),
        VarRef::Slot(s) => {
            let frame = store.current() - 1;
            match &store.frames[frame].slots[s] {
                Obj::Ref(r) => *r,
                _ => ObjRef::Slot { frame, slot: s },
            }
        }
    }
}

fn apply(store: &mut Store<Term>, (r, field, w): (ObjRef, Option<usize>, Write)) {
    let o = match (store.get_mut(r), field) {
        (Obj::Record(fs), Some(f)) => &mut fs[f],
        (o, _) => o,
    };
    match w {
        Write::Scalar(v) => {
            if let Obj::Scalar(_, c) = o {
                *c = v
            }
        }
        Write::Cells(cs) => {
            if let Obj::Array(_, vs) = o {
                for (k, v) in cs {
                    vs[k] = v;
                }
            }
        }
        Write::Zero => o.for_each_mut(&mut |t, v| *v = Term::konst(0, t)),
    }
}

enum Run {
    /// The path finished.
    Done,
    Early(&'static str),
    Fork(ForkKind),
}

struct Engine<'a> {
    cx: Ctx<'a>,
    r: &'a Registry,
    opts: &'a ExploreOptions,
    vars: VarTable,
    inputs: BTreeMap<String, VarId>,
    solver: Solver,
    targets: BTreeSet<AssertId>,
    found: BTreeMap<Signature, AttackPath>,
    order: Vec<Signature>,
    early: Vec<EarlyTrace>,
    stats: ExploreStats,
    deadline: Option<Instant>,
}

impl<'a> Engine<'a> {
    fn out_of_time(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn exhausted(&self) -> bool {
        let paths = self.stats.completed_paths + self.stats.early_traces;
        self.opts.budget.max_paths.is_some_and(|m| paths >= m) || self.out_of_time()
    }

    /// Nothing new can come out of this state: its fault budget is spent
    /// and each assertion it could violate already has an attack with the
    /// same faulted sites.
    fn prunable(&self, st: &State) -> bool {
        if self.targets.is_empty() {
            return true;
        }
        if st.fault_count < self.opts.max_faults {
            return false;
        }
        let sites = st.multiset();
        self.targets.iter().all(|&a| {
            self.found.contains_key(&Signature { assertion: a, sites: sites.clone(), faults: st.fault_count })
        })
    }

    fn early(&mut self, st: &State, reason: &str) {
        self.stats.early_traces += 1;
        self.early.push(EarlyTrace {
            reason: reason.to_string(),
            fault_count: st.fault_count,
            steps: st.steps,
            site_triggers: st.faults.iter().fold(BTreeMap::new(), |mut m, (s, _, _)| {
                *m.entry(*s).or_insert(0) += 1;
                m
            }),
            evaluations: st.occ.clone(),
        });
    }

    /// Run a state until it forks or ends.
    fn run(&mut self, st: &mut State) -> Run {
        loop {
            if st.steps >= self.opts.budget.max_steps {
                return Run::Early("step limit");
            }
            if st.steps % 4096 == 4095 && self.out_of_time() {
                return Run::Early("timeout");
            }
            let mut ex = Exec {
                cx: &self.cx,
                vars: &mut self.vars,
                inputs: &self.inputs,
                st,
                cursor: 0,
                occ: BTreeMap::new(),
                taken: 0,
            };
            let r = ex.step();
            let occ = std::mem::take(&mut ex.occ);
            let fx = match r {
                Err(Interrupt::Fork(k)) => return Run::Fork(k),
                Err(Interrupt::OutOfBounds) => return Run::Done,
                Ok(fx) => fx,
            };
            self.stats.instructions += 1;
            st.steps += 1;
            st.script.clear();
            st.step_faults = st.fault_count;
            for (s, d) in occ {
                *st.occ.entry(s).or_insert(0) += d;
            }
            for w in fx.writes {
                apply(&mut st.store, w);
            }
            match fx.ctrl {
                Ctrl::Next => st.stack.last_mut().unwrap().index += 1,
                Ctrl::Jump(b) => {
                    let pos = st.stack.last_mut().unwrap();
                    pos.block = b;
                    pos.index = 0;
                    st.blocks.push((pos.func, b));
                }
                Ctrl::Halt => return Run::Done,
                Ctrl::Call { func, slots } => {
                    if st.stack.len() >= self.opts.budget.max_call_depth {
                        return Run::Early("call depth");
                    }
                    st.store.frames.push(Frame { func: Some(func), slots });
                    let entry = self.cx.cfgs[func].entry;
                    st.stack.push(Pos { func, block: entry, index: 0, loops: HashMap::new() });
                    st.blocks.push((func, entry));
                }
                Ctrl::Return => {
                    st.stack.pop();
                    if st.stack.is_empty() {
                        return Run::Done;
                    }
                    st.store.frames.pop();
                    if let Some(w) = fx.ret_write {
                        apply(&mut st.store, w);
                    }
                    st.stack.last_mut().unwrap().index += 1;
                }
            }
        }
    }

    /// `st.model` extended to satisfy `cons`, if `pc ∧ cons` is satisfiable.
    fn feasible(&mut self, st: &State, cons: &[Term], ext: Option<(VarId, i64)>) -> Option<Model> {
        let mut m = st.model.clone();
        if let Some((v, x)) = ext {
            m.insert(v, x);
        }
        if holds(cons, &m) {
            return Some(m);
        }
        self.solver.check(&self.vars, &st.pc, cons, &m)
    }

    fn record(&mut self, st: &State, id: AssertId, witness: &Model) {
        let sig = Signature { assertion: id, sites: st.multiset(), faults: st.fault_count };
        if self.found.contains_key(&sig) {
            return;
        }
        let mut inputs = BTreeMap::new();
        for (name, &v) in &self.inputs {
            inputs.insert(name.clone(), witness.get(&v).copied().unwrap_or(0));
        }
        let faults = st
            .faults
            .iter()
            .map(|&(site, occurrence, v)| FaultEvent { site, occurrence, value: witness.get(&v).copied().unwrap_or(0) })
            .collect();
        let ap = AttackPath { assertion: id, inputs, faults, trace: st.blocks.clone() };
        match replay_with(self.r, self.cx.cfgs, self.cx.strategy, &ap) {
            Ok(()) => {
                self.order.push(sig.clone());
                self.found.insert(sig, ap);
            }
            Err(_) => self.stats.replay_defects += 1,
        }
    }

    /// Feasible children of `st` at a fork, most preferred first.
    fn children(&mut self, st: State, k: ForkKind) -> Vec<State> {
        self.stats.forks += 1;
        let mut out = Vec::new();
        match k {
            ForkKind::Fault { site, occurrence, pre } => {
                let mut fault = st.clone();
                let mut clean = st;
                clean.script.push(false);
                out.push(clean);
                let ty = self.cx.site_ty[site.0 as usize];
                let v = self.vars.intern(VarKind::Fault { site, occurrence }, ty, None).0;
                let f = Term::var(v, ty);
                let mut cons = vec![Term::binary(BinOp::Ne, f.clone(), Term::konst(0, ty))];
                let mut guess = 1;
                if self.cx.model_kind == FaultModel::TestInversion {
                    let pre = Term::cast(ty, pre);
                    let flipped = Term::nonzero(Term::binary(BinOp::Xor, pre.clone(), f));
                    cons.push(Term::binary(BinOp::Ne, flipped, Term::nonzero(pre.clone())));
                    let x = pre.eval_model(&fault.model);
                    guess = if x != 0 { x } else { 1 };
                }
                if let Some(m) = self.feasible(&fault, &cons, Some((v, guess))) {
                    fault.model = m;
                    fault.pc.extend(cons);
                    fault.fault_count += 1;
                    fault.faults.push((site, occurrence, v));
                    fault.script.push(true);
                    out.push(fault);
                }
            }
            ForkKind::Bool { cond, header } => {
                let mut st = st;
                if header {
                    let pos = st.stack.last_mut().unwrap();
                    let n = pos.loops.entry(pos.block).or_insert(0);
                    *n += 1;
                    if *n > self.opts.budget.unroll_limit {
                        self.early(&st, "unroll limit");
                        return out;
                    }
                }
                for side in [false, true] {
                    let c = if side { Term::nonzero(cond.clone()) } else { Term::not(cond.clone()) };
                    if let Some(m) = self.feasible(&st, std::slice::from_ref(&c), None) {
                        let mut ch = st.clone();
                        ch.model = m;
                        ch.pc.push(c);
                        ch.script.push(side);
                        out.push(ch);
                    }
                }
            }
            ForkKind::Assert { id, cond } => {
                let sig = Signature { assertion: id, sites: st.multiset(), faults: st.fault_count };
                if !self.found.contains_key(&sig) {
                    let bad = Term::not(cond.clone());
                    if let Some(w) = self.feasible(&st, std::slice::from_ref(&bad), None) {
                        self.record(&st, id, &w);
                    }
                }
                let ok = Term::nonzero(cond);
                if let Some(m) = self.feasible(&st, std::slice::from_ref(&ok), None) {
                    let mut ch = st;
                    ch.model = m;
                    ch.pc.push(ok);
                    ch.script.push(true);
                    out.push(ch);
                } else {
                    self.stats.completed_paths += 1;
                }
            }
        }
        out
    }

    fn initial(&mut self) -> State {
        let p = self.cx.p;
        let entry = p.entry.expect("checked by explore");
        let (vars, inputs) = (&self.vars, &self.inputs);
        let store = Store::initial(
            p,
            entry,
            &mut |g, t| Term::konst(g.init.filter(|_| g.kind == GlobalKind::User).unwrap_or(0), t),
            &mut |name, t| match name {
                Some(n) => {
                    let v = inputs[n];
                    let info = vars.get(v);
                    match info.values.as_deref() {
                        // a one-value domain is a fixed input
                        Some(&[k]) => Term::cast(t, Term::konst(k, info.ty)),
                        _ => Term::cast(t, Term::var(v, info.ty)),
                    }
                }
                None => Term::konst(0, t),
            },
            &mut |t| Term::konst(0, t),
        );
        let mut model = Model::new();
        let mut pc = Vec::new();
        for (name, &v) in &self.inputs {
            let ty = self.vars.get(v).ty;
            let d = p.domains.get(name);
            model.insert(v, ty.wrap(d.map_or(0, |d| d.first()) as i128));
            if let Some(Domain::Range(lo, hi)) = d {
                let t = Term::var(v, ty);
                pc.push(Term::binary(BinOp::Ge, t.clone(), Term::konst(*lo, ty)));
                pc.push(Term::binary(BinOp::Le, t, Term::konst(*hi, ty)));
            }
        }
        State {
            store,
            stack: vec![Pos { func: entry, block: self.cx.cfgs[entry].entry, index: 0, loops: HashMap::new() }],
            pc,
            model,
            fault_count: 0,
            faults: Vec::new(),
            occ: BTreeMap::new(),
            blocks: vec![(entry, self.cx.cfgs[entry].entry)],
            steps: 0,
            script: Vec::new(),
            step_faults: 0,
        }
    }

    fn explore(&mut self) {
        let start = Instant::now();
        let mut work: VecDeque<State> = VecDeque::new();
        let init = self.initial();
        work.push_back(init);
        let dfs = self.opts.search == Search::Dfs;
        while let Some(mut st) = if dfs { work.pop_back() } else { work.pop_front() } {
            if self.exhausted() {
                self.early(&st, "budget");
                while let Some(s) = work.pop_front() {
                    self.early(&s, "budget");
                }
                break;
            }
            if self.prunable(&st) {
                self.stats.pruned_states += 1;
                continue;
            }
            match self.run(&mut st) {
                Run::Done => self.stats.completed_paths += 1,
                Run::Early(why) => self.early(&st, why),
                Run::Fork(k) => {
                    let kids = self.children(st, k);
                    if dfs {
                        work.extend(kids.into_iter().rev());
                    } else {
                        work.extend(kids);
                    }
                }
            }
        }
        self.stats.explored_paths = self.stats.completed_paths + self.stats.early_traces;
        let SolverStats { queries, by_sat, .. } = self.solver.stats;
        self.stats.solver_queries = queries;
        self.stats.sat_calls = by_sat;
        self.stats.elapsed_ms = start.elapsed().as_millis() as u64;
    }
}

/// Sites and setting checks shared by explore and replay.
fn check_strategy(r: &Registry, strategy: &FaultConfig) -> Result<(), SymexError> {
    for s in strategy.active.keys() {
        if s.0 as usize >= r.sites.len() {
            return Err(SymexError::UnknownSite(*s));
        }
    }
    if r.program.entry.is_none() {
        return Err(SymexError::NoEntry);
    }
    Ok(())
}

/// Explore the instrumented program of `r` with the sites of `strategy`.
pub fn explore(r: &Registry, strategy: &FaultConfig, opts: &ExploreOptions) -> Result<ExploreResult, SymexError> {
    check_strategy(r, strategy)?;
    let p = &r.program;
    let cfgs = build_all(p);
    let abs = absint::analyze(p, &cfgs, strategy, &AnalysisOptions { record_states: false, ..Default::default() });
    explore_with(r, &cfgs, strategy, &abs, opts)
}

/// `explore` with precomputed CFGs and interval results for the same strategy.
pub fn explore_with(
    r: &Registry,
    cfgs: &[Cfg],
    strategy: &FaultConfig,
    abs: &AbsResult,
    opts: &ExploreOptions,
) -> Result<ExploreResult, SymexError> {
    check_strategy(r, strategy)?;
    let p = &r.program;
    let status = |id| abs.status(id);
    let ids: Vec<AssertId> = p.assertions().iter().map(|a| a.id).collect();
    let proven = ids.iter().copied().filter(|&a| status(a) == AssertStatus::Proven).collect();
    let targets = ids.iter().copied().filter(|&a| status(a) == AssertStatus::Unproven).collect();
    let cx = Ctx {
        p,
        cfgs,
        strategy,
        model_kind: r.model,
        site_ty: r.sites.iter().map(|s| s.ty).collect(),
        max_faults: opts.max_faults,
        proven,
    };
    let mut e = Engine {
        cx,
        r,
        opts,
        vars: VarTable::default(),
        inputs: BTreeMap::new(),
        solver: Solver::default(),
        targets,
        found: BTreeMap::new(),
        order: Vec::new(),
        early: Vec::new(),
        stats: ExploreStats::default(),
        deadline: opts.budget.timeout.map(|t| Instant::now() + t),
    };
    for (name, ty) in input_types(p) {
        let values = match p.domains.get(&name) {
            Some(Domain::Values(vs)) => Some(vs.clone()),
            _ => None,
        };
        let v = e.vars.intern(VarKind::Input(name.clone()), ty, values).0;
        e.inputs.insert(name, v);
    }
    e.explore();
    let attacks: Vec<AttackPath> = e.order.iter().map(|s| e.found[s].clone()).collect();
    let rows: Vec<SiteId> = strategy
        .active
        .iter()
        .filter(|(_, st)| **st == FaultSetting::Symbolic)
        .map(|(s, _)| *s)
        .collect();
    let table = ReportTable::build(&rows, opts.max_faults, &attacks, &e.stats);
    let complete = e.early.is_empty() && e.stats.unknown_queries == 0;
    Ok(ExploreResult { attacks, table, early: e.early, stats: e.stats, complete })
}

fn replay_with(r: &Registry, cfgs: &[Cfg], strategy: &FaultConfig, ap: &AttackPath) -> Result<(), SymexError> {
    let mut faults: Vec<FaultInjection> = ap
        .faults
        .iter()
        .map(|f| FaultInjection { site: f.site, occurrence: f.occurrence, value: FaultValue::Const(f.value) })
        .collect();
    // fixed sites inject at every occurrence; the nominal run bounds how many there are
    let fixed: Vec<(SiteId, i64)> = strategy
        .active
        .iter()
        .filter_map(|(s, st)| match st {
            FaultSetting::Fixed(v) if *v != 0 => Some((*s, *v)),
            _ => None,
        })
        .collect();
    let opts = RunOptions { step_limit: 10_000_000, ..RunOptions::default() };
    if !fixed.is_empty() {
        let mut bound = 1u32;
        loop {
            let mut all = faults.clone();
            for &(s, v) in &fixed {
                for k in 1..=bound {
                    all.push(FaultInjection { site: s, occurrence: k, value: FaultValue::Const(v) });
                }
            }
            let t = absint::concrete_run(&r.program, cfgs, &ap.inputs, &all, &opts);
            let max = fixed.iter().map(|(s, _)| t.occurrences.get(s).copied().unwrap_or(0)).max().unwrap_or(0);
            if max <= bound {
                faults = all;
                break;
            }
            bound = max.max(bound * 2);
        }
    }
    let t = absint::concrete_run(&r.program, cfgs, &ap.inputs, &faults, &opts);
    if t.termination == Termination::AssertionViolation(ap.assertion) {
        Ok(())
    } else {
        Err(SymexError::ReplayMismatch { expected: ap.assertion, got: t.termination })
    }
}

/// Check that an attack path violates its assertion in a concrete run.
pub fn replay(r: &Registry, strategy: &FaultConfig, ap: &AttackPath) -> Result<(), SymexError> {
    check_strategy(r, strategy)?;
    replay_with(r, &build_all(&r.program), strategy, ap)
}

#[cfg(test)]
mod tests;
