//! Interval abstract interpretation of instrumented programs, plus the
//! reference concrete interpreter.

pub mod concrete;
pub mod interval;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::frontend::ast::*;
use crate::frontend::cfg::{BlockId, Cfg, InstrKind, Point, Terminator};
use crate::instrument::{FaultConfig, FaultSetting, SiteId};
use crate::memory::{Frame, Obj, Store};

pub use concrete::{
    concrete_run, input_value, run_observed, FaultInjection, FaultValue, Observer, RunOptions, SiteHit,
    Termination, Trace,
};
pub use interval::{Interval, Truth};

pub type AbsStore = Store<Interval>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssertStatus {
    Proven,
    Unproven,
    Unreachable,
}

/// Abstract state at a point as seen from its function: all globals, then
/// the frame's slots with by-reference parameters replaced by their targets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbsEnv {
    pub globals: Vec<Obj<Interval>>,
    pub slots: Vec<Obj<Interval>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisOptions {
    pub timeout: Duration,
    /// Overrides the range of named inputs.
    pub inputs: BTreeMap<String, Interval>,
    pub max_inline_depth: u32,
    pub widening_delay: u32,
    /// Keep `state_before` for every point.
    pub record_states: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            timeout: Duration::from_secs(10),
            inputs: BTreeMap::new(),
            max_inline_depth: 8,
            widening_delay: 3,
            record_states: true,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AbsResult {
    #[serde(skip)]
    pub state_before: HashMap<Point, AbsEnv>,
    pub assertion_status: BTreeMap<AssertId, AssertStatus>,
    pub dead_blocks: BTreeSet<(usize, BlockId)>,
    pub counter_max: BTreeMap<SiteId, Interval>,
    pub timed_out: bool,
}

impl AbsResult {
    pub fn is_dead(&self, func: usize, block: BlockId) -> bool {
        self.dead_blocks.contains(&(func, block))
    }

    pub fn status(&self, id: AssertId) -> AssertStatus {
        self.assertion_status.get(&id).copied().unwrap_or(AssertStatus::Unreachable)
    }
}

struct Timeout;

type R<T> = Result<T, Timeout>;

#[derive(Default)]
struct BlockOut {
    succs: Vec<(BlockId, AbsStore)>,
    ret: Option<(AbsStore, Option<Interval>)>,
}

struct Analyzer<'a> {
    p: &'a Program,
    cfgs: &'a [Cfg],
    opts: &'a AnalysisOptions,
    thresholds: Vec<i64>,
    deadline: Instant,
    faults: HashMap<u32, FaultSetting>,
    counters: Vec<(SiteId, usize)>,
    states: HashMap<Point, AbsEnv>,
    reached: BTreeSet<AssertId>,
    unproven: BTreeSet<AssertId>,
    live: BTreeSet<(usize, BlockId)>,
    counter_max: BTreeMap<SiteId, Interval>,
}

fn join_obj(a: &Obj<Interval>, b: &Obj<Interval>) -> Obj<Interval> {
    a.zip_with(b, &mut |_, x, y| x.join(*y))
}

fn join_store(a: &AbsStore, b: &AbsStore) -> AbsStore {
    Store {
        globals: a.globals.iter().zip(&b.globals).map(|(x, y)| join_obj(x, y)).collect(),
        frames: a
            .frames
            .iter()
            .zip(&b.frames)
            .map(|(x, y)| Frame {
                func: x.func,
                slots: x.slots.iter().zip(&y.slots).map(|(u, v)| join_obj(u, v)).collect(),
            })
            .collect(),
    }
}

fn widen_store(old: &AbsStore, new: &AbsStore, th: &[i64]) -> AbsStore {
    let w = |a: &Obj<Interval>, b: &Obj<Interval>| a.zip_with(b, &mut |t, x, y| x.widen(*y, t, th));
    Store {
        globals: old.globals.iter().zip(&new.globals).map(|(x, y)| w(x, y)).collect(),
        frames: old
            .frames
            .iter()
            .zip(&new.frames)
            .map(|(x, y)| Frame {
                func: x.func,
                slots: x.slots.iter().zip(&y.slots).map(|(u, v)| w(u, v)).collect(),
            })
            .collect(),
    }
}

/// Does every value of `v` survive a conversion to `t` unchanged?
fn fits(v: Interval, t: ScalarType) -> bool {
    v.lo >= t.min() && v.hi <= t.max()
}

fn truth_target(v: Interval, truth: bool) -> Option<Interval> {
    if !truth {
        return v.meet(Interval::ZERO);
    }
    let lo = if v.lo == 0 { 1 } else { v.lo };
    let hi = if v.hi == 0 { -1 } else { v.hi };
    (lo <= hi).then_some(Interval { lo, hi })
}

impl<'a> Analyzer<'a> {
    fn tick(&self) -> R<()> {
        if Instant::now() > self.deadline {
            Err(Timeout)
        } else {
            Ok(())
        }
    }

    fn input(&self, name: &str, t: ScalarType) -> Interval {
        if let Some(v) = self.opts.inputs.get(name) {
            return interval::cast(t, *v);
        }
        match self.p.domains.get(name) {
            Some(d) if !d.is_empty() => {
                let (lo, hi) = d.hull();
                interval::cast(t, Interval::new(lo, hi))
            }
            _ => Interval::top(t),
        }
    }

    fn fault(&self, s: u32, t: ScalarType) -> Interval {
        match self.faults.get(&s) {
            Some(FaultSetting::Symbolic) => Interval::top(t),
            Some(FaultSetting::Fixed(v)) => Interval::constant(crate::semantics::cast(t, *v)),
            None => Interval::ZERO,
        }
    }

    /// Abstract value of `e`; `None` when no execution gets past it.
    fn eval(&self, st: &AbsStore, e: &Expr) -> Option<Interval> {
        Some(match &e.kind {
            ExprKind::Const(v) => Interval::constant(*v),
            ExprKind::Input(name) => self.input(name, e.ty),
            ExprKind::Load(pl) => {
                if let Some(s) = self.p.fault_site_of(e) {
                    return Some(self.fault(s, e.ty));
                }
                self.load(st, pl)?
            }
            ExprKind::Unary(op, a) => interval::unop(*op, a.ty, self.eval(st, a)?),
            ExprKind::Cast(a) => interval::cast(e.ty, self.eval(st, a)?),
            ExprKind::Binary(op, a, b) => {
                let x = self.eval(st, a)?;
                match op {
                    BinOp::LogAnd | BinOp::LogOr => {
                        let short = if *op == BinOp::LogAnd { Truth::False } else { Truth::True };
                        let short_v = Interval::constant((*op == BinOp::LogOr) as i64);
                        if x.truth() == short {
                            return Some(short_v);
                        }
                        match self.eval(st, b) {
                            Some(y) => interval::binop(*op, a.ty, x, y),
                            None if x.truth() == Truth::Unknown => short_v,
                            None => return None,
                        }
                    }
                    _ => interval::binop(*op, a.ty, x, self.eval(st, b)?),
                }
            }
        })
    }

    /// Valid index range of a place, `Some(None)` for scalars.
    fn index(&self, st: &AbsStore, pl: &Place) -> Option<Option<(usize, usize)>> {
        let Some(ix) = &pl.index else { return Some(None) };
        let iv = self.eval(st, ix)?;
        let len = match st.container(pl) {
            Obj::Array(_, vs) => vs.len() as i64,
            _ => unreachable!("indexing a scalar"),
        };
        let v = iv.meet(Interval::new(0, len - 1))?;
        Some(Some((v.lo as usize, v.hi as usize)))
    }

    fn load(&self, st: &AbsStore, pl: &Place) -> Option<Interval> {
        let ix = self.index(st, pl)?;
        Some(match (st.container(pl), ix) {
            (Obj::Scalar(_, v), None) => *v,
            (Obj::Array(_, vs), Some((lo, hi))) => vs[lo..=hi].iter().copied().reduce(Interval::join).unwrap(),
            _ => unreachable!("place shape"),
        })
    }

    fn assign(&self, st: &mut AbsStore, pl: &Place, v: Interval) -> Option<()> {
        let ix = self.index(st, pl)?;
        match (st.container_mut(pl), ix) {
            (Obj::Scalar(t, c), None) => *c = interval::cast(*t, v),
            (Obj::Array(t, vs), Some((lo, hi))) => {
                let v = interval::cast(*t, v);
                if lo == hi {
                    vs[lo] = v;
                } else {
                    for c in &mut vs[lo..=hi] {
                        *c = c.join(v);
                    }
                }
            }
            _ => unreachable!("place shape"),
        }
        Some(())
    }

    /// Restrict the value of `e` to `target` by narrowing the locations it reads.
    fn refine(&self, mut st: AbsStore, e: &Expr, target: Interval) -> Option<AbsStore> {
        let cur = self.eval(&st, e)?;
        let t = cur.meet(target)?;
        match &e.kind {
            ExprKind::Load(pl) if self.p.fault_site_of(e).is_none() => {
                let ix = self.index(&st, pl)?;
                match (st.container_mut(pl), ix) {
                    (Obj::Scalar(_, c), None) => *c = t,
                    (Obj::Array(_, vs), Some((lo, hi))) if lo == hi => vs[lo] = t,
                    _ => {}
                }
                Some(st)
            }
            ExprKind::Cast(x) => {
                let xv = self.eval(&st, x)?;
                if fits(xv, e.ty) {
                    self.refine(st, x, t)
                } else {
                    Some(st)
                }
            }
            ExprKind::Binary(BinOp::Xor, x, z) => {
                if self.eval(&st, z)? == Interval::ZERO {
                    self.refine(st, x, t)
                } else if self.eval(&st, x)? == Interval::ZERO {
                    self.refine(st, z, t)
                } else {
                    Some(st)
                }
            }
            ExprKind::Binary(op @ (BinOp::Add | BinOp::Sub), x, c) => {
                let (Some(k), xv) = (self.eval(&st, c)?.singleton(), self.eval(&st, x)?) else {
                    return Some(st);
                };
                let k = if *op == BinOp::Add { k } else { -k };
                // only when no value of x wraps
                if fits(Interval { lo: xv.lo.saturating_add(k), hi: xv.hi.saturating_add(k) }, x.ty) {
                    self.refine(st, x, Interval::new(t.lo - k, t.hi - k))
                } else {
                    Some(st)
                }
            }
            _ => Some(st),
        }
    }

    /// The states in which `e` evaluates to `truth`.
    fn assume(&self, st: AbsStore, e: &Expr, truth: bool) -> Option<AbsStore> {
        let v = self.eval(&st, e)?;
        match (v.truth(), truth) {
            (Truth::False, true) | (Truth::True, false) => return None,
            _ => {}
        }
        let either = |a: Option<AbsStore>, b: Option<AbsStore>| match (a, b) {
            (Some(a), Some(b)) => Some(join_store(&a, &b)),
            (a, b) => a.or(b),
        };
        match &e.kind {
            ExprKind::Unary(UnOp::Not, a) => self.assume(st, a, !truth),
            ExprKind::Binary(BinOp::LogAnd, a, b) => {
                if truth {
                    let s = self.assume(st, a, true)?;
                    self.assume(s, b, true)
                } else {
                    let l = self.assume(st.clone(), a, false);
                    let r = self.assume(st, a, true).and_then(|s| self.assume(s, b, false));
                    either(l, r)
                }
            }
            ExprKind::Binary(BinOp::LogOr, a, b) => {
                if truth {
                    let l = self.assume(st.clone(), a, true);
                    let r = self.assume(st, a, false).and_then(|s| self.assume(s, b, true));
                    either(l, r)
                } else {
                    let s = self.assume(st, a, false)?;
                    self.assume(s, b, false)
                }
            }
            ExprKind::Binary(BinOp::Xor, x, z) if self.eval(&st, z)? == Interval::ZERO => self.assume(st, x, truth),
            ExprKind::Binary(BinOp::Xor, z, x) if self.eval(&st, z)? == Interval::ZERO => self.assume(st, x, truth),
            ExprKind::Cast(x) if fits(self.eval(&st, x)?, e.ty) => self.assume(st, x, truth),
            ExprKind::Binary(op, a, b) if op.is_comparison() => {
                let op = if truth { *op } else { op.negate().expect("comparison") };
                let (na, nb) = interval::refine_cmp(op, self.eval(&st, a)?, self.eval(&st, b)?)?;
                let st = self.refine(st, a, na)?;
                self.refine(st, b, nb)
            }
            _ => self.refine(st, e, truth_target(v, truth)?),
        }
    }

    fn record(&mut self, pt: Point, st: &AbsStore) {
        for &(s, g) in &self.counters {
            if let Obj::Scalar(_, v) = st.globals[g] {
                let e = self.counter_max.entry(s).or_insert(v);
                *e = e.join(v);
            }
        }
        if self.opts.record_states {
            let (globals, slots) = st.view();
            let env = AbsEnv { globals, slots };
            match self.states.get_mut(&pt) {
                Some(old) => {
                    *old = AbsEnv {
                        globals: old.globals.iter().zip(&env.globals).map(|(x, y)| join_obj(x, y)).collect(),
                        slots: old.slots.iter().zip(&env.slots).map(|(x, y)| join_obj(x, y)).collect(),
                    }
                }
                None => {
                    self.states.insert(pt, env);
                }
            }
        }
    }

    fn havoc(&self, st: &mut AbsStore, refs: &[crate::memory::ObjRef]) {
        for g in &mut st.globals {
            g.for_each_mut(&mut |t, v| *v = Interval::top(t));
        }
        for r in refs {
            st.get_mut(*r).for_each_mut(&mut |t, v| *v = Interval::top(t));
        }
    }

    fn call(
        &mut self,
        mut st: AbsStore,
        dest: &Option<Place>,
        func: usize,
        args: &[Arg],
        depth: u32,
        record: bool,
    ) -> R<Option<AbsStore>> {
        let p = self.p;
        let callee = &p.functions[func];
        let mut slots = Vec::with_capacity(callee.slot_count());
        let mut refs = Vec::new();
        for (a, pa) in args.iter().zip(&callee.params) {
            match (a, pa.ty) {
                (Arg::Value(e), ParamType::Scalar(t)) => match self.eval(&st, e) {
                    Some(v) => slots.push(Obj::Scalar(t, interval::cast(t, v))),
                    None => return Ok(None),
                },
                (Arg::Ref(v), _) => {
                    let r = st.target(*v);
                    refs.push(r);
                    slots.push(Obj::Ref(r));
                }
                _ => unreachable!("argument kind mismatch"),
            }
        }
        let ret = if depth >= self.opts.max_inline_depth {
            self.havoc(&mut st, &refs);
            callee.ret.map(Interval::top)
        } else {
            for l in &callee.locals {
                slots.push(Obj::new(p, l.ty, &mut |_| Interval::ZERO));
            }
            st.frames.push(Frame { func: Some(func), slots });
            match self.function(func, st, depth + 1, record)? {
                None => return Ok(None),
                Some((s, r)) => {
                    st = s;
                    st.frames.pop();
                    r
                }
            }
        };
        if let Some(d) = dest {
            if self.assign(&mut st, d, ret.unwrap_or(Interval::ZERO)).is_none() {
                return Ok(None);
            }
        }
        Ok(Some(st))
    }

    fn transfer(&mut self, f: usize, b: BlockId, mut st: AbsStore, depth: u32, record: bool) -> R<BlockOut> {
        self.tick()?;
        let cfgs = self.cfgs;
        let block = &cfgs[f].blocks[b];
        if record {
            self.live.insert((f, b));
        }
        for (i, ins) in block.instrs.iter().enumerate() {
            if record {
                self.record(Point { func: f, block: b, index: i }, &st);
            }
            let next = match &ins.kind {
                InstrKind::Assign { place, value } => self.eval(&st, value).and_then(|v| {
                    self.assign(&mut st, place, v)?;
                    Some(st)
                }),
                InstrKind::Zero { slot } => {
                    let fr = st.current();
                    st.frames[fr].slots[*slot].for_each_mut(&mut |_, v| *v = Interval::ZERO);
                    Some(st)
                }
                InstrKind::Print(e) => self.eval(&st, e).map(|_| st),
                InstrKind::Assert { id, cond, .. } => {
                    let v = self.eval(&st, cond);
                    if record {
                        if let Some(v) = v {
                            self.reached.insert(*id);
                            if v.truth() != Truth::True {
                                self.unproven.insert(*id);
                            }
                        }
                    }
                    // execution continues only where the assertion holds
                    self.assume(st, cond, true)
                }
                InstrKind::Call { dest, func, args } => self.call(st, dest, *func, args, depth, record)?,
            };
            match next {
                Some(s) => st = s,
                None => return Ok(BlockOut::default()),
            }
        }
        if record {
            self.record(Point { func: f, block: b, index: block.instrs.len() }, &st);
        }
        let mut out = BlockOut::default();
        match &block.term {
            Terminator::Goto(t) => out.succs.push((*t, st)),
            Terminator::Branch { cond, then_bb, else_bb } => {
                if let Some(s) = self.assume(st.clone(), cond, true) {
                    out.succs.push((*then_bb, s));
                }
                if let Some(s) = self.assume(st, cond, false) {
                    out.succs.push((*else_bb, s));
                }
            }
            Terminator::Return(e) => match e {
                None => out.ret = Some((st, None)),
                Some(e) => {
                    if let Some(v) = self.eval(&st, e) {
                        out.ret = Some((st, Some(v)));
                    }
                }
            },
            Terminator::Exit => out.ret = Some((st, None)),
            Terminator::Halt => {}
        }
        Ok(out)
    }

    /// Analyze one activation of `f` whose frame is on top of `init`.
    /// Returns the state at return (frame still pushed) and the return value.
    fn function(
        &mut self,
        f: usize,
        init: AbsStore,
        depth: u32,
        record: bool,
    ) -> R<Option<(AbsStore, Option<Interval>)>> {
        let cfgs = self.cfgs;
        let cfg = &cfgs[f];
        let n = cfg.blocks.len();
        let order = cfg.rpo();
        let mut rank = vec![usize::MAX; n];
        for (k, &b) in order.iter().enumerate() {
            rank[b] = k;
        }
        let mut input: Vec<Option<AbsStore>> = vec![None; n];
        let mut outs: Vec<Vec<(BlockId, AbsStore)>> = vec![Vec::new(); n];
        let mut visits = vec![0u32; n];
        input[cfg.entry] = Some(init.clone());
        let mut work = BTreeSet::from([(rank[cfg.entry], cfg.entry)]);
        while let Some((_, b)) = work.pop_first() {
            let Some(st) = input[b].clone() else { continue };
            let out = self.transfer(f, b, st, depth, false)?;
            for (s, ns) in &out.succs {
                let s = *s;
                let new = match &input[s] {
                    None => ns.clone(),
                    Some(old) => {
                        let j = join_store(old, ns);
                        visits[s] += 1;
                        let widen = (cfg.loop_headers.contains(&s) && visits[s] > self.opts.widening_delay)
                            || visits[s] > self.opts.widening_delay + 16;
                        if widen {
                            widen_store(old, &j, &self.thresholds)
                        } else {
                            j
                        }
                    }
                };
                if input[s].as_ref() != Some(&new) {
                    input[s] = Some(new);
                    work.insert((rank[s], s));
                }
            }
            outs[b] = out.succs;
        }
        // one descending pass, which also records when asked
        let mut ret: Option<(AbsStore, Option<Interval>)> = None;
        for &b in &order {
            let mut acc = (b == cfg.entry).then(|| init.clone());
            for (p, po) in outs.iter().enumerate() {
                if rank[p] == usize::MAX {
                    continue;
                }
                for (s, st) in po {
                    if *s == b {
                        acc = Some(match acc {
                            None => st.clone(),
                            Some(a) => join_store(&a, st),
                        });
                    }
                }
            }
            input[b] = acc;
            let Some(st) = input[b].clone() else {
                outs[b].clear();
                continue;
            };
            let out = self.transfer(f, b, st, depth, record)?;
            outs[b] = out.succs;
            if let Some((s, v)) = out.ret {
                ret = Some(match ret {
                    None => (s, v),
                    Some((s0, v0)) => (
                        join_store(&s0, &s),
                        match (v0, v) {
                            (Some(a), Some(b)) => Some(a.join(b)),
                            (a, b) => a.or(b),
                        },
                    ),
                });
            }
        }
        if record && ret.is_some() {
            self.live.insert((f, cfg.exit));
        }
        Ok(ret)
    }
}

/// Constants compared against in the program, with their neighbours.
fn thresholds(p: &Program) -> Vec<i64> {
    fn consts(e: &Expr, out: &mut Vec<i64>) {
        match &e.kind {
            ExprKind::Const(c) => out.extend([c - 1, *c, c + 1]),
            ExprKind::Cast(a) => consts(a, out),
            _ => {}
        }
    }
    let mut out = vec![0];
    for f in &p.functions {
        visit_stmts(&f.body, &mut |s: &Stmt| {
            let mut es: Vec<&Expr> = Vec::new();
            match &s.kind {
                StmtKind::If { cond, .. } | StmtKind::While { cond, .. } | StmtKind::Assert { cond, .. } => {
                    es.push(cond)
                }
                StmtKind::For { cond: Some(c), .. } => es.push(c),
                _ => {}
            }
            for e in es {
                e.walk(&mut |x: &Expr| {
                    if let ExprKind::Binary(op, a, b) = &x.kind {
                        if op.is_comparison() {
                            consts(a, &mut out);
                            consts(b, &mut out);
                        }
                    }
                });
            }
        });
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Interval analysis of `p` from its entry function.
pub fn analyze(p: &Program, cfgs: &[Cfg], faults: &FaultConfig, opts: &AnalysisOptions) -> AbsResult {
    let entry = p.entry.expect("program has no entry function");
    let mut a = Analyzer {
        p,
        cfgs,
        opts,
        thresholds: thresholds(p),
        deadline: Instant::now() + opts.timeout,
        faults: p
            .fault_globals()
            .keys()
            .filter_map(|&s| match faults.setting(SiteId(s)) {
                FaultSetting::Fixed(0) => None,
                st => Some((s, st)),
            })
            .collect(),
        counters: p.counter_globals().into_iter().map(|(s, g)| (SiteId(s), g)).collect(),
        states: HashMap::new(),
        reached: BTreeSet::new(),
        unproven: BTreeSet::new(),
        live: BTreeSet::new(),
        counter_max: BTreeMap::new(),
    };
    let inputs = |name: Option<&str>, t: ScalarType| name.map_or(Interval::ZERO, |n| a.input(n, t));
    let init = Store::initial(
        p,
        entry,
        &mut |g, t| match g.kind {
            GlobalKind::Fault(_) => Interval::ZERO,
            _ => Interval::constant(crate::semantics::cast(t, g.init.unwrap_or(0))),
        },
        &mut |n, t| inputs(n, t),
        &mut |_| Interval::ZERO,
    );
    let ids: Vec<AssertId> = p.assertions().iter().map(|a| a.id).collect();
    match a.function(entry, init, 0, true) {
        Err(Timeout) => AbsResult {
            state_before: HashMap::new(),
            assertion_status: ids.into_iter().map(|id| (id, AssertStatus::Unproven)).collect(),
            dead_blocks: BTreeSet::new(),
            counter_max: a.counters.iter().map(|&(s, _)| (s, Interval::top(ScalarType::U32))).collect(),
            timed_out: true,
        },
        Ok(exit) => {
            if let Some((st, _)) = &exit {
                let c = &cfgs[entry];
                a.record(Point { func: entry, block: c.exit, index: 0 }, st);
            }
            let status = ids
                .into_iter()
                .map(|id| {
                    let s = if !a.reached.contains(&id) {
                        AssertStatus::Unreachable
                    } else if a.unproven.contains(&id) {
                        AssertStatus::Unproven
                    } else {
                        AssertStatus::Proven
                    };
                    (id, s)
                })
                .collect();
            let mut dead = BTreeSet::new();
            for (f, c) in cfgs.iter().enumerate() {
                for b in 0..c.blocks.len() {
                    if !a.live.contains(&(f, b)) {
                        dead.insert((f, b));
                    }
                }
            }
            AbsResult {
                state_before: a.states,
                assertion_status: status,
                dead_blocks: dead,
                counter_max: a.counter_max,
                timed_out: false,
            }
        }
    }
}
