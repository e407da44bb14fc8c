//! Reference concrete interpreter with fault injection.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::frontend::ast::*;
use crate::frontend::cfg::{BlockId, Cfg, InstrKind, Point, Terminator};
use crate::instrument::SiteId;
use crate::memory::{Obj, Store};
use crate::semantics;

/// Value XORed into a site's expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultValue {
    Const(i64),
    /// Invert the truth of the original value: XOR with the value itself
    /// when it is non-zero, with 1 otherwise.
    Flip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FaultInjection {
    pub site: SiteId,
    /// 1-based evaluation count of the site.
    pub occurrence: u32,
    pub value: FaultValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOptions {
    pub step_limit: u64,
    /// Keep the sequence of visited blocks.
    pub record_blocks: bool,
    /// Keep the sequence of site evaluations.
    pub record_sites: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { step_limit: 1_000_000, record_blocks: false, record_sites: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Normal,
    AssertionViolation(AssertId),
    Countermeasure,
    StepLimit,
    OutOfBounds,
}

/// An evaluation of a site where a non-zero value was injected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteHit {
    pub site: SiteId,
    pub occurrence: u32,
    /// Value of the expression before the XOR.
    pub pre: i64,
    pub injected: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub termination: Termination,
    pub steps: u64,
    pub blocks: Vec<(usize, BlockId)>,
    pub outputs: Vec<i64>,
    pub hits: Vec<SiteHit>,
    /// Every site evaluation in order, when requested.
    pub site_log: Vec<SiteId>,
    /// Evaluation counts of every site that was evaluated at least once.
    pub occurrences: BTreeMap<SiteId, u32>,
    /// Final values of `fault_<n>_counter` globals.
    pub counters: BTreeMap<SiteId, i64>,
    pub verdicts: Vec<(AssertId, bool)>,
    pub return_value: Option<i64>,
}

pub type Observer<'o> = dyn FnMut(Point, &Store<i64>) + 'o;

enum Stop {
    OutOfBounds,
}

struct Machine<'a, 'o> {
    p: &'a Program,
    cfgs: &'a [Cfg],
    inputs: &'a BTreeMap<String, i64>,
    faults: HashMap<(u32, u32), FaultValue>,
    store: Store<i64>,
    trace: Trace,
    observer: Option<&'o mut Observer<'o>>,
    record_sites: bool,
}

/// Value of an input in a run: the supplied value, else the first value of
/// its domain, else 0.
pub fn input_value(p: &Program, inputs: &BTreeMap<String, i64>, name: &str, t: ScalarType) -> i64 {
    let v = inputs
        .get(name)
        .copied()
        .or_else(|| p.domains.get(name).map(|d| d.first()))
        .unwrap_or(0);
    semantics::cast(t, v)
}

impl<'a, 'o> Machine<'a, 'o> {
    fn eval(&mut self, e: &Expr) -> Result<i64, Stop> {
        Ok(match &e.kind {
            ExprKind::Const(v) => *v,
            ExprKind::Input(name) => input_value(self.p, self.inputs, name, e.ty),
            ExprKind::Load(pl) => {
                if let Some(s) = self.p.fault_site_of(e) {
                    let inj = self.inject(s, 0);
                    return Ok(semantics::cast(e.ty, inj));
                }
                self.load(pl)?
            }
            ExprKind::Unary(op, a) => {
                let v = self.eval(a)?;
                semantics::unop(*op, a.ty, v)
            }
            ExprKind::Cast(a) => {
                let v = self.eval(a)?;
                semantics::cast(e.ty, v)
            }
            ExprKind::Binary(op, a, b) => {
                let x = self.eval(a)?;
                match op {
                    BinOp::LogAnd if x == 0 => return Ok(0),
                    BinOp::LogOr if x != 0 => return Ok(1),
                    BinOp::Xor => {
                        if let Some(s) = self.p.fault_site_of(b) {
                            let inj = semantics::cast(a.ty, self.inject(s, x));
                            return Ok(semantics::binop(BinOp::Xor, a.ty, x, inj));
                        }
                    }
                    _ => {}
                }
                let y = self.eval(b)?;
                semantics::binop(*op, a.ty, x, y)
            }
        })
    }

    /// Count an evaluation of site `s` and return the injected value.
    fn inject(&mut self, s: u32, pre: i64) -> i64 {
        let occ = self.trace.occurrences.entry(SiteId(s)).or_insert(0);
        *occ += 1;
        let occ = *occ;
        if self.record_sites {
            self.trace.site_log.push(SiteId(s));
        }
        let v = match self.faults.get(&(s, occ)) {
            None => 0,
            Some(FaultValue::Const(v)) => *v,
            Some(FaultValue::Flip) => {
                if pre != 0 {
                    pre
                } else {
                    1
                }
            }
        };
        if v != 0 {
            self.trace.hits.push(SiteHit { site: SiteId(s), occurrence: occ, pre, injected: v });
        }
        v
    }

    fn index(&mut self, pl: &Place) -> Result<Option<usize>, Stop> {
        let Some(ix) = &pl.index else { return Ok(None) };
        let i = self.eval(ix)?;
        let len = match self.store.container(pl) {
            Obj::Array(_, vs) => vs.len(),
            _ => unreachable!("indexing a scalar"),
        };
        if i < 0 || i as usize >= len {
            return Err(Stop::OutOfBounds);
        }
        Ok(Some(i as usize))
    }

    fn load(&mut self, pl: &Place) -> Result<i64, Stop> {
        let i = self.index(pl)?;
        Ok(match (self.store.container(pl), i) {
            (Obj::Scalar(_, v), None) => *v,
            (Obj::Array(_, vs), Some(i)) => vs[i],
            _ => unreachable!("place shape"),
        })
    }

    fn store_to(&mut self, pl: &Place, v: i64) -> Result<(), Stop> {
        let i = self.index(pl)?;
        match (self.store.container_mut(pl), i) {
            (Obj::Scalar(t, c), None) => *c = semantics::cast(*t, v),
            (Obj::Array(t, vs), Some(i)) => vs[i] = semantics::cast(*t, v),
            _ => unreachable!("place shape"),
        }
        Ok(())
    }

    fn observe(&mut self, pt: Point) {
        if let Some(o) = self.observer.as_mut() {
            o(pt, &self.store);
        }
    }

    fn run(&mut self, entry: usize, limit: u64, record_blocks: bool) -> Termination {
        // (function, block, index) of each active call; the top is the current position
        let mut stack: Vec<(usize, BlockId, usize)> = vec![(entry, self.cfgs[entry].entry, 0)];
        if record_blocks {
            self.trace.blocks.push((entry, self.cfgs[entry].entry));
        }
        loop {
            if self.trace.steps >= limit {
                return Termination::StepLimit;
            }
            self.trace.steps += 1;
            let (f, b, i) = *stack.last().unwrap();
            let cfg = &self.cfgs[f];
            let block = &cfg.blocks[b];
            self.observe(Point { func: f, block: b, index: i });
            if i < block.instrs.len() {
                let r = match &block.instrs[i].kind {
                    InstrKind::Assign { place, value } => {
                        self.eval(value).and_then(|v| self.store_to(place, v)).map(|_| None)
                    }
                    InstrKind::Zero { slot } => {
                        let fr = self.store.current();
                        self.store.frames[fr].slots[*slot].for_each_mut(&mut |_, v| *v = 0);
                        Ok(None)
                    }
                    InstrKind::Print(e) => self.eval(e).map(|v| {
                        self.trace.outputs.push(v);
                        None
                    }),
                    InstrKind::Assert { id, cond, .. } => self.eval(cond).map(|v| {
                        self.trace.verdicts.push((*id, v != 0));
                        (v == 0).then_some(Termination::AssertionViolation(*id))
                    }),
                    InstrKind::Call { func, args, .. } => match self.enter(*func, args) {
                        Ok(()) => {
                            let c = &self.cfgs[*func];
                            stack.push((*func, c.entry, 0));
                            if record_blocks {
                                self.trace.blocks.push((*func, c.entry));
                            }
                            continue;
                        }
                        Err(e) => Err(e),
                    },
                };
                match r {
                    Err(Stop::OutOfBounds) => return Termination::OutOfBounds,
                    Ok(Some(t)) => return t,
                    Ok(None) => stack.last_mut().unwrap().2 += 1,
                }
                continue;
            }
            let next = match &block.term {
                Terminator::Goto(t) => Ok(Some(*t)),
                Terminator::Branch { cond, then_bb, else_bb } => {
                    self.eval(cond).map(|v| Some(if v != 0 { *then_bb } else { *else_bb }))
                }
                Terminator::Halt => return Termination::Countermeasure,
                Terminator::Return(e) => match e.as_ref().map(|e| self.eval(e)).transpose() {
                    Err(e) => Err(e),
                    Ok(v) => {
                        stack.pop();
                        if stack.is_empty() {
                            self.trace.return_value = v;
                            return Termination::Normal;
                        }
                        self.store.frames.pop();
                        let (cf, cb, ci) = *stack.last().unwrap();
                        if let InstrKind::Call { dest: Some(d), .. } = &self.cfgs[cf].blocks[cb].instrs[ci].kind {
                            let d = d.clone();
                            if let Err(Stop::OutOfBounds) = self.store_to(&d, v.unwrap_or(0)) {
                                return Termination::OutOfBounds;
                            }
                        }
                        stack.last_mut().unwrap().2 += 1;
                        Ok(None)
                    }
                },
                Terminator::Exit => {
                    // falling into the exit block returns nothing
                    stack.pop();
                    if stack.is_empty() {
                        return Termination::Normal;
                    }
                    self.store.frames.pop();
                    stack.last_mut().unwrap().2 += 1;
                    Ok(None)
                }
            };
            match next {
                Err(Stop::OutOfBounds) => return Termination::OutOfBounds,
                Ok(Some(t)) => {
                    *stack.last_mut().unwrap() = (f, t, 0);
                    if record_blocks {
                        self.trace.blocks.push((f, t));
                    }
                }
                Ok(None) => {}
            }
        }
    }

    /// Push a frame for a call from the current frame.
    fn enter(&mut self, func: usize, args: &[Arg]) -> Result<(), Stop> {
        let callee = &self.p.functions[func];
        let mut slots = Vec::with_capacity(callee.slot_count());
        for (a, pa) in args.iter().zip(&callee.params) {
            match (a, pa.ty) {
                (Arg::Value(e), ParamType::Scalar(t)) => {
                    let v = self.eval(e)?;
                    slots.push(Obj::Scalar(t, semantics::cast(t, v)));
                }
                (Arg::Ref(v), _) => slots.push(Obj::Ref(self.store.target(*v))),
                _ => unreachable!("argument kind mismatch"),
            }
        }
        for l in &callee.locals {
            slots.push(Obj::new(self.p, l.ty, &mut |_| 0));
        }
        self.store.frames.push(crate::memory::Frame { func: Some(func), slots });
        Ok(())
    }
}

/// Execute the entry function of `p`.
pub fn concrete_run(
    p: &Program,
    cfgs: &[Cfg],
    inputs: &BTreeMap<String, i64>,
    faults: &[FaultInjection],
    opts: &RunOptions,
) -> Trace {
    run_observed(p, cfgs, inputs, faults, opts, None)
}

/// `concrete_run` calling `observer` before every instruction and terminator.
pub fn run_observed<'o>(
    p: &Program,
    cfgs: &[Cfg],
    inputs: &BTreeMap<String, i64>,
    faults: &[FaultInjection],
    opts: &RunOptions,
    observer: Option<&'o mut Observer<'o>>,
) -> Trace {
    let entry = p.entry.expect("program has no entry function");
    let store = Store::initial(
        p,
        entry,
        &mut |g, t| match g.kind {
            GlobalKind::Fault(_) => 0,
            _ => semantics::cast(t, g.init.unwrap_or(0)),
        },
        &mut |name, t| name.map_or(0, |n| input_value(p, inputs, n, t)),
        &mut |_| 0,
    );
    let mut m = Machine {
        p,
        cfgs,
        inputs,
        faults: faults.iter().map(|f| ((f.site.0, f.occurrence), f.value)).collect(),
        store,
        trace: Trace {
            termination: Termination::Normal,
            steps: 0,
            blocks: Vec::new(),
            outputs: Vec::new(),
            hits: Vec::new(),
            site_log: Vec::new(),
            occurrences: BTreeMap::new(),
            counters: BTreeMap::new(),
            verdicts: Vec::new(),
            return_value: None,
        },
        observer,
        record_sites: opts.record_sites,
    };
    let t = m.run(entry, opts.step_limit, opts.record_blocks);
    m.trace.termination = t;
    for (s, g) in p.counter_globals() {
        if let Obj::Scalar(_, v) = m.store.globals[g] {
            m.trace.counters.insert(SiteId(s), v);
        }
    }
    m.trace
}
