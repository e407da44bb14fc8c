//! Layered satisfiability checks for path constraints.
//!
//! Cheap layers run first: constant folding, interval refutation, the
//! current model, bounded enumeration. Anything left is bit-blasted.

use std::collections::{BTreeSet, HashMap};

use super::bitblast::Blaster;
use super::term::{Flat, Model, Op, Term, VarId, VarTable};
use crate::frontend::ast::{BinOp, ScalarType, UnOp};

pub type Interval = (i64, i64);

const ENUM_POINTS: u64 = 1 << 18;
const ENUM_WORK: u64 = 1 << 25;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub queries: u64,
    pub by_folding: u64,
    pub by_intervals: u64,
    pub by_hint: u64,
    pub by_cache: u64,
    pub by_guess: u64,
    pub by_enumeration: u64,
    pub by_sat: u64,
}

#[derive(Default)]
pub struct Solver {
    cache: HashMap<Vec<Term>, Option<Model>>,
    pub stats: SolverStats,
}

fn type_range(ty: ScalarType) -> Interval {
    (ty.min(), ty.max())
}

/// Interval environment over variables and over compound subterms that
/// cannot be inverted (so `k <= a ^ b` and `k > a ^ b` still clash).
pub struct Ranges<'v> {
    vars: &'v VarTable,
    map: HashMap<VarId, Interval>,
    sub: HashMap<Term, Interval>,
}

impl<'v> Ranges<'v> {
    pub fn new(vars: &'v VarTable) -> Ranges<'v> {
        Ranges { vars, map: HashMap::new(), sub: HashMap::new() }
    }

    pub fn var(&self, v: VarId) -> Interval {
        if let Some(i) = self.map.get(&v) {
            return *i;
        }
        let info = self.vars.get(v);
        match &info.values {
            Some(vs) if !vs.is_empty() => (*vs.iter().min().unwrap(), *vs.iter().max().unwrap()),
            _ => type_range(info.ty),
        }
    }

    /// Sound over-approximation of the values `t` can take.
    pub fn eval(&self, t: &Term) -> Interval {
        let r = self.eval_structural(t);
        match self.sub.get(t) {
            Some(&(lo, hi)) => (r.0.max(lo), r.1.min(hi)),
            None => r,
        }
    }

    fn eval_structural(&self, t: &Term) -> Interval {
        let full = type_range(t.ty());
        match t.op() {
            Op::Const(v) => (*v, *v),
            Op::Var(v) => self.var(*v),
            Op::Cast(a) => {
                let (lo, hi) = self.eval(a);
                if full.0 <= lo && hi <= full.1 {
                    (lo, hi)
                } else {
                    full
                }
            }
            Op::Unary(UnOp::Not, _) => (0, 1),
            Op::Unary(_, _) => full,
            Op::Ite(_, a, b) => {
                let (x, y) = (self.eval(a), self.eval(b));
                (x.0.min(y.0), x.1.max(y.1))
            }
            Op::Binary(op, a, b) => {
                if op.is_comparison() || op.is_logical() {
                    return (0, 1);
                }
                let (x, y) = (self.eval(a), self.eval(b));
                let r = match op {
                    BinOp::Add => (x.0 + y.0, x.1 + y.1),
                    BinOp::Sub => (x.0 - y.1, x.1 - y.0),
                    BinOp::And if x.0 >= 0 && y.0 >= 0 => (0, x.1.min(y.1)),
                    BinOp::Rem if !t.ty().signed() && y.0 > 0 => (0, x.1.min(y.1 - 1)),
                    BinOp::Shr if !t.ty().signed() => (0, x.1),
                    _ => full,
                };
                if full.0 <= r.0 && r.1 <= full.1 {
                    r
                } else {
                    full
                }
            }
        }
    }

    fn set(&mut self, v: VarId, lo: i64, hi: i64) -> Result<bool, ()> {
        let (a, b) = self.var(v);
        let (lo, hi) = (lo.max(a), hi.min(b));
        if lo > hi {
            return Err(());
        }
        if (lo, hi) == (a, b) {
            return Ok(false);
        }
        self.map.insert(v, (lo, hi));
        Ok(true)
    }

    /// Narrow variables so that `t` may lie in `[lo, hi]`.
    fn restrict(&mut self, t: &Term, lo: i64, hi: i64) -> Result<bool, ()> {
        let cur = self.eval(t);
        let (lo, hi) = (lo.max(cur.0), hi.min(cur.1));
        if lo > hi {
            return Err(());
        }
        let mut changed = false;
        if !matches!(t.op(), Op::Var(_) | Op::Const(_)) && (lo, hi) != cur {
            self.sub.insert(t.clone(), (lo, hi));
            changed = true;
        }
        let inner = match t.op() {
            Op::Var(v) => self.set(*v, lo, hi),
            Op::Cast(a) => {
                let (x, y) = self.eval(a);
                if t.ty().min() <= x && y <= t.ty().max() {
                    self.restrict(a, lo, hi)
                } else {
                    Ok(false)
                }
            }
            Op::Binary(op @ (BinOp::Add | BinOp::Sub), a, b) => {
                let Some(c) = b.as_const() else { return Ok(changed) };
                // only when the operation cannot wrap, so eval(t) was exact
                if self.eval_structural(t) == type_range(t.ty()) {
                    return Ok(changed);
                }
                if *op == BinOp::Add {
                    self.restrict(a, lo - c, hi - c)
                } else {
                    self.restrict(a, lo + c, hi + c)
                }
            }
            _ => Ok(false),
        };
        Ok(inner? | changed)
    }

    /// Narrow variables assuming `t` is non-zero (`want`) or zero.
    pub fn assume(&mut self, t: &Term, want: bool) -> Result<bool, ()> {
        match t.op() {
            Op::Const(v) => {
                if (*v != 0) == want {
                    Ok(false)
                } else {
                    Err(())
                }
            }
            Op::Unary(UnOp::Not, a) => self.assume(a, !want),
            Op::Binary(BinOp::LogAnd, a, b) if want => Ok(self.assume(a, true)? | self.assume(b, true)?),
            Op::Binary(BinOp::LogOr, a, b) if !want => Ok(self.assume(a, false)? | self.assume(b, false)?),
            Op::Binary(op, a, b) if op.is_comparison() => {
                let op = if want { *op } else { op.negate().expect("comparison") };
                let (x, y) = (self.eval(a), self.eval(b));
                let one = |o: BinOp, s: &mut Self, e: &Term, k: Interval| -> Result<bool, ()> {
                    // constrain e (o) k
                    match o {
                        BinOp::Eq => s.restrict(e, k.0, k.1),
                        BinOp::Lt => s.restrict(e, i64::MIN / 2, k.1 - 1),
                        BinOp::Le => s.restrict(e, i64::MIN / 2, k.1),
                        BinOp::Gt => s.restrict(e, k.0 + 1, i64::MAX / 2),
                        BinOp::Ge => s.restrict(e, k.0, i64::MAX / 2),
                        BinOp::Ne if k.0 == k.1 => {
                            let (lo, hi) = s.eval(e);
                            if lo == hi && lo == k.0 {
                                Err(())
                            } else if lo == k.0 {
                                s.restrict(e, lo + 1, hi)
                            } else if hi == k.0 {
                                s.restrict(e, lo, hi - 1)
                            } else {
                                Ok(false)
                            }
                        }
                        _ => Ok(false),
                    }
                };
                let l = one(op, self, a, y)?;
                let r = one(op.flip(), self, b, x)?;
                Ok(l | r)
            }
            _ => {
                let (lo, hi) = self.eval(t);
                if want && lo == 0 && hi == 0 {
                    Err(())
                } else if !want {
                    self.restrict(t, 0, 0)
                } else if lo == 0 {
                    self.restrict(t, 1, hi)
                } else if hi == 0 {
                    self.restrict(t, lo, -1)
                } else {
                    Ok(false)
                }
            }
        }
    }

    /// Propagate all constraints to a fixpoint; `false` if refuted.
    pub fn propagate(&mut self, cs: &[Term]) -> bool {
        for _ in 0..16 {
            let mut changed = false;
            for c in cs {
                match self.assume(c, true) {
                    Err(()) => return false,
                    Ok(ch) => changed |= ch,
                }
            }
            if !changed {
                break;
            }
        }
        true
    }
}

/// The constraints of `pc` connected to `seed` through shared variables.
pub fn slice(pc: &[Term], seed: &[Term]) -> Vec<Term> {
    let mut vars = BTreeSet::new();
    for t in seed {
        t.vars(&mut vars);
    }
    let pcv: Vec<BTreeSet<VarId>> = pc
        .iter()
        .map(|t| {
            let mut s = BTreeSet::new();
            t.vars(&mut s);
            s
        })
        .collect();
    let mut taken = vec![false; pc.len()];
    loop {
        let mut grew = false;
        for (i, vs) in pcv.iter().enumerate() {
            if !taken[i] && !vs.is_disjoint(&vars) {
                taken[i] = true;
                vars.extend(vs.iter().copied());
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
    pc.iter().zip(taken).filter(|(_, k)| *k).map(|(t, _)| t.clone()).collect()
}

pub fn holds(cs: &[Term], m: &Model) -> bool {
    cs.iter().all(|c| c.eval_model(m) != 0)
}

impl Solver {
    /// Find a model of `pc ∧ extra`, assuming `hint` already satisfies `pc`.
    /// Only the part of `pc` sharing variables with `extra` is solved; the
    /// rest of the model is taken from `hint`.
    pub fn check(&mut self, vars: &VarTable, pc: &[Term], extra: &[Term], hint: &Model) -> Option<Model> {
        self.stats.queries += 1;
        let mut extra_live = Vec::new();
        for t in extra {
            match t.as_const() {
                Some(0) => {
                    self.stats.by_folding += 1;
                    return None;
                }
                Some(_) => {}
                None => extra_live.push(t.clone()),
            }
        }
        if extra_live.is_empty() {
            self.stats.by_folding += 1;
            return Some(hint.clone());
        }
        if holds(&extra_live, hint) {
            self.stats.by_hint += 1;
            return Some(hint.clone());
        }
        let mut cluster = slice(pc, &extra_live);
        if let Some(m) = guess(vars, &cluster, &extra_live, hint) {
            self.stats.by_guess += 1;
            return Some(m);
        }
        cluster.extend(extra_live);
        cluster.sort();
        cluster.dedup();
        let sub = self.solve_cluster(vars, cluster)?;
        let mut m = hint.clone();
        m.extend(sub);
        debug_assert!(holds(pc, &m) && holds(extra, &m), "merged model must satisfy the query");
        Some(m)
    }

    /// Solve a closed constraint set from scratch.
    pub fn solve_cluster(&mut self, vars: &VarTable, cluster: Vec<Term>) -> Option<Model> {
        if let Some(r) = self.cache.get(&cluster) {
            self.stats.by_cache += 1;
            return r.clone();
        }
        let r = self.solve_uncached(vars, &cluster);
        self.cache.insert(cluster, r.clone());
        r
    }

    fn solve_uncached(&mut self, vars: &VarTable, cs: &[Term]) -> Option<Model> {
        let mut ranges = Ranges::new(vars);
        if !ranges.propagate(cs) {
            self.stats.by_intervals += 1;
            return None;
        }
        let flat = Flat::new(cs);
        let mut cand: Vec<Vec<i64>> = Vec::new();
        let mut points: u64 = 1;
        for &v in &flat.vars {
            let (lo, hi) = ranges.var(v);
            let n = (hi - lo + 1) as u64;
            points = points.saturating_mul(n.min(vars.get(v).values.as_ref().map_or(n, |x| x.len() as u64)));
            if points > ENUM_POINTS || points.saturating_mul(flat.len() as u64) > ENUM_WORK {
                cand.clear();
                break;
            }
            let vals = match &vars.get(v).values {
                Some(vs) => vs.iter().copied().filter(|x| lo <= *x && *x <= hi).collect(),
                None => (lo..=hi).collect(),
            };
            cand.push(vals);
        }
        if cand.len() == flat.vars.len() {
            self.stats.by_enumeration += 1;
            return enumerate(&flat, &cand).map(|vals| flat.vars.iter().copied().zip(vals).collect());
        }
        self.stats.by_sat += 1;
        let mut b = Blaster::new();
        for c in cs {
            b.assert(c);
        }
        for &v in &flat.vars {
            // finite domains and propagated bounds help the SAT search
            let ty = vars.get(v).ty;
            let x = Term::var(v, ty);
            if let Some(vs) = &vars.get(v).values {
                let mut any = Term::truth(false);
                for &k in vs {
                    any = Term::binary(BinOp::LogOr, any, Term::binary(BinOp::Eq, x.clone(), Term::konst(k, ty)));
                }
                b.assert(&any);
            }
        }
        let m = b.solve(vars)?;
        debug_assert!(holds(cs, &m));
        Some(m)
    }
}

/// Try changing one variable of `hint` to a value suggested by the
/// constants of `extra`. Loop exits and off-by-one bounds usually fall to
/// this without a SAT call.
fn guess(vars: &VarTable, pc: &[Term], extra: &[Term], hint: &Model) -> Option<Model> {
    let mut consts = BTreeSet::new();
    let mut vs = BTreeSet::new();
    for t in extra {
        t.vars(&mut vs);
        t.walk(&mut Default::default(), &mut |n| {
            if let Some(c) = n.as_const() {
                consts.insert(c);
            }
        });
    }
    let mut near: BTreeSet<i64> = [0, 1, -1].into();
    for &c in &consts {
        near.extend([c.wrapping_sub(1), c, c.wrapping_add(1), c.wrapping_neg()]);
    }
    let mut tried = 0;
    for &v in &vs {
        let info = vars.get(v);
        let ty = info.ty;
        let mut cand: BTreeSet<i64> = BTreeSet::new();
        cand.extend([ty.min(), ty.max()]);
        for &x in &near {
            cand.insert(ty.wrap(x as i128));
            for &d in &consts {
                cand.insert(ty.wrap((x ^ d) as i128));
            }
        }
        if let Some(allowed) = &info.values {
            cand.retain(|x| allowed.contains(x));
        }
        for x in cand {
            tried += 1;
            if tried > 512 {
                return None;
            }
            let mut m = hint.clone();
            m.insert(v, x);
            if holds(extra, &m) && holds(pc, &m) {
                return Some(m);
            }
        }
    }
    None
}

fn enumerate(flat: &Flat, cand: &[Vec<i64>]) -> Option<Vec<i64>> {
    if cand.iter().any(|c| c.is_empty()) {
        return None;
    }
    let mut idx = vec![0usize; cand.len()];
    let mut vals: Vec<i64> = cand.iter().map(|c| c[0]).collect();
    let mut scratch = Vec::with_capacity(flat.len());
    loop {
        if flat.holds(&vals, &mut scratch) {
            return Some(vals);
        }
        let mut k = 0;
        loop {
            if k == cand.len() {
                return None;
            }
            idx[k] += 1;
            if idx[k] < cand[k].len() {
                vals[k] = cand[k][idx[k]];
                break;
            }
            idx[k] = 0;
            vals[k] = cand[k][0];
            k += 1;
        }
    }
}
