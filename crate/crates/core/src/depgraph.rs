//! Program dependence graph over the instrumented program.
//!
//! Nodes are program points plus interface nodes for function inputs and
//! outputs and for the inputs and outputs of each call. A node depends on
//! another through data (reaching definitions), control (postdominance on a
//! point-level CFG) or interprocedural edges. The graph is context
//! insensitive: a callee's interface nodes are shared by all its call sites.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::absint::AbsResult;
use crate::frontend::ast::*;
use crate::frontend::cfg::{dominators, Cfg, InstrKind, Point, Terminator};
use crate::instrument::{site_points, Registry, SiteId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Base {
    Global(usize),
    /// Slot of a function's frame.
    Slot(usize, usize),
    /// Return value of a function.
    Ret(usize),
}

/// A storage location for dependence purposes. Arrays are one location.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Loc {
    pub base: Base,
    pub field: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    Statement,
    FunctionInput,
    FunctionOutput,
    CallInput,
    CallOutput,
    Assertion,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PdgNode {
    pub id: usize,
    pub kind: NodeKind,
    pub func: usize,
    /// The statement, or the call for call interface nodes.
    pub point: Option<Point>,
    /// Interface location; `None` on a function-input node means the
    /// function's entry (whether it runs at all).
    pub loc: Option<Loc>,
    pub assertion: Option<AssertId>,
}

/// Edges are `(from, to)` where `to` depends on `from`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Pdg {
    pub nodes: Vec<PdgNode>,
    pub data_edges: BTreeSet<(usize, usize)>,
    pub control_edges: BTreeSet<(usize, usize)>,
    pub interproc_edges: BTreeSet<(usize, usize)>,
    #[serde(skip)]
    pub point_nodes: HashMap<Point, usize>,
    pub assertion_nodes: BTreeMap<AssertId, usize>,
    /// Nodes of the statements reading each fault variable.
    pub site_nodes: BTreeMap<SiteId, Vec<usize>>,
    /// Per function: entry node and interface nodes by location.
    #[serde(skip)]
    entries: Vec<usize>,
    #[serde(skip)]
    inputs: Vec<BTreeMap<Loc, usize>>,
    #[serde(skip)]
    outputs: Vec<BTreeMap<Loc, usize>>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DepError {
    #[error("unknown assertion {0}")]
    UnknownAssertion(AssertId),
}

impl Pdg {
    fn add(&mut self, kind: NodeKind, func: usize, point: Option<Point>, loc: Option<Loc>) -> usize {
        let id = self.nodes.len();
        self.nodes.push(PdgNode { id, kind, func, point, loc, assertion: None });
        id
    }

    /// Direct dependences of every node.
    pub fn dependences(&self) -> Vec<Vec<usize>> {
        let mut deps = vec![Vec::new(); self.nodes.len()];
        for &(a, b) in self.data_edges.iter().chain(&self.control_edges).chain(&self.interproc_edges) {
            deps[b].push(a);
        }
        deps
    }

    /// Nodes the given nodes transitively depend on, themselves included.
    pub fn backward_closure(&self, from: impl IntoIterator<Item = usize>) -> BTreeSet<usize> {
        let deps = self.dependences();
        let mut seen = BTreeSet::new();
        let mut work: Vec<usize> = from.into_iter().collect();
        while let Some(n) = work.pop() {
            if seen.insert(n) {
                work.extend(deps[n].iter().copied());
            }
        }
        seen
    }

    pub fn depends_on(&self, n: usize, m: usize) -> bool {
        self.backward_closure([n]).contains(&m)
    }

    pub fn to_dot(&self, p: &Program) -> String {
        let mut s = String::from("digraph pdg {\n");
        for n in &self.nodes {
            let f = &p.functions[n.func].name;
            let what = match (n.kind, n.point, n.loc) {
                (NodeKind::Assertion, _, _) => format!("assert {}", n.assertion.map(|a| a.to_string()).unwrap_or_default()),
                (_, _, Some(l)) => format!("{:?} {}", n.kind, loc_name(p, l)),
                (NodeKind::FunctionInput, _, None) => "entry".to_string(),
                (_, Some(pt), _) => format!("b{}.{}", pt.block, pt.index),
                _ => format!("{:?}", n.kind),
            };
            let _ = writeln!(s, "  n{} [label=\"{f}: {what}\"];", n.id);
        }
        for (edges, style) in
            [(&self.data_edges, "solid"), (&self.control_edges, "dashed"), (&self.interproc_edges, "dotted")]
        {
            for (a, b) in edges {
                let _ = writeln!(s, "  n{a} -> n{b} [style={style}];");
            }
        }
        s.push_str("}\n");
        s
    }
}

fn loc_name(p: &Program, l: Loc) -> String {
    let base = match l.base {
        Base::Global(g) => p.globals[g].name.clone(),
        Base::Slot(f, s) => p.functions[f].slot_name(s).to_string(),
        Base::Ret(f) => format!("{}()", p.functions[f].name),
    };
    match l.field {
        Some(fd) => format!("{base}.{fd}"),
        None => base,
    }
}

fn place_loc(func: usize, pl: &Place) -> Loc {
    let base = match pl.var {
        VarRef::Global(g) => Base::Global(g),
        VarRef::Slot(s) => Base::Slot(func, s),
    };
    Loc { base, field: pl.field }
}

/// Locations read by an expression. Fault variables are not locations.
fn reads(p: &Program, func: usize, e: &Expr, out: &mut BTreeSet<Loc>) {
    e.walk(&mut |x| {
        if let ExprKind::Load(pl) = &x.kind {
            if p.fault_site_of(x).is_none() {
                out.insert(place_loc(func, pl));
            }
        }
    });
}

/// Locations of a callee visible to its callers: globals and cells reached
/// through by-reference parameters.
fn visible(p: &Program, callee: usize, l: Loc) -> bool {
    match l.base {
        Base::Global(_) => true,
        Base::Slot(f, s) => f == callee && s < p.functions[f].params.len() && p.functions[f].params[s].ty.is_ref(),
        Base::Ret(_) => false,
    }
}

/// A callee location seen from the caller at a given call.
fn map_to_caller(caller: usize, args: &[Arg], l: Loc) -> Option<Loc> {
    match l.base {
        Base::Global(_) => Some(l),
        Base::Slot(_, k) => match args.get(k)? {
            Arg::Ref(VarRef::Global(g)) => Some(Loc { base: Base::Global(*g), field: l.field }),
            Arg::Ref(VarRef::Slot(s)) => Some(Loc { base: Base::Slot(caller, *s), field: l.field }),
            Arg::Value(_) => None,
        },
        Base::Ret(_) => None,
    }
}

fn is_live(cfg: &Cfg, a: &AbsResult, b: usize) -> bool {
    cfg.reachable[b] && !a.is_dead(cfg.func, b)
}

/// Transitive read and write sets of every function, over visible locations.
fn mod_ref(p: &Program, cfgs: &[Cfg], a: &AbsResult) -> (Vec<BTreeSet<Loc>>, Vec<BTreeSet<Loc>>) {
    let n = p.functions.len();
    let mut md = vec![BTreeSet::new(); n];
    let mut rf = vec![BTreeSet::new(); n];
    let mut calls: Vec<Vec<(usize, Vec<Arg>)>> = vec![Vec::new(); n];
    for cfg in cfgs {
        let f = cfg.func;
        let mut r = BTreeSet::new();
        for (b, bb) in cfg.blocks.iter().enumerate() {
            if !is_live(cfg, a, b) {
                continue;
            }
            for ins in &bb.instrs {
                match &ins.kind {
                    InstrKind::Assign { place, value } => {
                        md[f].insert(place_loc(f, place));
                        reads(p, f, value, &mut r);
                        if let Some(i) = &place.index {
                            reads(p, f, i, &mut r);
                        }
                    }
                    InstrKind::Call { dest, func, args } => {
                        for arg in args {
                            if let Arg::Value(e) = arg {
                                reads(p, f, e, &mut r);
                            }
                        }
                        if let Some(d) = dest {
                            md[f].insert(place_loc(f, d));
                            if let Some(i) = &d.index {
                                reads(p, f, i, &mut r);
                            }
                        }
                        calls[f].push((*func, args.clone()));
                    }
                    InstrKind::Assert { cond: e, .. } | InstrKind::Print(e) => reads(p, f, e, &mut r),
                    InstrKind::Zero { .. } => {}
                }
            }
            match &bb.term {
                Terminator::Branch { cond: e, .. } | Terminator::Return(Some(e)) => reads(p, f, e, &mut r),
                _ => {}
            }
        }
        md[f].retain(|l| visible(p, f, *l));
        rf[f] = r.into_iter().filter(|l| visible(p, f, *l)).collect();
    }
    loop {
        let mut changed = false;
        for f in 0..n {
            for (g, args) in &calls[f] {
                let add_m: Vec<Loc> = md[*g].iter().filter_map(|l| map_to_caller(f, args, *l)).collect();
                let add_r: Vec<Loc> = rf[*g].iter().filter_map(|l| map_to_caller(f, args, *l)).collect();
                for l in add_m {
                    if visible(p, f, l) {
                        changed |= md[f].insert(l);
                    }
                }
                for l in add_r {
                    if visible(p, f, l) {
                        changed |= rf[f].insert(l);
                    }
                }
            }
        }
        if !changed {
            return (md, rf);
        }
    }
}

/// Functions whose execution may stop the program or, under assume-true,
/// cut a path: those containing a countermeasure or an assertion, directly or
/// through a call.
fn may_stop(p: &Program, cfgs: &[Cfg], a: &AbsResult) -> Vec<bool> {
    let n = p.functions.len();
    let mut stop = vec![false; n];
    loop {
        let mut changed = false;
        for cfg in cfgs {
            let f = cfg.func;
            if stop[f] {
                continue;
            }
            let s = cfg.blocks.iter().enumerate().any(|(b, bb)| {
                is_live(cfg, a, b)
                    && (matches!(bb.term, Terminator::Halt)
                        || bb.instrs.iter().any(|i| match &i.kind {
                            InstrKind::Assert { .. } => true,
                            InstrKind::Call { func, .. } => stop[*func],
                            _ => false,
                        }))
            });
            if s {
                stop[f] = true;
                changed = true;
            }
        }
        if !changed {
            return stop;
        }
    }
}

type Defs = BTreeMap<Loc, BTreeSet<usize>>;

struct FunctionGraph {
    /// Vertex 0 is the pseudo entry, 1 the pseudo exit, then one per live point.
    points: Vec<Point>,
    /// Control-flow edges used by the dataflow.
    flow: Vec<Vec<usize>>,
    /// Flow edges plus stop edges to the exit, used for control dependence.
    ctrl: Vec<Vec<usize>>,
}

const ENTRY: usize = 0;
const EXIT: usize = 1;

fn point_graph(cfg: &Cfg, a: &AbsResult, stops: &dyn Fn(Point) -> bool) -> FunctionGraph {
    let mut points = vec![Point { func: cfg.func, block: 0, index: 0 }; 2];
    let mut first = vec![usize::MAX; cfg.blocks.len()];
    for (b, bb) in cfg.blocks.iter().enumerate() {
        if b == cfg.exit || !is_live(cfg, a, b) {
            continue;
        }
        first[b] = points.len();
        for index in 0..=bb.instrs.len() {
            points.push(Point { func: cfg.func, block: b, index });
        }
    }
    let target = |b: usize| if b == cfg.exit { Some(EXIT) } else { (first[b] != usize::MAX).then_some(first[b]) };
    let n = points.len();
    let mut flow = vec![Vec::new(); n];
    let mut ctrl = vec![Vec::new(); n];
    if let Some(t) = target(cfg.entry) {
        flow[ENTRY].push(t);
    }
    ctrl[ENTRY] = flow[ENTRY].clone();
    ctrl[ENTRY].push(EXIT);
    for v in 2..n {
        let pt = points[v];
        let bb = &cfg.blocks[pt.block];
        if pt.index < bb.instrs.len() {
            flow[v].push(v + 1);
            ctrl[v].push(v + 1);
            if stops(pt) {
                ctrl[v].push(EXIT);
            }
            continue;
        }
        let halt = matches!(bb.term, Terminator::Halt);
        for s in cfg.successors(pt.block) {
            if let Some(t) = target(s) {
                if !ctrl[v].contains(&t) {
                    ctrl[v].push(t);
                }
                if !halt && !flow[v].contains(&t) {
                    flow[v].push(t);
                }
            }
        }
    }
    // Points that cannot reach the exit (infinite loops) get an edge to it so
    // that postdominance is defined everywhere.
    let mut reach = vec![false; n];
    let mut preds = vec![Vec::new(); n];
    for (v, ss) in ctrl.iter().enumerate() {
        for &s in ss {
            preds[s].push(v);
        }
    }
    let mut work = vec![EXIT];
    while let Some(v) = work.pop() {
        if !reach[v] {
            reach[v] = true;
            work.extend(preds[v].iter().copied());
        }
    }
    for v in 0..n {
        if !reach[v] && v != EXIT {
            ctrl[v].push(EXIT);
        }
    }
    FunctionGraph { points, flow, ctrl }
}

/// `(a, b)` pairs where vertex `b` is control dependent on vertex `a`.
fn control_dependences(g: &FunctionGraph) -> Vec<(usize, usize)> {
    let n = g.points.len();
    let mut preds = vec![Vec::new(); n];
    for (v, ss) in g.ctrl.iter().enumerate() {
        for &s in ss {
            preds[s].push(v);
        }
    }
    let ipdom = dominators(n, EXIT, |v| preds[v].clone());
    let mut out = Vec::new();
    for (a, ss) in g.ctrl.iter().enumerate() {
        if ss.len() < 2 {
            continue;
        }
        for &b in ss {
            let mut r = Some(b);
            while let Some(x) = r {
                if Some(x) == ipdom[a] || x == EXIT {
                    break;
                }
                out.push((a, x));
                r = ipdom[x];
            }
        }
    }
    out
}

pub fn build_pdg(r: &Registry, cfgs: &[Cfg], a: &AbsResult) -> Pdg {
    let p = &r.program;
    let (md, rf) = mod_ref(p, cfgs, a);
    let stop = may_stop(p, cfgs, a);
    let mut g = Pdg::default();

    // Interface nodes first so that calls can refer to them.
    for (f, func) in p.functions.iter().enumerate() {
        let e = g.add(NodeKind::FunctionInput, f, None, None);
        g.entries.push(e);
        let mut ins = BTreeMap::new();
        let mut outs = BTreeMap::new();
        let mut inlocs: BTreeSet<Loc> = md[f].union(&rf[f]).copied().collect();
        for (k, pa) in func.params.iter().enumerate() {
            if !pa.ty.is_ref() {
                inlocs.insert(Loc { base: Base::Slot(f, k), field: None });
            }
        }
        for l in inlocs {
            ins.insert(l, g.add(NodeKind::FunctionInput, f, None, Some(l)));
        }
        let mut outlocs = md[f].clone();
        if func.ret.is_some() {
            outlocs.insert(Loc { base: Base::Ret(f), field: None });
        }
        for l in outlocs {
            outs.insert(l, g.add(NodeKind::FunctionOutput, f, None, Some(l)));
        }
        g.inputs.push(ins);
        g.outputs.push(outs);
    }

    let mut halting: Vec<Vec<usize>> = vec![Vec::new(); p.functions.len()];
    let mut calls_to: Vec<Vec<usize>> = vec![Vec::new(); p.functions.len()];
    // (call-input node, callee input node) and (callee output node, call-output node)
    let mut wiring: Vec<(usize, usize)> = Vec::new();

    for cfg in cfgs {
        let f = cfg.func;
        let stops = |pt: Point| {
            let bb = &cfg.blocks[pt.block];
            match bb.instrs.get(pt.index).map(|i| &i.kind) {
                Some(InstrKind::Assert { .. }) => true,
                Some(InstrKind::Call { func, .. }) => stop[*func],
                _ => false,
            }
        };
        let fg = point_graph(cfg, a, &stops);
        let nv = fg.points.len();
        let mut vnode = vec![g.entries[f]; nv];
        // per-vertex (uses, strong defs, weak defs) with defining node
        let mut uses: Vec<Vec<(usize, BTreeSet<Loc>)>> = vec![Vec::new(); nv];
        let mut defs: Vec<Vec<(Loc, usize, bool)>> = vec![Vec::new(); nv];
        for v in 2..nv {
            let pt = fg.points[v];
            let bb = &cfg.blocks[pt.block];
            let kind = match bb.instrs.get(pt.index).map(|i| &i.kind) {
                Some(InstrKind::Assert { .. }) => NodeKind::Assertion,
                _ => NodeKind::Statement,
            };
            let n = g.add(kind, f, Some(pt), None);
            g.point_nodes.insert(pt, n);
            vnode[v] = n;
            let mut u = BTreeSet::new();
            match bb.instrs.get(pt.index).map(|i| &i.kind) {
                Some(InstrKind::Assign { place, value }) => {
                    reads(p, f, value, &mut u);
                    if let Some(i) = &place.index {
                        reads(p, f, i, &mut u);
                    }
                    defs[v].push((place_loc(f, place), n, place.index.is_none()));
                }
                Some(InstrKind::Zero { slot }) => {
                    let func = &p.functions[f];
                    match func.slot_type(*slot) {
                        Type::Record(rec) => {
                            for fd in 0..p.records[rec].fields.len() {
                                defs[v].push((Loc { base: Base::Slot(f, *slot), field: Some(fd) }, n, true));
                            }
                        }
                        _ => defs[v].push((Loc { base: Base::Slot(f, *slot), field: None }, n, true)),
                    }
                }
                Some(InstrKind::Assert { id, cond, .. }) => {
                    reads(p, f, cond, &mut u);
                    g.nodes[n].assertion = Some(*id);
                    g.assertion_nodes.insert(*id, n);
                }
                Some(InstrKind::Print(e)) => reads(p, f, e, &mut u),
                Some(InstrKind::Call { dest, func: callee, args }) => {
                    let callee = *callee;
                    calls_to[callee].push(n);
                    if stop[callee] {
                        halting[f].push(n);
                    }
                    for (l, &cin) in &g.inputs[callee].clone() {
                        let ci = g.add(NodeKind::CallInput, f, Some(pt), Some(*l));
                        g.control_edges.insert((n, ci));
                        wiring.push((ci, cin));
                        let mut cu = BTreeSet::new();
                        match l.base {
                            Base::Slot(_, k) if !p.functions[callee].params[k].ty.is_ref() => {
                                if let Some(Arg::Value(e)) = args.get(k) {
                                    reads(p, f, e, &mut cu);
                                }
                            }
                            _ => {
                                if let Some(cl) = map_to_caller(f, args, *l) {
                                    cu.insert(cl);
                                }
                            }
                        }
                        uses[v].push((ci, cu));
                    }
                    for (l, &cout) in &g.outputs[callee].clone() {
                        let co = g.add(NodeKind::CallOutput, f, Some(pt), Some(*l));
                        g.control_edges.insert((n, co));
                        wiring.push((cout, co));
                        if l.base == Base::Ret(callee) {
                            if let Some(d) = dest {
                                let mut cu = BTreeSet::new();
                                if let Some(i) = &d.index {
                                    reads(p, f, i, &mut cu);
                                }
                                uses[v].push((co, cu));
                                defs[v].push((place_loc(f, d), co, d.index.is_none()));
                            }
                        } else if let Some(cl) = map_to_caller(f, args, *l) {
                            defs[v].push((cl, co, false));
                        }
                    }
                }
                None => match &bb.term {
                    Terminator::Branch { cond, .. } => reads(p, f, cond, &mut u),
                    Terminator::Return(e) => {
                        if let Some(e) = e {
                            reads(p, f, e, &mut u);
                        }
                        defs[v].push((Loc { base: Base::Ret(f), field: None }, n, true));
                    }
                    Terminator::Halt => halting[f].push(n),
                    _ => {}
                },
            }
            uses[v].push((n, u));
        }

        // Reaching definitions; the entry defines every input location.
        let entry_defs: Defs = g.inputs[f].iter().map(|(l, &n)| (*l, BTreeSet::from([n]))).collect();
        let mut inn: Vec<Option<Defs>> = vec![None; nv];
        inn[ENTRY] = Some(Defs::new());
        let mut work: VecDeque<usize> = VecDeque::from([ENTRY]);
        while let Some(v) = work.pop_front() {
            let mut out = inn[v].clone().unwrap_or_default();
            if v == ENTRY {
                out = entry_defs.clone();
            }
            for (l, n, strong) in &defs[v] {
                let e = out.entry(*l).or_default();
                if *strong {
                    e.clear();
                }
                e.insert(*n);
            }
            for &s in &fg.flow[v] {
                let changed = match &mut inn[s] {
                    None => {
                        inn[s] = Some(out.clone());
                        true
                    }
                    Some(cur) => {
                        let mut ch = false;
                        for (l, ns) in &out {
                            let e = cur.entry(*l).or_default();
                            for n in ns {
                                ch |= e.insert(*n);
                            }
                        }
                        ch
                    }
                };
                if changed && !work.contains(&s) {
                    work.push_back(s);
                }
            }
        }
        for v in 2..nv {
            let Some(st) = &inn[v] else { continue };
            for (n, locs) in &uses[v] {
                for l in locs {
                    for d in st.get(l).into_iter().flatten() {
                        g.data_edges.insert((*d, *n));
                    }
                }
            }
        }
        let at_exit = inn[EXIT].clone().unwrap_or_default();
        for (l, &o) in &g.outputs[f].clone() {
            for d in at_exit.get(l).into_iter().flatten() {
                g.data_edges.insert((*d, o));
            }
        }

        for (x, y) in control_dependences(&fg) {
            if y >= 2 {
                g.control_edges.insert((vnode[x], vnode[y]));
            }
        }
    }

    for (x, y) in wiring {
        g.interproc_edges.insert((x, y));
    }
    for f in 0..p.functions.len() {
        for &c in &calls_to[f] {
            g.interproc_edges.insert((c, g.entries[f]));
            for &h in &halting[f] {
                g.interproc_edges.insert((h, c));
            }
        }
        // interface nodes run only when the function does
        let e = g.entries[f];
        for &n in g.inputs[f].values().chain(g.outputs[f].values()) {
            g.control_edges.insert((e, n));
        }
    }

    // Assertions in dead code still get a node, with no dependences.
    for ar in p.assertions() {
        if !g.assertion_nodes.contains_key(&ar.id) {
            let n = g.add(NodeKind::Assertion, ar.function, None, None);
            g.nodes[n].assertion = Some(ar.id);
            g.assertion_nodes.insert(ar.id, n);
        }
    }
    for (s, pts) in site_points(p, cfgs) {
        let ns: Vec<usize> = pts.iter().filter_map(|pt| g.point_nodes.get(pt).copied()).collect();
        g.site_nodes.insert(s, ns);
    }
    g
}

/// Sites whose statements lie in the backward closure of the target assertions.
pub fn dependent_sites(g: &Pdg, targets: &BTreeSet<AssertId>) -> Result<BTreeSet<SiteId>, DepError> {
    let mut roots = Vec::new();
    for t in targets {
        roots.push(*g.assertion_nodes.get(t).ok_or(DepError::UnknownAssertion(*t))?);
    }
    let closure = g.backward_closure(roots);
    Ok(g.site_nodes
        .iter()
        .filter(|(_, ns)| ns.iter().any(|n| closure.contains(n)))
        .map(|(s, _)| *s)
        .collect())
}

#[cfg(test)]
mod tests;
