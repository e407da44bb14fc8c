use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::ast::*;

pub type BlockId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum InstrKind {
    Assign { place: Place, value: Expr },
    /// Zero a freshly declared local.
    Zero { slot: usize },
    Call { dest: Option<Place>, func: usize, args: Vec<Arg> },
    Assert { id: AssertId, origin: AssertOrigin, cond: Expr },
    Print(Expr),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instr {
    pub kind: InstrKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Terminator {
    Goto(BlockId),
    Branch { cond: Expr, then_bb: BlockId, else_bb: BlockId },
    /// Return to the caller (edge to the exit block).
    Return(Option<Expr>),
    /// Countermeasure: the execution stops as detected (edge to the exit block).
    Halt,
    /// Terminator of the exit block.
    Exit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasicBlock {
    pub instrs: Vec<Instr>,
    pub term: Terminator,
    pub term_span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeLabel {
    Jump,
    True,
    False,
    Return,
    Halt,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Cfg {
    pub func: usize,
    pub blocks: Vec<BasicBlock>,
    pub entry: BlockId,
    pub exit: BlockId,
    /// Immediate dominator; `None` for the entry and unreachable blocks.
    pub idom: Vec<Option<BlockId>>,
    /// Immediate postdominator; `None` for the exit and blocks that never reach it.
    pub ipdom: Vec<Option<BlockId>>,
    pub loop_headers: BTreeSet<BlockId>,
    pub reachable: Vec<bool>,
}

impl Cfg {
    pub fn successors(&self, b: BlockId) -> Vec<BlockId> {
        successors(&self.blocks[b].term, self.exit)
    }

    pub fn edges(&self) -> Vec<(BlockId, BlockId, EdgeLabel)> {
        let mut out = Vec::new();
        for (b, bb) in self.blocks.iter().enumerate() {
            match &bb.term {
                Terminator::Goto(t) => out.push((b, *t, EdgeLabel::Jump)),
                Terminator::Branch { then_bb, else_bb, .. } => {
                    out.push((b, *then_bb, EdgeLabel::True));
                    out.push((b, *else_bb, EdgeLabel::False));
                }
                Terminator::Return(_) => out.push((b, self.exit, EdgeLabel::Return)),
                Terminator::Halt => out.push((b, self.exit, EdgeLabel::Halt)),
                Terminator::Exit => {}
            }
        }
        out
    }

    pub fn predecessors(&self) -> Vec<Vec<BlockId>> {
        let mut preds = vec![Vec::new(); self.blocks.len()];
        for b in 0..self.blocks.len() {
            for s in self.successors(b) {
                if !preds[s].contains(&b) {
                    preds[s].push(b);
                }
            }
        }
        preds
    }

    /// Does `a` dominate `b`?
    pub fn dominates(&self, a: BlockId, b: BlockId) -> bool {
        if !self.reachable[b] {
            return false;
        }
        let mut x = b;
        loop {
            if x == a {
                return true;
            }
            match self.idom[x] {
                Some(p) => x = p,
                None => return false,
            }
        }
    }

    pub fn postdominates(&self, a: BlockId, b: BlockId) -> bool {
        let mut x = b;
        loop {
            if x == a {
                return true;
            }
            match self.ipdom[x] {
                Some(p) => x = p,
                None => return false,
            }
        }
    }

    /// Reverse post-order of the blocks reachable from the entry.
    pub fn rpo(&self) -> Vec<BlockId> {
        rpo(self.blocks.len(), self.entry, |b| self.successors(b))
    }
}

fn successors(t: &Terminator, exit: BlockId) -> Vec<BlockId> {
    match t {
        Terminator::Goto(b) => vec![*b],
        Terminator::Branch { then_bb, else_bb, .. } => {
            if then_bb == else_bb {
                vec![*then_bb]
            } else {
                vec![*then_bb, *else_bb]
            }
        }
        Terminator::Return(_) | Terminator::Halt => vec![exit],
        Terminator::Exit => vec![],
    }
}

pub fn rpo(n: usize, root: usize, succ: impl Fn(usize) -> Vec<usize>) -> Vec<usize> {
    let mut seen = vec![false; n];
    let mut post = Vec::with_capacity(n);
    let mut stack: Vec<(usize, Vec<usize>, usize)> = vec![(root, succ(root), 0)];
    seen[root] = true;
    while let Some((node, succs, i)) = stack.last_mut() {
        if *i < succs.len() {
            let s = succs[*i];
            *i += 1;
            if !seen[s] {
                seen[s] = true;
                let ss = succ(s);
                stack.push((s, ss, 0));
            }
        } else {
            post.push(*node);
            stack.pop();
        }
    }
    post.reverse();
    post
}

/// Immediate dominators by the iterative algorithm of Cooper, Harvey and Kennedy.
pub fn dominators(n: usize, root: usize, succ: impl Fn(usize) -> Vec<usize>) -> Vec<Option<usize>> {
    let order = rpo(n, root, &succ);
    let mut index = vec![usize::MAX; n];
    for (i, &b) in order.iter().enumerate() {
        index[b] = i;
    }
    let mut preds = vec![Vec::new(); n];
    for &b in &order {
        for s in succ(b) {
            preds[s].push(b);
        }
    }
    let mut idom: Vec<Option<usize>> = vec![None; n];
    idom[root] = Some(root);
    let mut changed = true;
    while changed {
        changed = false;
        for &b in order.iter().skip(1) {
            let mut new: Option<usize> = None;
            for &p in &preds[b] {
                if idom[p].is_none() {
                    continue;
                }
                new = Some(match new {
                    None => p,
                    Some(cur) => {
                        let (mut x, mut y) = (p, cur);
                        while x != y {
                            while index[x] > index[y] {
                                x = idom[x].unwrap();
                            }
                            while index[y] > index[x] {
                                y = idom[y].unwrap();
                            }
                        }
                        x
                    }
                });
            }
            if new.is_some() && idom[b] != new {
                idom[b] = new;
                changed = true;
            }
        }
    }
    idom[root] = None;
    idom
}

struct Builder<'a> {
    p: &'a Program,
    f: &'a Function,
    blocks: Vec<(Vec<Instr>, Option<(Terminator, Span)>)>,
    cur: BlockId,
    labels: HashMap<String, BlockId>,
    breaks: Vec<BlockId>,
}

impl Builder<'_> {
    fn new_block(&mut self) -> BlockId {
        self.blocks.push((Vec::new(), None));
        self.blocks.len() - 1
    }

    fn push(&mut self, kind: InstrKind, span: Span) {
        self.blocks[self.cur].0.push(Instr { kind, span });
    }

    fn terminate(&mut self, t: Terminator, span: Span) {
        if self.blocks[self.cur].1.is_none() {
            self.blocks[self.cur].1 = Some((t, span));
        }
    }

    /// Terminate the current block and continue in `next`.
    fn switch(&mut self, t: Terminator, span: Span, next: BlockId) {
        self.terminate(t, span);
        self.cur = next;
    }

    fn label(&mut self, l: &str) -> BlockId {
        if let Some(&b) = self.labels.get(l) {
            return b;
        }
        let b = self.new_block();
        self.labels.insert(l.to_string(), b);
        b
    }

    fn block(&mut self, b: &Block) {
        for s in &b.stmts {
            self.stmt(s);
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        let span = s.span;
        match &s.kind {
            StmtKind::Decl { slot, init } => match init {
                Some(e) => self.push(
                    InstrKind::Assign { place: Place::var(VarRef::Slot(*slot)), value: e.clone() },
                    span,
                ),
                None => self.push(InstrKind::Zero { slot: *slot }, span),
            },
            StmtKind::Assign { place, value } => {
                self.push(InstrKind::Assign { place: place.clone(), value: value.clone() }, span)
            }
            StmtKind::Increment { place, delta } => {
                let value = increment_value(place, *delta, place_type(self.p, self.f, place));
                self.push(InstrKind::Assign { place: place.clone(), value }, span)
            }
            StmtKind::Call { dest, func, args } => self.push(
                InstrKind::Call { dest: dest.clone(), func: *func, args: args.clone() },
                span,
            ),
            StmtKind::Assert { id, origin, cond } => self.push(
                InstrKind::Assert { id: *id, origin: *origin, cond: cond.clone() },
                span,
            ),
            StmtKind::Print(e) => self.push(InstrKind::Print(e.clone()), span),
            StmtKind::Countermeasure => {
                let next = self.new_block();
                self.switch(Terminator::Halt, span, next);
            }
            StmtKind::Return(e) => {
                let next = self.new_block();
                self.switch(Terminator::Return(e.clone()), span, next);
            }
            StmtKind::Break => {
                let target = *self.breaks.last().expect("break outside loop");
                let next = self.new_block();
                self.switch(Terminator::Goto(target), span, next);
            }
            StmtKind::Goto(l) => {
                let target = self.label(l);
                let next = self.new_block();
                self.switch(Terminator::Goto(target), span, next);
            }
            StmtKind::Label(l) => {
                let target = self.label(l);
                self.switch(Terminator::Goto(target), span, target);
            }
            StmtKind::Block(b) => self.block(b),
            StmtKind::If { cond, then_block, else_block } => {
                let t = self.new_block();
                let e = self.new_block();
                let join = if else_block.is_some() { self.new_block() } else { e };
                self.switch(Terminator::Branch { cond: cond.clone(), then_bb: t, else_bb: e }, span, t);
                self.block(then_block);
                self.terminate(Terminator::Goto(join), span);
                if let Some(eb) = else_block {
                    self.cur = e;
                    self.block(eb);
                    self.terminate(Terminator::Goto(join), span);
                }
                self.cur = join;
            }
            StmtKind::While { cond, body } => {
                let header = self.new_block();
                let b = self.new_block();
                let after = self.new_block();
                self.switch(Terminator::Goto(header), span, header);
                self.switch(Terminator::Branch { cond: cond.clone(), then_bb: b, else_bb: after }, span, b);
                self.breaks.push(after);
                self.block(body);
                self.breaks.pop();
                self.switch(Terminator::Goto(header), span, after);
            }
            StmtKind::For { init, cond, step, body } => {
                if let Some(i) = init {
                    self.stmt(i);
                }
                let header = self.new_block();
                let b = self.new_block();
                let latch = self.new_block();
                let after = self.new_block();
                self.switch(Terminator::Goto(header), span, header);
                let t = match cond {
                    Some(c) => Terminator::Branch { cond: c.clone(), then_bb: b, else_bb: after },
                    None => Terminator::Goto(b),
                };
                self.switch(t, span, b);
                self.breaks.push(after);
                self.block(body);
                self.breaks.pop();
                self.switch(Terminator::Goto(latch), span, latch);
                if let Some(st) = step {
                    self.stmt(st);
                }
                self.switch(Terminator::Goto(header), span, after);
            }
        }
    }
}

/// `place + 1` (or `- 1`) at the place's type, used to lower `x++`.
pub fn increment_value(place: &Place, delta: i8, ty: ScalarType) -> Expr {
    let op = if delta > 0 { BinOp::Add } else { BinOp::Sub };
    Expr::binary(op, Expr::load(place.clone(), ty), Expr::constant(1, ty), ty)
}

/// Scalar type of a place within function `f`.
pub fn place_type(p: &Program, f: &Function, pl: &Place) -> ScalarType {
    let ty = match pl.var {
        VarRef::Global(g) => p.globals[g].ty,
        VarRef::Slot(s) => f.slot_type(s),
    };
    match (ty, pl.field) {
        (Type::Scalar(t), _) | (Type::Array(t, _), _) => t,
        (Type::Record(r), Some(fi)) => p.records[r].fields[fi].ty.elem(),
        (Type::Record(_), None) => panic!("record place without a field"),
    }
}

pub fn build_cfg(p: &Program, fi: usize) -> Cfg {
    let f = &p.functions[fi];
    let mut b = Builder { p, f, blocks: Vec::new(), cur: 0, labels: HashMap::new(), breaks: Vec::new() };
    let entry = b.new_block();
    b.cur = entry;
    b.block(&f.body);
    b.terminate(Terminator::Return(None), f.span);
    let exit = b.new_block();
    b.blocks[exit].1 = Some((Terminator::Exit, f.span));

    let blocks: Vec<BasicBlock> = b
        .blocks
        .into_iter()
        .map(|(instrs, t)| {
            let (term, term_span) = t.unwrap_or((Terminator::Return(None), f.span));
            BasicBlock { instrs, term, term_span }
        })
        .collect();
    finish(fi, blocks, entry, exit)
}

fn finish(func: usize, blocks: Vec<BasicBlock>, entry: BlockId, exit: BlockId) -> Cfg {
    let n = blocks.len();
    let succ = |b: usize| successors(&blocks[b].term, exit);
    let idom = dominators(n, entry, succ);
    let mut preds = vec![Vec::new(); n];
    for b in 0..n {
        for s in succ(b) {
            preds[s].push(b);
        }
    }
    let ipdom = dominators(n, exit, |b| preds[b].clone());
    let mut reachable = vec![false; n];
    for b in rpo(n, entry, succ) {
        reachable[b] = true;
    }
    let mut cfg = Cfg { func, blocks, entry, exit, idom, ipdom, loop_headers: BTreeSet::new(), reachable };
    for b in 0..n {
        if !cfg.reachable[b] {
            continue;
        }
        for s in cfg.successors(b) {
            if cfg.dominates(s, b) {
                cfg.loop_headers.insert(s);
            }
        }
    }
    cfg
}

/// CFGs of every function, indexed by function.
pub fn build_all(p: &Program) -> Vec<Cfg> {
    (0..p.functions.len()).map(|f| build_cfg(p, f)).collect()
}

/// A program point: instruction `index` of a block, or its terminator when
/// `index == instrs.len()`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Point {
    pub func: usize,
    pub block: BlockId,
    pub index: usize,
}
