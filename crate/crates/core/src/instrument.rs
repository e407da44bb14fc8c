//! Fault instrumentation: every faultable expression `e` becomes `e ^ fault_i`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::frontend::cfg::increment_value;
use crate::frontend::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SiteId(pub u32);

impl fmt::Display for SiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "fault_{}", self.0)
    }
}

impl FromStr for SiteId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.strip_prefix("fault_")
            .and_then(|n| n.parse().ok())
            .map(SiteId)
            .ok_or_else(|| format!("`{s}` is not a fault site name"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum FaultModel {
    /// Data faults on every non-condition expression.
    #[serde(rename = "data")]
    Data,
    /// Inversions of branch conditions only.
    #[serde(rename = "test-inversion")]
    TestInversion,
    #[default]
    #[serde(rename = "both")]
    Both,
}

impl FaultModel {
    pub fn admits(self, kind: SiteKind) -> bool {
        match self {
            FaultModel::Data => kind == SiteKind::Data,
            FaultModel::TestInversion => kind == SiteKind::Condition,
            FaultModel::Both => true,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FaultModel::Data => "data",
            FaultModel::TestInversion => "test-inversion",
            FaultModel::Both => "both",
        }
    }
}

impl FromStr for FaultModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "data" => Ok(FaultModel::Data),
            "test-inversion" | "ti" => Ok(FaultModel::TestInversion),
            "both" | "data+test-inversion" => Ok(FaultModel::Both),
            _ => Err(format!("unknown fault model `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SiteKind {
    Data,
    /// Branch or loop condition.
    Condition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SiteRole {
    DeclInit,
    Assign,
    Increment,
    CallArg(usize),
    Return,
    Print,
    IfCond,
    WhileCond,
    ForInit,
    ForStep,
    ForCond,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteInfo {
    pub id: SiteId,
    pub func: usize,
    pub function: String,
    pub span: Span,
    pub role: SiteRole,
    pub kind: SiteKind,
    pub ty: ScalarType,
    /// Source text of the original expression.
    pub text: String,
    /// Set when the site comes from a lowered `x++`/`x--` statement.
    #[serde(default)]
    pub increment: Option<i8>,
}

/// An instrumented program and its fault sites, indexed by site number.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Registry {
    pub program: Program,
    pub sites: Vec<SiteInfo>,
    pub model: FaultModel,
}

impl Registry {
    pub fn site(&self, id: SiteId) -> &SiteInfo {
        &self.sites[id.0 as usize]
    }

    pub fn site_ids(&self) -> BTreeSet<SiteId> {
        self.sites.iter().map(|s| s.id).collect()
    }
}

/// How one site behaves in a particular analysis or run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FaultSetting {
    /// Any value (symbolic).
    Symbolic,
    /// A fixed injected value; 0 means inactive.
    Fixed(i64),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultConfig {
    /// Sites absent from the map are inactive.
    pub active: BTreeMap<SiteId, FaultSetting>,
}

impl FaultConfig {
    pub fn all_symbolic(r: &Registry) -> FaultConfig {
        FaultConfig { active: r.sites.iter().map(|s| (s.id, FaultSetting::Symbolic)).collect() }
    }

    pub fn symbolic(sites: impl IntoIterator<Item = SiteId>) -> FaultConfig {
        FaultConfig { active: sites.into_iter().map(|s| (s, FaultSetting::Symbolic)).collect() }
    }

    pub fn none() -> FaultConfig {
        FaultConfig::default()
    }

    pub fn setting(&self, s: SiteId) -> FaultSetting {
        self.active.get(&s).copied().unwrap_or(FaultSetting::Fixed(0))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Faultable {
    pub func: usize,
    pub span: Span,
    pub role: SiteRole,
    pub kind: SiteKind,
    pub expr: Expr,
}

struct Slot {
    /// Numbering class: for-loop headers, then `if` conditions, then the rest.
    class: u8,
    func: usize,
    span: Span,
    role: SiteRole,
    kind: SiteKind,
    increment: Option<i8>,
}

fn is_pure_input(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Input(_) => true,
        ExprKind::Cast(a) => is_pure_input(a),
        _ => false,
    }
}

fn is_reserved(p: &Program, pl: &Place) -> bool {
    matches!(pl.var, VarRef::Global(g) if p.globals[g].kind != GlobalKind::User)
}

/// Visit every faultable expression of `p` in source order. Non-counter
/// increments are first lowered to assignments so that they expose an
/// expression slot.
fn for_each_slot(p: &mut Program, model: FaultModel, f: &mut dyn FnMut(&Slot, &mut Expr)) {
    let globals = p.globals.clone();
    let records = p.records.clone();
    let shape = Program {
        records,
        globals,
        functions: Vec::new(),
        entry: None,
        domains: BTreeMap::new(),
    };
    let funcs_meta: Vec<Function> = p
        .functions
        .iter()
        .map(|f| Function { body: Block { stmts: Vec::new() }, ..f.clone() })
        .collect();
    for (fi, func) in p.functions.iter_mut().enumerate() {
        let meta = &funcs_meta[fi];
        let mut ctx = Ctx { p: &shape, fmeta: meta, fi, model, f };
        ctx.block(&mut func.body);
    }

    struct Ctx<'a, 'b> {
        p: &'a Program,
        fmeta: &'a Function,
        fi: usize,
        model: FaultModel,
        f: &'b mut dyn FnMut(&Slot, &mut Expr),
    }

    impl Ctx<'_, '_> {
        fn visit(&mut self, class: u8, span: Span, role: SiteRole, kind: SiteKind, e: &mut Expr) {
            self.visit_inc(class, span, role, kind, e, None)
        }

        fn visit_inc(
            &mut self,
            class: u8,
            span: Span,
            role: SiteRole,
            kind: SiteKind,
            e: &mut Expr,
            increment: Option<i8>,
        ) {
            if !self.model.admits(kind) || is_pure_input(e) {
                return;
            }
            let slot = Slot { class, func: self.fi, span, role, kind, increment };
            (self.f)(&slot, e);
        }

        fn block(&mut self, b: &mut Block) {
            for s in &mut b.stmts {
                self.stmt(s, 2, None);
            }
        }

        /// `header` overrides the role for statements in a for-loop header.
        fn stmt(&mut self, s: &mut Stmt, class: u8, header: Option<SiteRole>) {
            let span = s.span;
            if let StmtKind::Increment { place, delta } = &s.kind {
                if !is_reserved(self.p, place) && self.model.admits(SiteKind::Data) {
                    let ty = place_type(self.p, self.fmeta, place);
                    let delta = *delta;
                    let value = increment_value(place, delta, ty);
                    s.kind = StmtKind::Assign { place: place.clone(), value };
                    let StmtKind::Assign { value, .. } = &mut s.kind else { unreachable!() };
                    let role = header.unwrap_or(SiteRole::Increment);
                    self.visit_inc(class, span, role, SiteKind::Data, value, Some(delta));
                    return;
                }
            }
            match &mut s.kind {
                StmtKind::Decl { init: Some(e), .. } => {
                    self.visit(class, span, header.unwrap_or(SiteRole::DeclInit), SiteKind::Data, e)
                }
                StmtKind::Assign { place, value } => {
                    if !is_reserved(self.p, place) {
                        self.visit(class, span, header.unwrap_or(SiteRole::Assign), SiteKind::Data, value)
                    }
                }
                StmtKind::Call { args, .. } => {
                    for (k, a) in args.iter_mut().enumerate() {
                        if let Arg::Value(e) = a {
                            self.visit(class, span, SiteRole::CallArg(k), SiteKind::Data, e);
                        }
                    }
                }
                StmtKind::Return(Some(e)) => self.visit(class, span, SiteRole::Return, SiteKind::Data, e),
                StmtKind::Print(e) => self.visit(class, span, SiteRole::Print, SiteKind::Data, e),
                StmtKind::If { cond, then_block, else_block } => {
                    self.visit(1, span, SiteRole::IfCond, SiteKind::Condition, cond);
                    self.block(then_block);
                    if let Some(e) = else_block {
                        self.block(e);
                    }
                }
                StmtKind::While { cond, body } => {
                    self.visit(class, span, SiteRole::WhileCond, SiteKind::Condition, cond);
                    self.block(body);
                }
                StmtKind::For { init, cond, step, body } => {
                    if let Some(i) = init {
                        self.stmt(i, 0, Some(SiteRole::ForInit));
                    }
                    if let Some(st) = step {
                        self.stmt(st, 0, Some(SiteRole::ForStep));
                    }
                    if let Some(c) = cond {
                        self.visit(0, span, SiteRole::ForCond, SiteKind::Condition, c);
                    }
                    self.block(body);
                }
                StmtKind::Block(b) => self.block(b),
                _ => {}
            }
        }
    }
}

/// Faultable expressions of `p` under `model`, in site-numbering order.
pub fn enumerate_faultable(p: &Program, model: FaultModel) -> Vec<Faultable> {
    let mut q = p.clone();
    let mut found: Vec<(u8, usize, Faultable)> = Vec::new();
    let mut seq = 0usize;
    for_each_slot(&mut q, model, &mut |slot, e| {
        found.push((
            slot.class,
            seq,
            Faultable { func: slot.func, span: slot.span, role: slot.role, kind: slot.kind, expr: e.clone() },
        ));
        seq += 1;
    });
    found.sort_by_key(|(c, s, _)| (*c, *s));
    found.into_iter().map(|(_, _, f)| f).collect()
}

/// Instrument every faultable expression of `p` with its own fault variable.
pub fn instrument(p: &Program, model: FaultModel) -> Registry {
    let mut q = p.clone();
    // First pass: ordering keys in visitation order.
    let mut keys: Vec<(u8, usize)> = Vec::new();
    for_each_slot(&mut q.clone(), model, &mut |slot, _| {
        let n = keys.len();
        keys.push((slot.class, n));
    });
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by_key(|&i| keys[i]);
    let mut site_of_seq = vec![0u32; keys.len()];
    for (id, &seq) in order.iter().enumerate() {
        site_of_seq[seq] = id as u32;
    }
    let base = q.globals.len();
    let mut infos: Vec<Option<SiteInfo>> = vec![None; keys.len()];
    let mut seq = 0usize;
    let shape = q.clone();
    for_each_slot(&mut q, model, &mut |slot, e| {
        let id = site_of_seq[seq];
        seq += 1;
        let text = print_expr(&shape, slot.func, e);
        infos[id as usize] = Some(SiteInfo {
            id: SiteId(id),
            func: slot.func,
            function: shape.functions[slot.func].name.clone(),
            span: slot.span,
            role: slot.role,
            kind: slot.kind,
            ty: e.ty,
            text,
            increment: slot.increment,
        });
        let ty = e.ty;
        let inner = std::mem::replace(e, Expr::constant(0, ty));
        let fault = Expr::load(Place::var(VarRef::Global(base + id as usize)), ty);
        *e = Expr::new(ExprKind::Binary(BinOp::Xor, Box::new(inner), Box::new(fault)), ty, slot.span);
    });
    let sites: Vec<SiteInfo> = infos.into_iter().map(|s| s.expect("site numbered twice")).collect();
    for s in &sites {
        q.globals.push(Global {
            name: s.id.to_string(),
            ty: Type::Scalar(s.ty),
            init: None,
            kind: GlobalKind::Fault(s.id.0),
            span: Span::default(),
        });
    }
    Registry { program: q, sites, model }
}

/// Apply a fault configuration to the instrumented program: inactive sites
/// lose their XOR, fixed sites XOR a constant, symbolic sites keep their
/// fault variable.
pub fn fix_and_simplify(r: &Registry, cfg: &FaultConfig) -> Program {
    let mut p = r.program.clone();
    let faults = p.fault_globals();
    let lookup = p.clone();
    for f in &mut p.functions {
        visit_stmts_mut(&mut f.body, &mut |s| {
            let mut reverted_increment = None;
            stmt_exprs_mut(s, &mut |e| {
                rewrite_faults(e, &lookup, cfg);
            });
            if let StmtKind::Assign { place, value } = &s.kind {
                if let Some(delta) = as_increment(place, value) {
                    let is_site_increment =
                        r.sites.iter().any(|si| si.span == s.span && si.increment == Some(delta));
                    if is_site_increment {
                        reverted_increment = Some((place.clone(), delta));
                    }
                }
            }
            if let Some((place, delta)) = reverted_increment {
                s.kind = StmtKind::Increment { place, delta };
            }
        });
    }
    // Drop fault variables that are no longer read.
    let keep: BTreeSet<usize> = faults
        .iter()
        .filter(|(s, _)| cfg.setting(SiteId(**s)) == FaultSetting::Symbolic)
        .map(|(_, g)| *g)
        .collect();
    let mut map = vec![usize::MAX; p.globals.len()];
    let mut globals = Vec::new();
    for (i, g) in p.globals.iter().enumerate() {
        if matches!(g.kind, GlobalKind::Fault(_)) && !keep.contains(&i) {
            continue;
        }
        map[i] = globals.len();
        globals.push(g.clone());
    }
    p.globals = globals;
    remap_globals(&mut p, &map);
    p
}

fn rewrite_faults(e: &mut Expr, p: &Program, cfg: &FaultConfig) {
    if let ExprKind::Binary(BinOp::Xor, a, b) = &mut e.kind {
        if let Some(site) = p.fault_site_of(b) {
            rewrite_faults(a, p, cfg);
            match cfg.setting(SiteId(site)) {
                FaultSetting::Symbolic => {}
                FaultSetting::Fixed(0) => {
                    let inner = std::mem::replace(a.as_mut(), Expr::constant(0, e.ty));
                    *e = inner;
                }
                FaultSetting::Fixed(v) => {
                    **b = Expr::constant(v, b.ty);
                }
            }
            return;
        }
    }
    match &mut e.kind {
        ExprKind::Const(_) | ExprKind::Input(_) => {}
        ExprKind::Load(pl) => {
            if let Some(i) = &mut pl.index {
                rewrite_faults(i, p, cfg);
            }
        }
        ExprKind::Unary(_, a) | ExprKind::Cast(a) => rewrite_faults(a, p, cfg),
        ExprKind::Binary(_, a, b) => {
            rewrite_faults(a, p, cfg);
            rewrite_faults(b, p, cfg);
        }
    }
}

/// `place = place ± 1`?
fn as_increment(place: &Place, value: &Expr) -> Option<i8> {
    if let ExprKind::Binary(op, a, b) = &value.kind {
        if b.as_const() == Some(1) {
            if let ExprKind::Load(pl) = &a.kind {
                if pl == place {
                    return match op {
                        BinOp::Add => Some(1),
                        BinOp::Sub => Some(-1),
                        _ => None,
                    };
                }
            }
        }
    }
    None
}

/// The instrumented program with an occurrence counter per site: the
/// counter `fault_i_counter` is incremented each time site `i` is evaluated.
/// Loops are rewritten as `while (1) { counter++; if (!(c)) break; ... }`.
pub fn insert_counters(r: &Registry) -> Program {
    let mut p = r.program.clone();
    let faults = p.fault_globals();
    let base = p.globals.len();
    let mut counter_of: BTreeMap<u32, usize> = BTreeMap::new();
    for (k, s) in r.sites.iter().enumerate() {
        p.globals.push(Global {
            name: format!("{}_counter", s.id),
            ty: Type::Scalar(ScalarType::U32),
            init: Some(0),
            kind: GlobalKind::Counter(s.id.0),
            span: Span::default(),
        });
        counter_of.insert(s.id.0, base + k);
    }
    let lookup = p.clone();
    let ctx = CounterCtx { p: &lookup, faults: &faults, counter_of: &counter_of };
    for f in &mut p.functions {
        let body = std::mem::replace(&mut f.body, Block { stmts: Vec::new() });
        f.body = ctx.block(body);
    }
    p
}

struct CounterCtx<'a> {
    p: &'a Program,
    faults: &'a BTreeMap<u32, usize>,
    counter_of: &'a BTreeMap<u32, usize>,
}

impl CounterCtx<'_> {
    fn sites_in(&self, e: &Expr) -> Vec<u32> {
        let mut out = Vec::new();
        e.walk(&mut |x| {
            if let Some(s) = self.p.fault_site_of(x) {
                if self.faults.contains_key(&s) {
                    out.push(s);
                }
            }
        });
        out
    }

    fn stmt_sites(&self, s: &Stmt) -> Vec<u32> {
        let mut s = s.clone();
        let mut out = Vec::new();
        stmt_exprs_mut(&mut s, &mut |e| out.extend(self.sites_in(e)));
        out
    }

    fn bump(&self, site: u32, span: Span) -> Stmt {
        let g = self.counter_of[&site];
        Stmt::new(StmtKind::Increment { place: Place::var(VarRef::Global(g)), delta: 1 }, span)
    }

    fn block(&self, b: Block) -> Block {
        let mut out = Vec::new();
        for s in b.stmts {
            self.stmt(s, &mut out);
        }
        Block { stmts: out }
    }

    fn guarded_loop(&self, cond: Expr, mut body: Vec<Stmt>, span: Span) -> Stmt {
        let mut stmts = Vec::new();
        for site in self.sites_in(&cond) {
            stmts.push(self.bump(site, span));
        }
        let exit = Stmt::new(
            StmtKind::If {
                cond: Expr::not(cond),
                then_block: Block { stmts: vec![Stmt::new(StmtKind::Break, span)] },
                else_block: None,
            },
            span,
        );
        stmts.push(exit);
        stmts.append(&mut body);
        Stmt::new(
            StmtKind::While { cond: Expr::constant(1, ScalarType::I32), body: Block { stmts } },
            span,
        )
    }

    fn stmt(&self, s: Stmt, out: &mut Vec<Stmt>) {
        let span = s.span;
        match s.kind {
            StmtKind::If { cond, then_block, else_block } => {
                for site in self.sites_in(&cond) {
                    out.push(self.bump(site, span));
                }
                out.push(Stmt::new(
                    StmtKind::If {
                        cond,
                        then_block: self.block(then_block),
                        else_block: else_block.map(|b| self.block(b)),
                    },
                    span,
                ));
            }
            StmtKind::While { cond, body } => {
                if self.sites_in(&cond).is_empty() {
                    out.push(Stmt::new(StmtKind::While { cond, body: self.block(body) }, span));
                } else {
                    let body = self.block(body).stmts;
                    out.push(self.guarded_loop(cond, body, span));
                }
            }
            StmtKind::For { init, cond, step, body } => {
                let mut stmts = Vec::new();
                if let Some(i) = init {
                    self.stmt(*i, &mut stmts);
                }
                let mut inner = self.block(body).stmts;
                if let Some(st) = step {
                    self.stmt(*st, &mut inner);
                }
                let cond = cond.unwrap_or_else(|| Expr::constant(1, ScalarType::I32));
                if self.sites_in(&cond).is_empty() {
                    stmts.push(Stmt::new(StmtKind::While { cond, body: Block { stmts: inner } }, span));
                } else {
                    stmts.push(self.guarded_loop(cond, inner, span));
                }
                out.push(Stmt::new(StmtKind::Block(Block { stmts }), span));
            }
            StmtKind::Block(b) => out.push(Stmt::new(StmtKind::Block(self.block(b)), span)),
            kind => {
                let s = Stmt::new(kind, span);
                for site in self.stmt_sites(&s) {
                    out.push(self.bump(site, span));
                }
                out.push(s);
            }
        }
    }
}

/// Program points reading each fault variable.
pub fn site_points(p: &Program, cfgs: &[Cfg]) -> BTreeMap<SiteId, Vec<Point>> {
    let mut out: BTreeMap<SiteId, Vec<Point>> = BTreeMap::new();
    for cfg in cfgs {
        for (b, bb) in cfg.blocks.iter().enumerate() {
            let mut note = |e: &Expr, index: usize| {
                e.walk(&mut |x| {
                    if let Some(s) = p.fault_site_of(x) {
                        out.entry(SiteId(s)).or_default().push(Point { func: cfg.func, block: b, index });
                    }
                });
            };
            for (i, ins) in bb.instrs.iter().enumerate() {
                for e in instr_exprs(&ins.kind) {
                    note(e, i);
                }
            }
            match &bb.term {
                Terminator::Branch { cond, .. } => note(cond, bb.instrs.len()),
                Terminator::Return(Some(e)) => note(e, bb.instrs.len()),
                _ => {}
            }
        }
    }
    out
}

/// Expressions evaluated by an instruction (including index expressions of written places).
pub fn instr_exprs(k: &InstrKind) -> Vec<&Expr> {
    let mut v = Vec::new();
    match k {
        InstrKind::Assign { place, value } => {
            if let Some(i) = &place.index {
                v.push(i.as_ref());
            }
            v.push(value);
        }
        InstrKind::Zero { .. } => {}
        InstrKind::Call { dest, args, .. } => {
            for a in args {
                if let Arg::Value(e) = a {
                    v.push(e);
                }
            }
            if let Some(d) = dest {
                if let Some(i) = &d.index {
                    v.push(i.as_ref());
                }
            }
        }
        InstrKind::Assert { cond, .. } => v.push(cond),
        InstrKind::Print(e) => v.push(e),
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    const PM: &str = r#"
        typedef struct { u32 msg_size; u8 msg[256]; } data_t;
        void print_message(data_t *d) {
            u32 size = d->msg_size & 0xff;
            for (u32 i = 0; i <= size; i++) {
                if (i > size) { return; }
                //@ assert i < 256;
                __print(d->msg[i]);
            }
        }
        void main() { data_t data; data.msg_size = __sym_input_u32("msg_size"); print_message(&data); }
    "#;

    fn pm() -> Program {
        parse(&SourceUnit::new("pm.fic", PM, "main")).unwrap()
    }

    #[test]
    fn site_numbering_follows_loop_headers_then_tests() {
        let r = instrument(&pm(), FaultModel::Both);
        let roles: Vec<SiteRole> = r.sites.iter().map(|s| s.role).collect();
        assert_eq!(
            roles,
            vec![
                SiteRole::ForInit,
                SiteRole::ForStep,
                SiteRole::ForCond,
                SiteRole::IfCond,
                SiteRole::DeclInit,
                SiteRole::Print
            ]
        );
        let text = print_program(&r.program);
        assert!(text.contains("u32 size = (d->msg_size & 255) ^ fault_4;"), "{text}");
        assert!(text.contains("i = (i + 1) ^ fault_1"), "{text}");
        assert!(text.contains("extern u8 fault_2;"), "{text}");
    }

    #[test]
    fn enumeration_matches_instrumentation() {
        let p = pm();
        let f = enumerate_faultable(&p, FaultModel::Both);
        let r = instrument(&p, FaultModel::Both);
        assert_eq!(f.len(), r.sites.len());
        for (a, b) in f.iter().zip(&r.sites) {
            assert_eq!(a.role, b.role);
            assert_eq!(a.expr.ty, b.ty);
        }
    }

    #[test]
    fn models_partition_sites() {
        let p = pm();
        let d = enumerate_faultable(&p, FaultModel::Data).len();
        let t = enumerate_faultable(&p, FaultModel::TestInversion).len();
        assert_eq!(t, 2);
        assert_eq!(d + t, enumerate_faultable(&p, FaultModel::Both).len());
    }

    #[test]
    fn instrumented_program_reparses() {
        let r = instrument(&pm(), FaultModel::Both);
        let text = print_program(&r.program);
        let q = parse(&SourceUnit::new("x", &text, "main")).unwrap();
        assert!(same_structure(&q, &r.program));
    }

    #[test]
    fn all_inactive_restores_original() {
        let p = pm();
        let r = instrument(&p, FaultModel::Both);
        let q = fix_and_simplify(&r, &FaultConfig::none());
        assert!(same_structure(&p, &q), "{}", print_program(&q));
    }

    #[test]
    fn fixed_and_symbolic_settings() {
        let r = instrument(&pm(), FaultModel::Both);
        let mut cfg = FaultConfig::symbolic([SiteId(4)]);
        cfg.active.insert(SiteId(2), FaultSetting::Fixed(1));
        let q = fix_and_simplify(&r, &cfg);
        let text = print_program(&q);
        assert!(text.contains("^ fault_4"));
        assert!(text.contains("(i <= size) ^ 1"), "{text}");
        assert!(!text.contains("fault_0"));
        assert_eq!(q.fault_globals().len(), 1);
    }

    #[test]
    fn counters_program_shape() {
        let r = instrument(&pm(), FaultModel::Both);
        let c = insert_counters(&r);
        assert_eq!(c.counter_globals().len(), 6);
        let text = print_program(&c);
        assert!(text.contains("fault_2_counter++;"));
        assert!(text.contains("if (!((i <= size) ^ fault_2))"), "{text}");
        parse(&SourceUnit::new("c", &text, "main")).unwrap();
    }

    #[test]
    fn cfgs_are_isomorphic_after_instrumentation() {
        let p = pm();
        let r = instrument(&p, FaultModel::Both);
        for f in 0..p.functions.len() {
            let a = build_cfg(&p, f);
            let b = build_cfg(&r.program, f);
            assert_eq!(a.blocks.len(), b.blocks.len());
            for (x, y) in a.blocks.iter().zip(&b.blocks) {
                assert_eq!(x.instrs.len(), y.instrs.len());
            }
            assert_eq!(a.edges().len(), b.edges().len());
        }
    }

    #[test]
    fn site_names_parse() {
        assert_eq!("fault_12".parse::<SiteId>().unwrap(), SiteId(12));
        assert!("fault_x".parse::<SiteId>().is_err());
        assert_eq!(SiteId(3).to_string(), "fault_3");
    }
}
