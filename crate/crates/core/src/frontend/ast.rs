use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// 1-based source position.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
}

impl ScalarType {
    pub const ALL: [ScalarType; 6] = [
        ScalarType::I8,
        ScalarType::U8,
        ScalarType::I16,
        ScalarType::U16,
        ScalarType::I32,
        ScalarType::U32,
    ];

    pub fn bits(self) -> u32 {
        match self {
            ScalarType::I8 | ScalarType::U8 => 8,
            ScalarType::I16 | ScalarType::U16 => 16,
            ScalarType::I32 | ScalarType::U32 => 32,
        }
    }

    pub fn signed(self) -> bool {
        matches!(self, ScalarType::I8 | ScalarType::I16 | ScalarType::I32)
    }

    pub fn min(self) -> i64 {
        if self.signed() {
            -(1i64 << (self.bits() - 1))
        } else {
            0
        }
    }

    pub fn max(self) -> i64 {
        if self.signed() {
            (1i64 << (self.bits() - 1)) - 1
        } else {
            (1i64 << self.bits()) - 1
        }
    }

    pub fn mask(self) -> u64 {
        (1u64 << self.bits()) - 1
    }

    /// Reduce an arbitrary integer into this type's value range (two's complement wrap).
    pub fn wrap(self, v: i128) -> i64 {
        let raw = (v as u128 as u64) & self.mask();
        self.from_raw(raw)
    }

    /// Interpret the low `bits` of `raw` as a value of this type.
    pub fn from_raw(self, raw: u64) -> i64 {
        let raw = raw & self.mask();
        if self.signed() && raw >> (self.bits() - 1) & 1 == 1 {
            raw as i64 - (1i64 << self.bits())
        } else {
            raw as i64
        }
    }

    pub fn to_raw(self, v: i64) -> u64 {
        (v as u64) & self.mask()
    }

    pub fn all_ones(self) -> i64 {
        self.from_raw(self.mask())
    }

    pub fn name(self) -> &'static str {
        match self {
            ScalarType::I8 => "i8",
            ScalarType::U8 => "u8",
            ScalarType::I16 => "i16",
            ScalarType::U16 => "u16",
            ScalarType::I32 => "i32",
            ScalarType::U32 => "u32",
        }
    }

    pub fn from_name(s: &str) -> Option<ScalarType> {
        Some(match s {
            "i8" | "int8_t" | "char" | "signed char" => ScalarType::I8,
            "u8" | "uint8_t" | "unsigned char" => ScalarType::U8,
            "i16" | "int16_t" | "short" => ScalarType::I16,
            "u16" | "uint16_t" | "unsigned short" => ScalarType::U16,
            "i32" | "int32_t" | "int" => ScalarType::I32,
            "u32" | "uint32_t" | "unsigned" | "unsigned int" | "size_t" => ScalarType::U32,
            _ => return None,
        })
    }
}

impl fmt::Display for ScalarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FieldType {
    Scalar(ScalarType),
    Array(ScalarType, u32),
}

impl FieldType {
    pub fn elem(self) -> ScalarType {
        match self {
            FieldType::Scalar(t) | FieldType::Array(t, _) => t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDef {
    pub name: String,
    pub ty: FieldType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordDef {
    pub name: String,
    pub fields: Vec<FieldDef>,
}

impl RecordDef {
    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name == name)
    }
}

/// Storage types of variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Type {
    Scalar(ScalarType),
    Array(ScalarType, u32),
    Record(usize),
}

/// Parameter types. Aggregates are only passed by reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParamType {
    Scalar(ScalarType),
    RecordPtr(usize),
    ArrayRef(ScalarType, u32),
}

impl ParamType {
    /// Shape of the object a parameter designates.
    pub fn object_type(self) -> Type {
        match self {
            ParamType::Scalar(t) => Type::Scalar(t),
            ParamType::RecordPtr(r) => Type::Record(r),
            ParamType::ArrayRef(t, n) => Type::Array(t, n),
        }
    }

    pub fn is_ref(self) -> bool {
        !matches!(self, ParamType::Scalar(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GlobalKind {
    User,
    /// `extern` fault variable `fault_<n>`.
    Fault(u32),
    /// Occurrence counter `fault_<n>_counter`.
    Counter(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Global {
    pub name: String,
    pub ty: Type,
    /// Initial value for scalar globals; aggregates start zeroed.
    pub init: Option<i64>,
    pub kind: GlobalKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub ty: ParamType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Local {
    pub name: String,
    pub ty: Type,
}

/// A variable reference. `Slot` indexes params first, then locals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VarRef {
    Global(usize),
    Slot(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Place {
    pub var: VarRef,
    pub field: Option<usize>,
    pub index: Option<Box<Expr>>,
}

impl Place {
    pub fn var(var: VarRef) -> Place {
        Place { var, field: None, index: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnOp {
    Neg,
    Not,
    BitNot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    And,
    Or,
    Xor,
    Shl,
    Shr,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    LogAnd,
    LogOr,
}

impl BinOp {
    pub fn is_comparison(self) -> bool {
        matches!(self, BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge)
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinOp::LogAnd | BinOp::LogOr)
    }

    /// Result is 0 or 1.
    pub fn is_boolean(self) -> bool {
        self.is_comparison() || self.is_logical()
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::And => "&",
            BinOp::Or => "|",
            BinOp::Xor => "^",
            BinOp::Shl => "<<",
            BinOp::Shr => ">>",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::LogAnd => "&&",
            BinOp::LogOr => "||",
        }
    }

    /// Swap operand order of a comparison.
    pub fn flip(self) -> BinOp {
        match self {
            BinOp::Lt => BinOp::Gt,
            BinOp::Le => BinOp::Ge,
            BinOp::Gt => BinOp::Lt,
            BinOp::Ge => BinOp::Le,
            op => op,
        }
    }

    pub fn negate(self) -> Option<BinOp> {
        Some(match self {
            BinOp::Eq => BinOp::Ne,
            BinOp::Ne => BinOp::Eq,
            BinOp::Lt => BinOp::Ge,
            BinOp::Le => BinOp::Gt,
            BinOp::Gt => BinOp::Le,
            BinOp::Ge => BinOp::Lt,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExprKind {
    Const(i64),
    Load(Place),
    /// `__sym_input_<ty>("name")`
    Input(String),
    Unary(UnOp, Box<Expr>),
    /// For comparisons and logical operators `ty` is `u8` and the operand
    /// type is carried by the operands themselves.
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// Conversion of the operand to `ty`.
    Cast(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expr {
    pub kind: ExprKind,
    pub ty: ScalarType,
    pub span: Span,
}

impl Expr {
    pub fn new(kind: ExprKind, ty: ScalarType, span: Span) -> Expr {
        Expr { kind, ty, span }
    }

    pub fn constant(v: i64, ty: ScalarType) -> Expr {
        Expr::new(ExprKind::Const(ty.wrap(v as i128)), ty, Span::default())
    }

    pub fn load(place: Place, ty: ScalarType) -> Expr {
        Expr::new(ExprKind::Load(place), ty, Span::default())
    }

    pub fn binary(op: BinOp, a: Expr, b: Expr, ty: ScalarType) -> Expr {
        Expr::new(ExprKind::Binary(op, Box::new(a), Box::new(b)), ty, Span::default())
    }

    pub fn not(e: Expr) -> Expr {
        Expr::new(ExprKind::Unary(UnOp::Not, Box::new(e)), ScalarType::U8, Span::default())
    }

    pub fn as_const(&self) -> Option<i64> {
        match self.kind {
            ExprKind::Const(v) => Some(v),
            _ => None,
        }
    }

    /// Visit this expression and all sub-expressions (pre-order), including index expressions.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Const(_) | ExprKind::Input(_) => {}
            ExprKind::Load(p) => {
                if let Some(i) = &p.index {
                    i.walk(f);
                }
            }
            ExprKind::Unary(_, a) | ExprKind::Cast(a) => a.walk(f),
            ExprKind::Binary(_, a, b) => {
                a.walk(f);
                b.walk(f);
            }
        }
    }

    pub fn walk_mut(&mut self, f: &mut dyn FnMut(&mut Expr)) {
        f(self);
        match &mut self.kind {
            ExprKind::Const(_) | ExprKind::Input(_) => {}
            ExprKind::Load(p) => {
                if let Some(i) = &mut p.index {
                    i.walk_mut(f);
                }
            }
            ExprKind::Unary(_, a) | ExprKind::Cast(a) => a.walk_mut(f),
            ExprKind::Binary(_, a, b) => {
                a.walk_mut(f);
                b.walk_mut(f);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AssertOrigin {
    /// `__assert(e)` or `//@ assert e;`
    User,
    /// Array index within bounds.
    IndexBound,
    /// Read through a pointer parameter is valid.
    MemAccess,
}

impl AssertOrigin {
    pub fn tag(self) -> Option<&'static str> {
        match self {
            AssertOrigin::User => None,
            AssertOrigin::IndexBound => Some("index_bound"),
            AssertOrigin::MemAccess => Some("mem_access"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AssertId(pub u32);

impl fmt::Display for AssertId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "A{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Arg {
    Value(Expr),
    /// Aggregate passed by reference (record pointer or array).
    Ref(VarRef),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub stmts: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum StmtKind {
    /// Declaration of local slot; aggregates and uninitialized scalars are zeroed.
    Decl { slot: usize, init: Option<Expr> },
    Assign { place: Place, value: Expr },
    /// `place++` / `place--`
    Increment { place: Place, delta: i8 },
    Call { dest: Option<Place>, func: usize, args: Vec<Arg> },
    If { cond: Expr, then_block: Block, else_block: Option<Block> },
    While { cond: Expr, body: Block },
    For { init: Option<Box<Stmt>>, cond: Option<Expr>, step: Option<Box<Stmt>>, body: Block },
    Break,
    Goto(String),
    Label(String),
    Return(Option<Expr>),
    Block(Block),
    Assert { id: AssertId, origin: AssertOrigin, cond: Expr },
    Countermeasure,
    Print(Expr),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

impl Stmt {
    pub fn new(kind: StmtKind, span: Span) -> Stmt {
        Stmt { kind, span }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Function {
    pub name: String,
    pub ret: Option<ScalarType>,
    pub params: Vec<Param>,
    pub locals: Vec<Local>,
    pub body: Block,
    pub span: Span,
}

impl Function {
    pub fn slot_count(&self) -> usize {
        self.params.len() + self.locals.len()
    }

    pub fn slot_name(&self, slot: usize) -> &str {
        if slot < self.params.len() {
            &self.params[slot].name
        } else {
            &self.locals[slot - self.params.len()].name
        }
    }

    /// Object type stored in (or designated by) a slot.
    pub fn slot_type(&self, slot: usize) -> Type {
        if slot < self.params.len() {
            self.params[slot].ty.object_type()
        } else {
            self.locals[slot - self.params.len()].ty
        }
    }

    pub fn slot_is_ref(&self, slot: usize) -> bool {
        slot < self.params.len() && self.params[slot].ty.is_ref()
    }
}

/// Finite set of admissible values for a named symbolic input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    Values(Vec<i64>),
    Range(i64, i64),
}

impl Domain {
    pub fn contains(&self, v: i64) -> bool {
        match self {
            Domain::Values(vs) => vs.contains(&v),
            Domain::Range(lo, hi) => *lo <= v && v <= *hi,
        }
    }

    pub fn hull(&self) -> (i64, i64) {
        match self {
            Domain::Values(vs) => (
                vs.iter().copied().min().unwrap_or(0),
                vs.iter().copied().max().unwrap_or(0),
            ),
            Domain::Range(lo, hi) => (*lo, *hi),
        }
    }

    pub fn values(&self) -> Vec<i64> {
        match self {
            Domain::Values(vs) => vs.clone(),
            Domain::Range(lo, hi) => (*lo..=*hi).collect(),
        }
    }

    pub fn first(&self) -> i64 {
        match self {
            Domain::Values(vs) => vs.first().copied().unwrap_or(0),
            Domain::Range(lo, _) => *lo,
        }
    }

    pub fn len(&self) -> u64 {
        match self {
            Domain::Values(vs) => vs.len() as u64,
            Domain::Range(lo, hi) => (hi - lo + 1).max(0) as u64,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Program {
    pub records: Vec<RecordDef>,
    pub globals: Vec<Global>,
    pub functions: Vec<Function>,
    pub entry: Option<usize>,
    pub domains: BTreeMap<String, Domain>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DeclKind {
    Global(usize),
    Slot(usize, usize),
}

/// An assertion as seen from outside the AST.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssertionRef {
    pub id: AssertId,
    pub function: usize,
    pub origin: AssertOrigin,
    pub span: Span,
    pub cond: Expr,
}

impl Program {
    pub fn function_index(&self, name: &str) -> Option<usize> {
        self.functions.iter().position(|f| f.name == name)
    }

    pub fn global_index(&self, name: &str) -> Option<usize> {
        self.globals.iter().position(|g| g.name == name)
    }

    /// Map from site number to the index of its fault variable.
    pub fn fault_globals(&self) -> BTreeMap<u32, usize> {
        self.globals
            .iter()
            .enumerate()
            .filter_map(|(i, g)| match g.kind {
                GlobalKind::Fault(s) => Some((s, i)),
                _ => None,
            })
            .collect()
    }

    pub fn counter_globals(&self) -> BTreeMap<u32, usize> {
        self.globals
            .iter()
            .enumerate()
            .filter_map(|(i, g)| match g.kind {
                GlobalKind::Counter(s) => Some((s, i)),
                _ => None,
            })
            .collect()
    }

    /// Fault site read by `e` when it is exactly a fault variable load.
    pub fn fault_site_of(&self, e: &Expr) -> Option<u32> {
        match &e.kind {
            ExprKind::Load(Place { var: VarRef::Global(g), field: None, index: None }) => {
                match self.globals[*g].kind {
                    GlobalKind::Fault(s) => Some(s),
                    _ => None,
                }
            }
            _ => None,
        }
    }

    /// All assertions in textual order.
    pub fn assertions(&self) -> Vec<AssertionRef> {
        let mut out = Vec::new();
        for (fi, f) in self.functions.iter().enumerate() {
            visit_stmts(&f.body, &mut |s| {
                if let StmtKind::Assert { id, origin, cond } = &s.kind {
                    out.push(AssertionRef {
                        id: *id,
                        function: fi,
                        origin: *origin,
                        span: s.span,
                        cond: cond.clone(),
                    });
                }
            });
        }
        out.sort_by_key(|a| a.id);
        out
    }
}

/// Pre-order visit of every statement, descending into nested blocks and loop headers.
pub fn visit_stmts<'a>(b: &'a Block, f: &mut dyn FnMut(&'a Stmt)) {
    for s in &b.stmts {
        visit_stmt(s, f);
    }
}

pub fn visit_stmt<'a>(s: &'a Stmt, f: &mut dyn FnMut(&'a Stmt)) {
    f(s);
    match &s.kind {
        StmtKind::If { then_block, else_block, .. } => {
            visit_stmts(then_block, f);
            if let Some(e) = else_block {
                visit_stmts(e, f);
            }
        }
        StmtKind::While { body, .. } => visit_stmts(body, f),
        StmtKind::For { init, step, body, .. } => {
            if let Some(i) = init {
                visit_stmt(i, f);
            }
            visit_stmts(body, f);
            if let Some(s) = step {
                visit_stmt(s, f);
            }
        }
        StmtKind::Block(b) => visit_stmts(b, f),
        _ => {}
    }
}

pub fn visit_stmts_mut(b: &mut Block, f: &mut dyn FnMut(&mut Stmt)) {
    for s in &mut b.stmts {
        visit_stmt_mut(s, f);
    }
}

pub fn visit_stmt_mut(s: &mut Stmt, f: &mut dyn FnMut(&mut Stmt)) {
    f(s);
    match &mut s.kind {
        StmtKind::If { then_block, else_block, .. } => {
            visit_stmts_mut(then_block, f);
            if let Some(e) = else_block {
                visit_stmts_mut(e, f);
            }
        }
        StmtKind::While { body, .. } => visit_stmts_mut(body, f),
        StmtKind::For { init, step, body, .. } => {
            if let Some(i) = init {
                visit_stmt_mut(i, f);
            }
            visit_stmts_mut(body, f);
            if let Some(s) = step {
                visit_stmt_mut(s, f);
            }
        }
        StmtKind::Block(b) => visit_stmts_mut(b, f),
        _ => {}
    }
}

/// Every expression directly owned by a statement (not nested statements).
pub fn stmt_exprs_mut(s: &mut Stmt, f: &mut dyn FnMut(&mut Expr)) {
    fn place(p: &mut Place, f: &mut dyn FnMut(&mut Expr)) {
        if let Some(i) = &mut p.index {
            f(i);
        }
    }
    match &mut s.kind {
        StmtKind::Decl { init: Some(e), .. } => f(e),
        StmtKind::Assign { place: p, value } => {
            place(p, f);
            f(value);
        }
        StmtKind::Increment { place: p, .. } => place(p, f),
        StmtKind::Call { dest, args, .. } => {
            if let Some(p) = dest {
                place(p, f);
            }
            for a in args {
                if let Arg::Value(e) = a {
                    f(e);
                }
            }
        }
        StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => f(cond),
        StmtKind::For { cond: Some(c), .. } => f(c),
        StmtKind::Return(Some(e)) | StmtKind::Print(e) => f(e),
        StmtKind::Assert { cond, .. } => f(cond),
        _ => {}
    }
}

/// Replace every span with the default so that structural comparison ignores positions.
pub fn clear_spans(p: &mut Program) {
    for g in &mut p.globals {
        g.span = Span::default();
    }
    for f in &mut p.functions {
        f.span = Span::default();
        visit_stmts_mut(&mut f.body, &mut |s| {
            s.span = Span::default();
            stmt_exprs_mut(s, &mut |e| e.walk_mut(&mut |e| e.span = Span::default()));
        });
    }
}

/// Rewrite global indices with `map` (old index -> new index).
pub fn remap_globals(p: &mut Program, map: &[usize]) {
    fn fix_place(pl: &mut Place, map: &[usize]) {
        if let VarRef::Global(g) = &mut pl.var {
            *g = map[*g];
        }
    }
    fn fix_expr(e: &mut Expr, map: &[usize]) {
        e.walk_mut(&mut |e| {
            if let ExprKind::Load(pl) = &mut e.kind {
                fix_place(pl, map);
            }
        });
    }
    for f in &mut p.functions {
        visit_stmts_mut(&mut f.body, &mut |s| {
            match &mut s.kind {
                StmtKind::Assign { place, .. } | StmtKind::Increment { place, .. } => {
                    fix_place(place, map)
                }
                StmtKind::Call { dest, args, .. } => {
                    if let Some(d) = dest {
                        fix_place(d, map);
                    }
                    for a in args.iter_mut() {
                        if let Arg::Ref(VarRef::Global(g)) = a {
                            *g = map[*g];
                        }
                    }
                }
                _ => {}
            }
            stmt_exprs_mut(s, &mut |e| fix_expr(e, map));
        });
    }
}
