//! Hash-consed-by-value symbolic terms over fixed-width integers.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::frontend::ast::{BinOp, ScalarType, UnOp};
use crate::instrument::SiteId;
use crate::semantics;

pub type VarId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarKind {
    Input(String),
    Fault { site: SiteId, occurrence: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarInfo {
    pub kind: VarKind,
    pub ty: ScalarType,
    /// Finite value set from a domain annotation.
    pub values: Option<Vec<i64>>,
}

/// Variables of one exploration. Fault variables are keyed by site and
/// occurrence, so the same dynamic occurrence on different paths shares a
/// variable.
#[derive(Debug, Clone, Default)]
pub struct VarTable {
    pub vars: Vec<VarInfo>,
    index: HashMap<VarKind, VarId>,
}

impl VarTable {
    pub fn intern(&mut self, kind: VarKind, ty: ScalarType, values: Option<Vec<i64>>) -> (VarId, bool) {
        if let Some(&v) = self.index.get(&kind) {
            return (v, false);
        }
        let id = self.vars.len() as VarId;
        self.vars.push(VarInfo { kind: kind.clone(), ty, values });
        self.index.insert(kind, id);
        (id, true)
    }

    pub fn get(&self, v: VarId) -> &VarInfo {
        &self.vars[v as usize]
    }

    pub fn lookup(&self, kind: &VarKind) -> Option<VarId> {
        self.index.get(kind).copied()
    }
}

pub type Model = BTreeMap<VarId, i64>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Op {
    Const(i64),
    Var(VarId),
    Unary(UnOp, Term),
    /// Operands share a type; comparisons and logical operators produce `u8`.
    Binary(BinOp, Term, Term),
    Cast(Term),
    Ite(Term, Term, Term),
}

#[derive(Debug)]
pub struct Node {
    pub op: Op,
    pub ty: ScalarType,
    hash: u64,
    size: u32,
}

#[derive(Clone)]
pub struct Term(Rc<Node>);

impl PartialEq for Term {
    fn eq(&self, other: &Term) -> bool {
        Rc::ptr_eq(&self.0, &other.0)
            || (self.0.hash == other.0.hash && self.0.ty == other.0.ty && self.0.op == other.0.op)
    }
}

impl Eq for Term {}

impl Hash for Term {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash)
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Term) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// An arbitrary but deterministic order (by hash, then structure).
impl Ord for Term {
    fn cmp(&self, other: &Term) -> std::cmp::Ordering {
        if self == other {
            return std::cmp::Ordering::Equal;
        }
        self.0.hash.cmp(&other.0.hash).then_with(|| format!("{self:?}").cmp(&format!("{other:?}")))
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0.op {
            Op::Const(v) => write!(f, "{v}:{}", self.ty()),
            Op::Var(v) => write!(f, "v{v}:{}", self.ty()),
            Op::Unary(op, a) => write!(f, "({op:?} {a:?})"),
            Op::Binary(op, a, b) => write!(f, "({a:?} {} {b:?})", op.symbol()),
            Op::Cast(a) => write!(f, "(({}) {a:?})", self.ty()),
            Op::Ite(c, a, b) => write!(f, "(ite {c:?} {a:?} {b:?})"),
        }
    }
}

fn mix(h: u64, x: u64) -> u64 {
    (h ^ x).wrapping_mul(0x100000001b3).rotate_left(23) ^ (x >> 7)
}

fn ty_code(t: ScalarType) -> u64 {
    t.bits() as u64 * 2 + t.signed() as u64
}

impl Term {
    fn mk(op: Op, ty: ScalarType) -> Term {
        let mut h = mix(0xcbf29ce484222325, ty_code(ty));
        let size = match &op {
            Op::Const(v) => {
                h = mix(mix(h, 1), *v as u64);
                1
            }
            Op::Var(v) => {
                h = mix(mix(h, 2), *v as u64);
                1
            }
            Op::Unary(o, a) => {
                h = mix(mix(mix(h, 3), *o as u64), a.0.hash);
                1 + a.0.size
            }
            Op::Binary(o, a, b) => {
                h = mix(mix(mix(mix(h, 4), *o as u64), a.0.hash), b.0.hash);
                1u32.saturating_add(a.0.size).saturating_add(b.0.size)
            }
            Op::Cast(a) => {
                h = mix(mix(h, 5), a.0.hash);
                1 + a.0.size
            }
            Op::Ite(c, a, b) => {
                h = mix(mix(mix(mix(h, 6), c.0.hash), a.0.hash), b.0.hash);
                1u32.saturating_add(c.0.size).saturating_add(a.0.size).saturating_add(b.0.size)
            }
        };
        Term(Rc::new(Node { op, ty, hash: h, size }))
    }

    pub fn op(&self) -> &Op {
        &self.0.op
    }

    pub fn ty(&self) -> ScalarType {
        self.0.ty
    }

    /// Tree size; shared subterms count once per occurrence.
    pub fn size(&self) -> u32 {
        self.0.size
    }

    pub fn konst(v: i64, ty: ScalarType) -> Term {
        Term::mk(Op::Const(ty.wrap(v as i128)), ty)
    }

    pub fn var(v: VarId, ty: ScalarType) -> Term {
        Term::mk(Op::Var(v), ty)
    }

    pub fn truth(b: bool) -> Term {
        Term::konst(b as i64, ScalarType::U8)
    }

    pub fn as_const(&self) -> Option<i64> {
        match self.0.op {
            Op::Const(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_bool(&self) -> bool {
        match &self.0.op {
            Op::Const(v) => self.ty() == ScalarType::U8 && (*v == 0 || *v == 1),
            Op::Unary(UnOp::Not, _) => true,
            Op::Binary(op, _, _) => op.is_comparison() || op.is_logical(),
            Op::Ite(_, a, b) => a.is_bool() && b.is_bool(),
            _ => false,
        }
    }

    pub fn unary(op: UnOp, a: Term) -> Term {
        let ty = if op == UnOp::Not { ScalarType::U8 } else { a.ty() };
        if let Some(v) = a.as_const() {
            return Term::konst(semantics::unop(op, a.ty(), v), ty);
        }
        match (op, a.op()) {
            (UnOp::Not, Op::Unary(UnOp::Not, x)) if x.is_bool() => return x.clone(),
            (UnOp::Not, Op::Binary(c, x, y)) if c.is_comparison() => {
                return Term::binary(c.negate().expect("comparison"), x.clone(), y.clone())
            }
            (UnOp::Neg, Op::Unary(UnOp::Neg, x)) | (UnOp::BitNot, Op::Unary(UnOp::BitNot, x)) => {
                return x.clone()
            }
            _ => {}
        }
        Term::mk(Op::Unary(op, a), ty)
    }

    pub fn not(a: Term) -> Term {
        Term::unary(UnOp::Not, a)
    }

    /// `a != 0` as a boolean term.
    pub fn nonzero(a: Term) -> Term {
        if a.is_bool() {
            return a;
        }
        let z = Term::konst(0, a.ty());
        Term::binary(BinOp::Ne, a, z)
    }

    pub fn binary(op: BinOp, a: Term, b: Term) -> Term {
        if op.is_logical() && (a.ty() != b.ty() || !a.is_bool() || !b.is_bool()) {
            // operands of && and || only matter through their truth
            return Term::binary(op, Term::nonzero(a), Term::nonzero(b));
        }
        debug_assert_eq!(a.ty(), b.ty(), "{op:?} on {a:?} and {b:?}");
        let t = a.ty();
        let rt = if op.is_comparison() || op.is_logical() { ScalarType::U8 } else { t };
        if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
            return Term::konst(semantics::binop(op, t, x, y), rt);
        }
        let ac = a.as_const();
        let bc = b.as_const();
        match op {
            BinOp::Add | BinOp::Or | BinOp::Xor | BinOp::Shl | BinOp::Shr | BinOp::Sub if bc == Some(0) => {
                return a
            }
            BinOp::Add | BinOp::Or | BinOp::Xor if ac == Some(0) => return b,
            BinOp::Xor if a == b => return Term::konst(0, t),
            BinOp::Sub if a == b => return Term::konst(0, t),
            BinOp::And if bc == Some(0) || ac == Some(0) => return Term::konst(0, t),
            BinOp::And if bc == Some(t.all_ones()) => return a,
            BinOp::And if ac == Some(t.all_ones()) => return b,
            BinOp::Mul if bc == Some(1) => return a,
            BinOp::Mul if ac == Some(1) => return b,
            BinOp::Mul if bc == Some(0) || ac == Some(0) => return Term::konst(0, t),
            BinOp::Eq | BinOp::Le | BinOp::Ge if a == b => return Term::truth(true),
            BinOp::Ne | BinOp::Lt | BinOp::Gt if a == b => return Term::truth(false),
            BinOp::LogAnd => {
                match (ac, bc) {
                    (Some(0), _) | (_, Some(0)) => return Term::truth(false),
                    (Some(_), _) => return Term::nonzero(b),
                    (_, Some(_)) => return Term::nonzero(a),
                    _ => {}
                }
                if a == b {
                    return Term::nonzero(a);
                }
            }
            BinOp::LogOr => {
                match (ac, bc) {
                    (Some(0), _) => return Term::nonzero(b),
                    (_, Some(0)) => return Term::nonzero(a),
                    (Some(_), _) | (_, Some(_)) => return Term::truth(true),
                    _ => {}
                }
                if a == b {
                    return Term::nonzero(a);
                }
            }
            // (x == 0) on a boolean is its negation; (x != 0) is x itself
            BinOp::Eq if bc == Some(0) && a.is_bool() => return Term::not(a),
            BinOp::Ne if bc == Some(0) && a.is_bool() => return a,
            _ => {}
        }
        // Normalize constants to the right of commutative operators.
        let (a, b) = match op {
            BinOp::Add | BinOp::Mul | BinOp::And | BinOp::Or | BinOp::Xor | BinOp::Eq | BinOp::Ne
                if ac.is_some() =>
            {
                (b, a)
            }
            _ => (a, b),
        };
        // (x ^ c1) ^ c2 and (x + c1) + c2
        if let (Some(c2), Op::Binary(inner, x, c1)) = (b.as_const(), a.op()) {
            if let Some(c1) = c1.as_const() {
                if *inner == op && matches!(op, BinOp::Xor | BinOp::Add | BinOp::And | BinOp::Or) {
                    let c = semantics::binop(op, t, c1, c2);
                    return Term::binary(op, x.clone(), Term::konst(c, t));
                }
            }
        }
        Term::mk(Op::Binary(op, a, b), rt)
    }

    /// A binary node built without any simplification.
    pub fn raw_binary(op: BinOp, a: Term, b: Term) -> Term {
        let rt = if op.is_comparison() || op.is_logical() { ScalarType::U8 } else { a.ty() };
        Term::mk(Op::Binary(op, a, b), rt)
    }

    pub fn cast(to: ScalarType, a: Term) -> Term {
        if a.ty() == to {
            return a;
        }
        if let Some(v) = a.as_const() {
            return Term::konst(semantics::cast(to, v), to);
        }
        if let Op::Cast(x) = a.op() {
            // widening then narrowing back is the identity
            if x.ty() == to && a.ty().bits() >= to.bits() {
                return x.clone();
            }
        }
        Term::mk(Op::Cast(a), to)
    }

    pub fn ite(c: Term, a: Term, b: Term) -> Term {
        debug_assert_eq!(a.ty(), b.ty());
        if let Some(v) = c.as_const() {
            return if v != 0 { a } else { b };
        }
        if a == b {
            return a;
        }
        let c = Term::nonzero(c);
        let ty = a.ty();
        Term::mk(Op::Ite(c, a, b), ty)
    }

    pub fn and(a: Term, b: Term) -> Term {
        Term::binary(BinOp::LogAnd, a, b)
    }

    pub fn vars(&self, out: &mut BTreeSet<VarId>) {
        let mut seen = std::collections::HashSet::new();
        self.walk(&mut seen, &mut |t| {
            if let Op::Var(v) = t.op() {
                out.insert(*v);
            }
        });
    }

    /// Visit each distinct subterm once, children first.
    pub fn walk(&self, seen: &mut std::collections::HashSet<*const Node>, f: &mut dyn FnMut(&Term)) {
        if !seen.insert(Rc::as_ptr(&self.0)) {
            return;
        }
        match self.op() {
            Op::Const(_) | Op::Var(_) => {}
            Op::Unary(_, a) | Op::Cast(a) => a.walk(seen, f),
            Op::Binary(_, a, b) => {
                a.walk(seen, f);
                b.walk(seen, f);
            }
            Op::Ite(c, a, b) => {
                c.walk(seen, f);
                a.walk(seen, f);
                b.walk(seen, f);
            }
        }
        f(self);
    }

    pub(crate) fn ptr(&self) -> *const Node {
        Rc::as_ptr(&self.0)
    }

    /// Concrete value under a model; unbound variables read as `default`.
    pub fn eval(&self, model: &dyn Fn(VarId) -> Option<i64>) -> i64 {
        let mut memo: HashMap<*const Node, i64> = HashMap::new();
        self.eval_memo(model, &mut memo)
    }

    fn eval_memo(&self, model: &dyn Fn(VarId) -> Option<i64>, memo: &mut HashMap<*const Node, i64>) -> i64 {
        if let Some(v) = memo.get(&self.ptr()) {
            return *v;
        }
        let v = match self.op() {
            Op::Const(v) => *v,
            Op::Var(x) => self.ty().wrap(model(*x).unwrap_or(0) as i128),
            Op::Unary(op, a) => semantics::unop(*op, a.ty(), a.eval_memo(model, memo)),
            Op::Cast(a) => semantics::cast(self.ty(), a.eval_memo(model, memo)),
            Op::Binary(op, a, b) => {
                let x = a.eval_memo(model, memo);
                let y = b.eval_memo(model, memo);
                semantics::binop(*op, a.ty(), x, y)
            }
            Op::Ite(c, a, b) => {
                if c.eval_memo(model, memo) != 0 {
                    a.eval_memo(model, memo)
                } else {
                    b.eval_memo(model, memo)
                }
            }
        };
        if self.size() > 1 {
            memo.insert(self.ptr(), v);
        }
        v
    }

    pub fn eval_model(&self, m: &Model) -> i64 {
        self.eval(&|v| m.get(&v).copied())
    }
}

/// A term set flattened into a straight-line program for fast repeated
/// evaluation.
pub struct Flat {
    code: Vec<(Op2, ScalarType)>,
    roots: Vec<usize>,
    pub vars: Vec<VarId>,
}

#[derive(Clone, Copy)]
enum Op2 {
    Const(i64),
    Var(usize),
    Unary(UnOp, usize, ScalarType),
    Binary(BinOp, usize, usize, ScalarType),
    Cast(usize),
    Ite(usize, usize, usize),
}

impl Flat {
    pub fn new(terms: &[Term]) -> Flat {
        let mut index: HashMap<*const Node, usize> = HashMap::new();
        let mut code = Vec::new();
        let mut vars: Vec<VarId> = Vec::new();
        let mut var_slot: HashMap<VarId, usize> = HashMap::new();
        let mut seen = std::collections::HashSet::new();
        for t in terms {
            t.walk(&mut seen, &mut |x| {
                let at = |y: &Term| index[&y.ptr()];
                let op = match x.op() {
                    Op::Const(v) => Op2::Const(*v),
                    Op::Var(v) => {
                        let n = var_slot.len();
                        let s = *var_slot.entry(*v).or_insert_with(|| {
                            vars.push(*v);
                            n
                        });
                        Op2::Var(s)
                    }
                    Op::Unary(o, a) => Op2::Unary(*o, at(a), a.ty()),
                    Op::Binary(o, a, b) => Op2::Binary(*o, at(a), at(b), a.ty()),
                    Op::Cast(a) => Op2::Cast(at(a)),
                    Op::Ite(c, a, b) => Op2::Ite(at(c), at(a), at(b)),
                };
                index.insert(x.ptr(), code.len());
                code.push((op, x.ty()));
            });
        }
        let roots = terms.iter().map(|t| index[&t.ptr()]).collect();
        Flat { code, roots, vars }
    }

    pub fn len(&self) -> usize {
        self.code.len()
    }

    pub fn is_empty(&self) -> bool {
        self.code.is_empty()
    }

    /// Are all roots non-zero when `self.vars[i]` takes `values[i]`?
    pub fn holds(&self, values: &[i64], scratch: &mut Vec<i64>) -> bool {
        scratch.clear();
        for (op, ty) in &self.code {
            let v = match *op {
                Op2::Const(v) => v,
                Op2::Var(s) => ty.wrap(values[s] as i128),
                Op2::Unary(o, a, t) => semantics::unop(o, t, scratch[a]),
                Op2::Binary(o, a, b, t) => semantics::binop(o, t, scratch[a], scratch[b]),
                Op2::Cast(a) => semantics::cast(*ty, scratch[a]),
                Op2::Ite(c, a, b) => {
                    if scratch[c] != 0 {
                        scratch[a]
                    } else {
                        scratch[b]
                    }
                }
            };
            scratch.push(v);
        }
        self.roots.iter().all(|&r| scratch[r] != 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ScalarType::*;

    #[test]
    fn constants_fold() {
        let t = Term::binary(BinOp::Add, Term::konst(250, U8), Term::konst(10, U8));
        assert_eq!(t.as_const(), Some(4));
        let x = Term::var(0, U8);
        assert_eq!(Term::binary(BinOp::Xor, x.clone(), Term::konst(0, U8)), x);
        assert_eq!(Term::binary(BinOp::Xor, x.clone(), x.clone()).as_const(), Some(0));
        assert_eq!(Term::binary(BinOp::Eq, x.clone(), x.clone()).as_const(), Some(1));
        let c = Term::binary(BinOp::Lt, x.clone(), Term::konst(3, U8));
        assert_eq!(Term::not(c.clone()), Term::binary(BinOp::Ge, x.clone(), Term::konst(3, U8)));
        assert_eq!(Term::not(Term::not(c.clone())), c);
    }

    #[test]
    fn structural_equality_and_hash() {
        let a = Term::binary(BinOp::Add, Term::var(1, U32), Term::konst(4, U32));
        let b = Term::binary(BinOp::Add, Term::konst(4, U32), Term::var(1, U32));
        assert_eq!(a, b);
        let mut s = std::collections::HashSet::new();
        s.insert(a);
        assert!(s.contains(&b));
    }

    #[test]
    fn flat_matches_tree_evaluation() {
        let x = Term::var(0, I16);
        let y = Term::var(1, I16);
        let e = Term::binary(BinOp::Lt, Term::binary(BinOp::Mul, x.clone(), y.clone()), Term::konst(-3, I16));
        let f = Flat::new(&[e.clone()]);
        let mut scratch = Vec::new();
        for (a, b) in [(1, 1), (-2, 2), (300, 300), (-1, 5)] {
            let m: Model = [(0, a), (1, b)].into_iter().collect();
            let vals: Vec<i64> = f.vars.iter().map(|v| m[v]).collect();
            assert_eq!(f.holds(&vals, &mut scratch), e.eval_model(&m) != 0);
        }
    }
}
