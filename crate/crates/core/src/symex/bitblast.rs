//! Translation of term constraints to CNF, solved with varisat.

use std::collections::HashMap;

use varisat::{ExtendFormula, Lit, Solver};

use super::term::{Model, Op, Term, VarId, VarTable};
use crate::frontend::ast::{BinOp, ScalarType, UnOp};

/// Bits of a value, least significant first.
type Bits = Vec<Lit>;

pub struct Blaster<'s> {
    solver: Solver<'s>,
    t: Lit,
    memo: HashMap<Term, Bits>,
    vars: HashMap<VarId, Bits>,
    pub clauses: usize,
}

impl Default for Blaster<'_> {
    fn default() -> Self {
        Self::new()
    }
}

impl<'s> Blaster<'s> {
    pub fn new() -> Blaster<'s> {
        let mut solver = Solver::new();
        let t = solver.new_lit();
        solver.add_clause(&[t]);
        Blaster { solver, t, memo: HashMap::new(), vars: HashMap::new(), clauses: 1 }
    }

    fn clause(&mut self, c: &[Lit]) {
        self.clauses += 1;
        self.solver.add_clause(c);
    }

    fn f(&self) -> Lit {
        !self.t
    }

    fn lit_const(&self, b: bool) -> Lit {
        if b {
            self.t
        } else {
            self.f()
        }
    }

    fn fresh(&mut self) -> Lit {
        self.solver.new_lit()
    }

    fn and2(&mut self, a: Lit, b: Lit) -> Lit {
        if a == self.f() || b == self.f() || a == !b {
            return self.f();
        }
        if a == self.t || a == b {
            return b;
        }
        if b == self.t {
            return a;
        }
        let o = self.fresh();
        self.clause(&[!o, a]);
        self.clause(&[!o, b]);
        self.clause(&[o, !a, !b]);
        o
    }

    fn or2(&mut self, a: Lit, b: Lit) -> Lit {
        !self.and2(!a, !b)
    }

    fn xor2(&mut self, a: Lit, b: Lit) -> Lit {
        if a == self.f() {
            return b;
        }
        if b == self.f() {
            return a;
        }
        if a == self.t {
            return !b;
        }
        if b == self.t {
            return !a;
        }
        if a == b {
            return self.f();
        }
        if a == !b {
            return self.t;
        }
        let o = self.fresh();
        self.clause(&[!o, a, b]);
        self.clause(&[!o, !a, !b]);
        self.clause(&[o, !a, b]);
        self.clause(&[o, a, !b]);
        o
    }

    /// `c ? a : b`
    fn mux(&mut self, c: Lit, a: Lit, b: Lit) -> Lit {
        if c == self.t || a == b {
            return a;
        }
        if c == self.f() {
            return b;
        }
        let o = self.fresh();
        self.clause(&[!c, !a, o]);
        self.clause(&[!c, a, !o]);
        self.clause(&[c, !b, o]);
        self.clause(&[c, b, !o]);
        o
    }

    fn or_all(&mut self, xs: &[Lit]) -> Lit {
        let mut acc = self.f();
        for &x in xs {
            acc = self.or2(acc, x);
        }
        acc
    }

    fn full_add(&mut self, a: Lit, b: Lit, c: Lit) -> (Lit, Lit) {
        let ab = self.xor2(a, b);
        let s = self.xor2(ab, c);
        let x = self.and2(a, b);
        let y = self.and2(ab, c);
        (s, self.or2(x, y))
    }

    fn add(&mut self, a: &Bits, b: &Bits, carry: Lit) -> (Bits, Lit) {
        let mut c = carry;
        let mut out = Vec::with_capacity(a.len());
        for i in 0..a.len() {
            let (s, c2) = self.full_add(a[i], b[i], c);
            out.push(s);
            c = c2;
        }
        (out, c)
    }

    fn not_bits(&self, a: &Bits) -> Bits {
        a.iter().map(|&x| !x).collect()
    }

    /// `a - b` and whether no borrow occurred (`a >= b` unsigned).
    fn sub(&mut self, a: &Bits, b: &Bits) -> (Bits, Lit) {
        let nb = self.not_bits(b);
        let t = self.t;
        self.add(a, &nb, t)
    }

    fn neg(&mut self, a: &Bits) -> Bits {
        let zero = vec![self.f(); a.len()];
        self.sub(&zero, a).0
    }

    fn mul(&mut self, a: &Bits, b: &Bits) -> Bits {
        let w = a.len();
        let mut acc = vec![self.f(); w];
        for i in 0..w {
            if b[i] == self.f() {
                continue;
            }
            let mut row = vec![self.f(); w];
            for j in 0..w - i {
                row[i + j] = self.and2(a[j], b[i]);
            }
            let f = self.f();
            acc = self.add(&acc, &row, f).0;
        }
        acc
    }

    fn eq(&mut self, a: &Bits, b: &Bits) -> Lit {
        let diffs: Vec<Lit> = (0..a.len()).map(|i| self.xor2(a[i], b[i])).collect();
        !self.or_all(&diffs)
    }

    fn ult(&mut self, a: &Bits, b: &Bits) -> Lit {
        !self.sub(a, b).1
    }

    fn slt(&mut self, a: &Bits, b: &Bits) -> Lit {
        let w = a.len();
        let mut a2 = a.clone();
        let mut b2 = b.clone();
        a2[w - 1] = !a[w - 1];
        b2[w - 1] = !b[w - 1];
        self.ult(&a2, &b2)
    }

    fn mux_bits(&mut self, c: Lit, a: &Bits, b: &Bits) -> Bits {
        (0..a.len()).map(|i| self.mux(c, a[i], b[i])).collect()
    }

    /// Unsigned division with remainder; division by zero is handled by the caller.
    fn udivrem(&mut self, a: &Bits, b: &Bits) -> (Bits, Bits) {
        let w = a.len();
        let mut rem = vec![self.f(); w + 1];
        let mut q = vec![self.f(); w];
        let mut bx = b.clone();
        bx.push(self.f());
        for i in (0..w).rev() {
            // rem = rem << 1 | a[i]
            rem.pop();
            rem.insert(0, a[i]);
            let (diff, ge) = self.sub(&rem, &bx);
            q[i] = ge;
            rem = self.mux_bits(ge, &diff, &rem);
        }
        rem.pop();
        (q, rem)
    }

    fn shift(&mut self, a: &Bits, amt: &Bits, left: bool, fill: Lit) -> Bits {
        let w = a.len();
        let stages = w.trailing_zeros() as usize;
        let mut cur = a.clone();
        for (s, &bit) in amt.iter().enumerate().take(stages) {
            let k = 1usize << s;
            let shifted: Bits = (0..w)
                .map(|i| {
                    if left {
                        if i >= k {
                            cur[i - k]
                        } else {
                            self.f()
                        }
                    } else if i + k < w {
                        cur[i + k]
                    } else {
                        fill
                    }
                })
                .collect();
            cur = self.mux_bits(bit, &shifted, &cur);
        }
        let big = self.or_all(&amt[stages..]);
        let filled = vec![fill; w];
        self.mux_bits(big, &filled, &cur)
    }

    fn bool_bits(&self, b: Lit) -> Bits {
        let mut v = vec![self.f(); 8];
        v[0] = b;
        v
    }

    fn nonzero(&mut self, a: &Bits) -> Lit {
        self.or_all(a)
    }

    fn const_bits(&self, v: i64, ty: ScalarType) -> Bits {
        let raw = ty.to_raw(v);
        (0..ty.bits()).map(|i| self.lit_const(raw >> i & 1 == 1)).collect()
    }

    fn var_bits(&mut self, v: VarId, ty: ScalarType) -> Bits {
        if let Some(b) = self.vars.get(&v) {
            return b.clone();
        }
        let b: Bits = (0..ty.bits()).map(|_| self.fresh()).collect();
        self.vars.insert(v, b.clone());
        b
    }

    pub fn blast(&mut self, t: &Term) -> Bits {
        if let Some(b) = self.memo.get(t) {
            return b.clone();
        }
        let ty = t.ty();
        let out = match t.op() {
            Op::Const(v) => self.const_bits(*v, ty),
            Op::Var(v) => self.var_bits(*v, ty),
            Op::Cast(a) => {
                let x = self.blast(a);
                let (w1, w2) = (x.len(), ty.bits() as usize);
                if w2 <= w1 {
                    x[..w2].to_vec()
                } else {
                    let ext = if a.ty().signed() { x[w1 - 1] } else { self.f() };
                    let mut y = x.clone();
                    y.resize(w2, ext);
                    y
                }
            }
            Op::Unary(op, a) => {
                let x = self.blast(a);
                match op {
                    UnOp::Neg => self.neg(&x),
                    UnOp::BitNot => self.not_bits(&x),
                    UnOp::Not => {
                        let nz = self.nonzero(&x);
                        self.bool_bits(!nz)
                    }
                }
            }
            Op::Ite(c, a, b) => {
                let cb = self.blast(c);
                let cl = self.nonzero(&cb);
                let (x, y) = (self.blast(a), self.blast(b));
                self.mux_bits(cl, &x, &y)
            }
            Op::Binary(op, a, b) => {
                let x = self.blast(a);
                let y = self.blast(b);
                let at = a.ty();
                match op {
                    BinOp::Add => {
                        let f = self.f();
                        self.add(&x, &y, f).0
                    }
                    BinOp::Sub => self.sub(&x, &y).0,
                    BinOp::Mul => self.mul(&x, &y),
                    BinOp::Div | BinOp::Rem => self.divrem(*op, &x, &y, at.signed()),
                    BinOp::And => (0..x.len()).map(|i| self.and2(x[i], y[i])).collect(),
                    BinOp::Or => (0..x.len()).map(|i| self.or2(x[i], y[i])).collect(),
                    BinOp::Xor => (0..x.len()).map(|i| self.xor2(x[i], y[i])).collect(),
                    BinOp::Shl => {
                        let f = self.f();
                        self.shift(&x, &y, true, f)
                    }
                    BinOp::Shr => {
                        let fill = if at.signed() { x[x.len() - 1] } else { self.f() };
                        self.shift(&x, &y, false, fill)
                    }
                    BinOp::Eq => {
                        let e = self.eq(&x, &y);
                        self.bool_bits(e)
                    }
                    BinOp::Ne => {
                        let e = self.eq(&x, &y);
                        self.bool_bits(!e)
                    }
                    BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                        let (l, r, strict) = match op {
                            BinOp::Lt => (&x, &y, true),
                            BinOp::Gt => (&y, &x, true),
                            BinOp::Le => (&y, &x, false),
                            _ => (&x, &y, false),
                        };
                        let lt = if at.signed() { self.slt(l, r) } else { self.ult(l, r) };
                        // a <= b is !(b < a)
                        self.bool_bits(if strict { lt } else { !lt })
                    }
                    BinOp::LogAnd | BinOp::LogOr => {
                        let p = self.nonzero(&x);
                        let q = self.nonzero(&y);
                        let r = if *op == BinOp::LogAnd { self.and2(p, q) } else { self.or2(p, q) };
                        self.bool_bits(r)
                    }
                }
            }
        };
        self.memo.insert(t.clone(), out.clone());
        out
    }

    fn divrem(&mut self, op: BinOp, x: &Bits, y: &Bits, signed: bool) -> Bits {
        let w = x.len();
        let y_zero = !self.nonzero(y);
        let (q, r) = if signed {
            let sx = x[w - 1];
            let sy = y[w - 1];
            let nx = self.neg(x);
            let ny = self.neg(y);
            let ax = self.mux_bits(sx, &nx, x);
            let ay = self.mux_bits(sy, &ny, y);
            let (uq, ur) = self.udivrem(&ax, &ay);
            let qs = self.xor2(sx, sy);
            let nq = self.neg(&uq);
            let nr = self.neg(&ur);
            (self.mux_bits(qs, &nq, &uq), self.mux_bits(sx, &nr, &ur))
        } else {
            self.udivrem(x, y)
        };
        if op == BinOp::Div {
            let zero = vec![self.f(); w];
            self.mux_bits(y_zero, &zero, &q)
        } else {
            self.mux_bits(y_zero, x, &r)
        }
    }

    /// Require a term to be non-zero.
    pub fn assert(&mut self, t: &Term) {
        let b = self.blast(t);
        let nz = self.nonzero(&b);
        self.clause(&[nz]);
    }

    /// `Some(model)` when satisfiable, over the variables seen so far.
    pub fn solve(mut self, vars: &VarTable) -> Option<Model> {
        if !self.solver.solve().expect("varisat failed") {
            return None;
        }
        let lits = self.solver.model().expect("model after sat");
        let mut val: HashMap<varisat::Var, bool> = HashMap::new();
        for l in lits {
            val.insert(l.var(), l.is_positive());
        }
        let lv = |l: Lit| -> bool { val.get(&l.var()).map(|&p| p == l.is_positive()).unwrap_or(false) };
        let mut m = Model::new();
        for (v, bits) in &self.vars {
            let raw = bits.iter().enumerate().fold(0u64, |acc, (i, &l)| acc | ((lv(l) as u64) << i));
            m.insert(*v, vars.get(*v).ty.from_raw(raw));
        }
        Some(m)
    }
}
