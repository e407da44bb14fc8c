#![allow(dead_code)]

//! Random well-typed FIC programs for property tests.

use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

const TYPES: [&str; 6] = ["u8", "i8", "u16", "i16", "u32", "i32"];
const CONSTS: [i64; 16] = [0, 1, 2, 3, 7, 100, 127, 128, 255, 256, -1, -128, 32767, 65535, -5, 2147483647];
const BINOPS: [&str; 18] =
    ["+", "-", "*", "/", "%", "&", "|", "^", "<<", ">>", "==", "!=", "<", "<=", ">", ">=", "&&", "||"];

pub struct GenProgram {
    pub source: String,
    pub domains: BTreeMap<String, Vec<i64>>,
}

impl GenProgram {
    /// Every assignment of domain values to inputs.
    pub fn input_space(&self) -> Vec<BTreeMap<String, i64>> {
        let mut out = vec![BTreeMap::new()];
        for (k, vs) in &self.domains {
            out = out
                .into_iter()
                .flat_map(|m| {
                    vs.iter().map(move |v| {
                        let mut m = m.clone();
                        m.insert(k.clone(), *v);
                        m
                    })
                })
                .collect();
        }
        out
    }
}

struct Gen {
    rng: StdRng,
    out: String,
    indent: usize,
    /// Readable scalars in scope.
    readable: Vec<String>,
    /// Assignable scalars in scope.
    writable: Vec<String>,
    fresh: usize,
    in_main: bool,
}

impl Gen {
    fn line(&mut self, s: &str) {
        for _ in 0..self.indent {
            self.out.push_str("    ");
        }
        self.out.push_str(s);
        self.out.push('\n');
    }

    fn ty(&mut self) -> &'static str {
        TYPES.choose(&mut self.rng).unwrap()
    }

    fn name(&mut self, prefix: &str) -> String {
        self.fresh += 1;
        format!("{prefix}{}", self.fresh)
    }

    fn leaf(&mut self) -> String {
        match self.rng.gen_range(0..10) {
            0..=3 if !self.readable.is_empty() => self.readable.choose(&mut self.rng).unwrap().clone(),
            4 => "__sym_input_u8(\"in0\")".into(),
            5 => "__sym_input_i16(\"in1\")".into(),
            6 => "garr[g0 & 3]".into(),
            7 => "rec.a".into(),
            _ => {
                let c = *CONSTS.choose(&mut self.rng).unwrap();
                if c < 0 {
                    format!("({c})")
                } else {
                    c.to_string()
                }
            }
        }
    }

    fn expr(&mut self, depth: u32) -> String {
        if depth == 0 || self.rng.gen_bool(0.3) {
            return self.leaf();
        }
        match self.rng.gen_range(0..10) {
            0 => {
                let op = ["-", "!", "~"].choose(&mut self.rng).unwrap();
                format!("{op}({})", self.expr(depth - 1))
            }
            1 => {
                let t = self.ty();
                format!("({t})({})", self.expr(depth - 1))
            }
            2 => format!("garr[({}) & 3]", self.expr(depth - 1)),
            3 => format!("rec.b[({}) & 1]", self.expr(depth - 1)),
            _ => {
                let op = BINOPS.choose(&mut self.rng).unwrap();
                format!("({} {op} {})", self.expr(depth - 1), self.expr(depth - 1))
            }
        }
    }

    fn block(&mut self, depth: u32, in_loop: bool, n: usize) {
        self.indent += 1;
        let (r, w) = (self.readable.len(), self.writable.len());
        for _ in 0..n {
            self.stmt(depth, in_loop);
        }
        self.readable.truncate(r);
        self.writable.truncate(w);
        self.indent -= 1;
    }

    fn stmt(&mut self, depth: u32, in_loop: bool) {
        let k = self.rng.gen_range(0..20);
        match k {
            0..=4 if !self.writable.is_empty() => {
                let v = self.writable.choose(&mut self.rng).unwrap().clone();
                let e = self.expr(2);
                let op = ["=", "=", "=", "+=", "^="].choose(&mut self.rng).unwrap();
                self.line(&format!("{v} {op} {e};"));
            }
            5 => {
                let i = if self.rng.gen_bool(0.85) { format!("({}) & 3", self.expr(1)) } else { self.expr(1) };
                let e = self.expr(2);
                self.line(&format!("garr[{i}] = {e};"));
            }
            6 => {
                let e = self.expr(2);
                let f = if self.rng.gen_bool(0.5) { "rec.a".to_string() } else { format!("rec.b[({}) & 1]", self.expr(1)) };
                self.line(&format!("{f} = {e};"));
            }
            7 | 8 if depth > 0 => {
                let c = self.expr(2);
                self.line(&format!("if ({c}) {{"));
                let n = self.rng.gen_range(1..3);
                self.block(depth - 1, in_loop, n);
                if self.rng.gen_bool(0.5) {
                    self.line("} else {");
                    let n = self.rng.gen_range(1..3);
                    self.block(depth - 1, in_loop, n);
                }
                self.line("}");
            }
            9 if depth > 0 => {
                let k = self.name("k");
                let t = ["u8", "i16", "u32"].choose(&mut self.rng).unwrap();
                let bound = self.rng.gen_range(1..4);
                self.line(&format!("for ({t} {k} = 0; {k} < {bound}; {k}++) {{"));
                self.readable.push(k);
                let n = self.rng.gen_range(1..3);
                self.block(depth - 1, true, n);
                self.readable.pop();
                self.line("}");
            }
            10 if depth > 0 => {
                let w = self.name("w");
                let bound = self.rng.gen_range(1..4);
                self.line(&format!("u8 {w} = 0;"));
                self.line(&format!("while ({w} < {bound}) {{"));
                self.indent += 1;
                self.line(&format!("{w}++;"));
                self.indent -= 1;
                self.readable.push(w.clone());
                let n = self.rng.gen_range(1..3);
                self.block(depth - 1, true, n);
                self.readable.pop();
                self.line("}");
                self.readable.push(w);
            }
            11 if in_loop => {
                let c = self.expr(1);
                self.line(&format!("if ({c}) {{ break; }}"));
            }
            12 | 13 => {
                let c = self.expr(2);
                self.line(&format!("//@ assert {c};"));
            }
            14 => {
                let e = self.expr(2);
                self.line(&format!("__print({e});"));
            }
            15 if self.in_main && !self.writable.is_empty() => {
                let v = self.writable.choose(&mut self.rng).unwrap().clone();
                let (a, b) = (self.expr(1), self.expr(1));
                self.line(&format!("{v} = helper({a}, {b});"));
            }
            16 if self.in_main => self.line("touch(&rec);"),
            17 => {
                let c = self.expr(1);
                if self.rng.gen_bool(0.3) {
                    self.line(&format!("if ({c}) {{ __countermeasure(); }}"));
                } else {
                    self.line(&format!("g1 = g1 + ({c});"));
                }
            }
            _ => {
                let t = self.ty();
                let v = self.name("v");
                let e = self.expr(2);
                self.line(&format!("{t} {v} = {e};"));
                self.readable.push(v.clone());
                self.writable.push(v);
            }
        }
    }
}

pub fn generate(seed: u64) -> GenProgram {
    let mut g = Gen {
        rng: StdRng::seed_from_u64(seed),
        out: String::new(),
        indent: 0,
        readable: Vec::new(),
        writable: Vec::new(),
        fresh: 0,
        in_main: false,
    };
    let mut domains = BTreeMap::new();
    let d0: Vec<i64> = (0..g.rng.gen_range(1..3)).map(|_| *[0, 1, 3, 200, 255].choose(&mut g.rng).unwrap()).collect();
    let d1: Vec<i64> = (0..g.rng.gen_range(1..3)).map(|_| *[-2, 0, 4, 1000, -30000].choose(&mut g.rng).unwrap()).collect();
    let fmt = |v: &[i64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
    g.line(&format!("//@ domain in0 = {{{}}};", fmt(&d0)));
    g.line(&format!("//@ domain in1 = {{{}}};", fmt(&d1)));
    domains.insert("in0".to_string(), d0);
    domains.insert("in1".to_string(), d1);
    g.line("struct S { u16 a; i8 b[2]; };");
    g.line("struct S rec;");
    g.line("u8 garr[4];");
    for k in 0..3 {
        let t = g.ty();
        let c = g.rng.gen_range(0..100);
        g.line(&format!("{t} g{k} = {c};"));
    }
    let globals = ["g0", "g1", "g2"].map(String::from);

    // helper(a, b): straight-line or one branch, returns a value
    let (ta, tb, tr) = (g.ty(), g.ty(), g.ty());
    g.line(&format!("{tr} helper({ta} a, {tb} b) {{"));
    g.readable = ["a", "b"].map(String::from).into_iter().chain(globals.clone()).collect();
    g.writable = vec!["a".into(), "b".into(), "g2".into()];
    g.block(1, false, 3);
    let r = g.expr(2);
    g.line(&format!("    return {r};"));
    g.line("}");

    g.line("void touch(struct S *p) {");
    g.readable = globals.to_vec();
    g.writable = vec![];
    let e = g.expr(2);
    g.line(&format!("    p->a = p->a + ({e});"));
    let e = g.expr(1);
    g.line(&format!("    p->b[p->a & 1] = {e};"));
    g.line("}");

    g.line("void main() {");
    g.in_main = true;
    g.readable = globals.to_vec();
    g.writable = globals.to_vec();
    let n = g.rng.gen_range(3..8);
    g.block(2, false, n);
    g.line("}");
    GenProgram { source: g.out, domains }
}
