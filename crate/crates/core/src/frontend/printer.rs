use std::fmt::Write;

use super::ast::*;

/// Canonical source text. Parsing the output yields the same program up to spans.
pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for r in &p.records {
        let _ = writeln!(out, "struct {} {{", r.name);
        for f in &r.fields {
            match f.ty {
                FieldType::Scalar(t) => {
                    let _ = writeln!(out, "    {t} {};", f.name);
                }
                FieldType::Array(t, n) => {
                    let _ = writeln!(out, "    {t} {}[{n}];", f.name);
                }
            }
        }
        out.push_str("};\n");
    }
    for (name, d) in &p.domains {
        match d {
            Domain::Values(vs) => {
                let vs: Vec<String> = vs.iter().map(|v| v.to_string()).collect();
                let _ = writeln!(out, "//@ domain {name} = {{{}}};", vs.join(", "));
            }
            Domain::Range(lo, hi) => {
                let _ = writeln!(out, "//@ domain {name} = {lo}..{hi};");
            }
        }
    }
    for g in &p.globals {
        let ext = if matches!(g.kind, GlobalKind::Fault(_)) { "extern " } else { "" };
        let decl = declarator(p, g.ty, &g.name);
        match g.init {
            Some(v) => {
                let _ = writeln!(out, "{ext}{decl} = {v};");
            }
            None => {
                let _ = writeln!(out, "{ext}{decl};");
            }
        }
    }
    for f in &p.functions {
        out.push('\n');
        let ret = f.ret.map(|t| t.name()).unwrap_or("void");
        let params: Vec<String> = f
            .params
            .iter()
            .map(|pa| match pa.ty {
                ParamType::Scalar(t) => format!("{t} {}", pa.name),
                ParamType::RecordPtr(r) => format!("struct {} *{}", p.records[r].name, pa.name),
                ParamType::ArrayRef(t, n) => format!("{t} {}[{n}]", pa.name),
            })
            .collect();
        let _ = writeln!(out, "{ret} {}({}) {{", f.name, params.join(", "));
        let pr = Printer { p, f };
        for s in &f.body.stmts {
            pr.stmt(&mut out, s, 1);
        }
        out.push_str("}\n");
    }
    out
}

fn declarator(p: &Program, ty: Type, name: &str) -> String {
    match ty {
        Type::Scalar(t) => format!("{t} {name}"),
        Type::Array(t, n) => format!("{t} {name}[{n}]"),
        Type::Record(r) => format!("struct {} {name}", p.records[r].name),
    }
}

struct Printer<'a> {
    p: &'a Program,
    f: &'a Function,
}

impl Printer<'_> {
    fn var_name(&self, v: VarRef) -> &str {
        match v {
            VarRef::Global(g) => &self.p.globals[g].name,
            VarRef::Slot(s) => self.f.slot_name(s),
        }
    }

    fn place(&self, pl: &Place) -> String {
        let mut s = self.var_name(pl.var).to_string();
        if let Some(fi) = pl.field {
            let rec = match pl.var {
                VarRef::Global(g) => self.p.globals[g].ty,
                VarRef::Slot(sl) => self.f.slot_type(sl),
            };
            let Type::Record(r) = rec else { unreachable!() };
            let arrow = matches!(pl.var, VarRef::Slot(sl) if self.f.slot_is_ref(sl));
            s.push_str(if arrow { "->" } else { "." });
            s.push_str(&self.p.records[r].fields[fi].name);
        }
        if let Some(i) = &pl.index {
            let _ = write!(s, "[{}]", self.expr(i));
        }
        s
    }

    pub fn expr(&self, e: &Expr) -> String {
        match &e.kind {
            ExprKind::Const(v) => v.to_string(),
            ExprKind::Load(pl) => self.place(pl),
            ExprKind::Input(n) => format!("__sym_input_{}(\"{n}\")", e.ty),
            ExprKind::Unary(op, a) => {
                let o = match op {
                    UnOp::Neg => "-",
                    UnOp::Not => "!",
                    UnOp::BitNot => "~",
                };
                // A literal directly after `-` would fold into a negative constant.
                if matches!(a.kind, ExprKind::Const(_)) {
                    format!("{o}({})", self.expr(a))
                } else {
                    format!("{o}{}", self.operand(a))
                }
            }
            ExprKind::Binary(op, a, b) => {
                format!("{} {} {}", self.operand(a), op.symbol(), self.operand(b))
            }
            ExprKind::Cast(a) => format!("({})({})", e.ty, self.expr(a)),
        }
    }

    fn operand(&self, e: &Expr) -> String {
        match &e.kind {
            ExprKind::Const(v) if *v >= 0 => self.expr(e),
            ExprKind::Load(_) | ExprKind::Input(_) => self.expr(e),
            _ => format!("({})", self.expr(e)),
        }
    }

    fn simple(&self, s: &Stmt) -> String {
        match &s.kind {
            StmtKind::Decl { slot, init } => {
                let d = declarator(self.p, self.f.slot_type(*slot), self.f.slot_name(*slot));
                match init {
                    Some(e) => format!("{d} = {}", self.expr(e)),
                    None => d,
                }
            }
            StmtKind::Assign { place, value } => format!("{} = {}", self.place(place), self.expr(value)),
            StmtKind::Increment { place, delta } => {
                format!("{}{}", self.place(place), if *delta > 0 { "++" } else { "--" })
            }
            _ => unreachable!("not a simple statement"),
        }
    }

    fn block(&self, out: &mut String, b: &Block, depth: usize) {
        for s in &b.stmts {
            self.stmt(out, s, depth);
        }
    }

    fn stmt(&self, out: &mut String, s: &Stmt, depth: usize) {
        let ind = "    ".repeat(depth);
        match &s.kind {
            StmtKind::Decl { .. } | StmtKind::Assign { .. } | StmtKind::Increment { .. } => {
                let _ = writeln!(out, "{ind}{};", self.simple(s));
            }
            StmtKind::Call { dest, func, args } => {
                let callee = &self.p.functions[*func];
                let args: Vec<String> = args
                    .iter()
                    .map(|a| match a {
                        Arg::Value(e) => self.expr(e),
                        Arg::Ref(v) => {
                            let ty = match v {
                                VarRef::Global(g) => self.p.globals[*g].ty,
                                VarRef::Slot(sl) => self.f.slot_type(*sl),
                            };
                            let by_ref = matches!(v, VarRef::Slot(sl) if self.f.slot_is_ref(*sl));
                            if matches!(ty, Type::Record(_)) && !by_ref {
                                format!("&{}", self.var_name(*v))
                            } else {
                                self.var_name(*v).to_string()
                            }
                        }
                    })
                    .collect();
                let lhs = dest.as_ref().map(|d| format!("{} = ", self.place(d))).unwrap_or_default();
                let _ = writeln!(out, "{ind}{lhs}{}({});", callee.name, args.join(", "));
            }
            StmtKind::If { cond, then_block, else_block } => {
                let _ = writeln!(out, "{ind}if ({}) {{", self.expr(cond));
                self.block(out, then_block, depth + 1);
                if let Some(e) = else_block {
                    let _ = writeln!(out, "{ind}}} else {{");
                    self.block(out, e, depth + 1);
                }
                let _ = writeln!(out, "{ind}}}");
            }
            StmtKind::While { cond, body } => {
                let _ = writeln!(out, "{ind}while ({}) {{", self.expr(cond));
                self.block(out, body, depth + 1);
                let _ = writeln!(out, "{ind}}}");
            }
            StmtKind::For { init, cond, step, body } => {
                let i = init.as_ref().map(|s| self.simple(s)).unwrap_or_default();
                let c = cond.as_ref().map(|c| self.expr(c)).unwrap_or_default();
                let st = step.as_ref().map(|s| self.simple(s)).unwrap_or_default();
                let _ = writeln!(out, "{ind}for ({i}; {c}; {st}) {{");
                self.block(out, body, depth + 1);
                let _ = writeln!(out, "{ind}}}");
            }
            StmtKind::Break => {
                let _ = writeln!(out, "{ind}break;");
            }
            StmtKind::Goto(l) => {
                let _ = writeln!(out, "{ind}goto {l};");
            }
            StmtKind::Label(l) => {
                let _ = writeln!(out, "{l}:");
            }
            StmtKind::Return(e) => match e {
                Some(e) => {
                    let _ = writeln!(out, "{ind}return {};", self.expr(e));
                }
                None => {
                    let _ = writeln!(out, "{ind}return;");
                }
            },
            StmtKind::Block(b) => {
                let _ = writeln!(out, "{ind}{{");
                self.block(out, b, depth + 1);
                let _ = writeln!(out, "{ind}}}");
            }
            StmtKind::Assert { origin, cond, .. } => match origin.tag() {
                Some(tag) => {
                    let _ = writeln!(out, "{ind}//@ assert rte: {tag}: {};", self.expr(cond));
                }
                None => {
                    let _ = writeln!(out, "{ind}//@ assert {};", self.expr(cond));
                }
            },
            StmtKind::Countermeasure => {
                let _ = writeln!(out, "{ind}__countermeasure();");
            }
            StmtKind::Print(e) => {
                let _ = writeln!(out, "{ind}__print({});", self.expr(e));
            }
        }
    }
}

/// Render an expression of function `f` as source text.
pub fn print_expr(p: &Program, f: usize, e: &Expr) -> String {
    Printer { p, f: &p.functions[f] }.expr(e)
}

pub fn print_place(p: &Program, f: usize, pl: &Place) -> String {
    Printer { p, f: &p.functions[f] }.place(pl)
}
