use std::collections::{BTreeMap, HashMap, HashSet};

use super::ast::*;
use super::lexer::{lex, preprocess, Tok, Token};
use super::{FrontendError, SourceUnit};

/// Untyped expression tree, checked against the current scope right after parsing.
#[derive(Debug, Clone)]
enum SExpr {
    Int(i64, Span),
    Name(String, Span),
    Str(String, Span),
    Unary(UnOp, Box<SExpr>, Span),
    Binary(BinOp, Box<SExpr>, Box<SExpr>, Span),
    Cast(ScalarType, Box<SExpr>, Span),
    Index(Box<SExpr>, Box<SExpr>, Span),
    Member(Box<SExpr>, String, bool, Span),
    AddrOf(Box<SExpr>, Span),
    Call(String, Vec<SExpr>, Span),
}

impl SExpr {
    fn span(&self) -> Span {
        match self {
            SExpr::Int(_, s)
            | SExpr::Name(_, s)
            | SExpr::Str(_, s)
            | SExpr::Unary(_, _, s)
            | SExpr::Binary(_, _, _, s)
            | SExpr::Cast(_, _, s)
            | SExpr::Index(_, _, s)
            | SExpr::Member(_, _, _, s)
            | SExpr::AddrOf(_, s)
            | SExpr::Call(_, _, s) => *s,
        }
    }

    /// Built from literals by operators that keep the type of their operands,
    /// so the whole subtree can be typed from context.
    fn is_literal(&self) -> bool {
        match self {
            SExpr::Int(..) => true,
            SExpr::Unary(op, a, _) => *op != UnOp::Not && a.is_literal(),
            SExpr::Binary(op, a, b, _) => {
                !op.is_comparison() && !op.is_logical() && a.is_literal() && b.is_literal()
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone)]
struct Signature {
    name: String,
    ret: Option<ScalarType>,
    params: Vec<Param>,
    body_start: usize,
    span: Span,
}

struct FnState {
    params: Vec<Param>,
    locals: Vec<Local>,
    scopes: Vec<HashMap<String, usize>>,
    labels: HashSet<String>,
    gotos: Vec<(String, Span)>,
    ret: Option<ScalarType>,
    loop_depth: usize,
}

enum Decl {
    Record(usize),
    Scalar(ScalarType),
    Void,
}

pub(super) struct Parser {
    toks: Vec<Token>,
    pos: usize,
    records: Vec<RecordDef>,
    record_names: HashMap<String, usize>,
    globals: Vec<Global>,
    sigs: Vec<Signature>,
    domains: BTreeMap<String, Domain>,
    next_assert: u32,
    f: Option<FnState>,
}

type PResult<T> = Result<T, FrontendError>;

pub(super) fn parse_unit(unit: &SourceUnit) -> PResult<Program> {
    let text = preprocess(&unit.text, &unit.flags)?;
    let toks = lex(&text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        records: Vec::new(),
        record_names: HashMap::new(),
        globals: Vec::new(),
        sigs: Vec::new(),
        domains: BTreeMap::new(),
        next_assert: 0,
        f: None,
    };
    p.headers()?;
    let mut functions = Vec::new();
    for i in 0..p.sigs.len() {
        functions.push(p.function_body(i)?);
    }
    // Number assertions in source order so printing and reparsing keeps ids stable.
    let mut next = 0;
    for f in &mut functions {
        visit_stmts_mut(&mut f.body, &mut |s| {
            if let StmtKind::Assert { id, .. } = &mut s.kind {
                *id = AssertId(next);
                next += 1;
            }
        });
    }
    let entry = functions.iter().position(|f| f.name == unit.entry);
    Ok(Program {
        records: p.records,
        globals: p.globals,
        functions,
        entry,
        domains: p.domains,
    })
}

fn fault_number(name: &str) -> Option<(u32, bool)> {
    let rest = name.strip_prefix("fault_")?;
    if let Some(n) = rest.strip_suffix("_counter") {
        if !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()) {
            return n.parse().ok().map(|n| (n, true));
        }
        return None;
    }
    if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
        return rest.parse().ok().map(|n| (n, false));
    }
    None
}

impl Parser {
    // ---- token helpers -------------------------------------------------

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{p}`")))
        }
    }

    fn is_ident(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == s)
    }

    fn ident(&mut self) -> PResult<(String, Span)> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok((s, span))
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn unexpected(&self, what: &str) -> FrontendError {
        let found = match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Str(s) => format!("\"{s}\""),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::AtAssert => "`//@ assert`".into(),
            Tok::AtDomain => "`//@ domain`".into(),
            Tok::AtEnd => "end of annotation".into(),
            Tok::Eof => "end of input".into(),
        };
        FrontendError::parse(self.span(), format!("expected {what}, found {found}"))
    }

    // ---- types -----------------------------------------------------------

    fn starts_type(&self) -> bool {
        match self.peek() {
            Tok::Ident(s) => {
                matches!(s.as_str(), "struct" | "unsigned" | "signed" | "void" | "const" | "static")
                    || ScalarType::from_name(s).is_some()
                    || self.record_names.contains_key(s)
            }
            _ => false,
        }
    }

    fn decl_type(&mut self) -> PResult<Decl> {
        while self.is_ident("const") || self.is_ident("static") || self.is_ident("volatile") {
            self.next();
        }
        let span = self.span();
        let (first, _) = self.ident()?;
        let t = match first.as_str() {
            "void" => Decl::Void,
            "struct" => {
                let (name, nspan) = self.ident()?;
                match self.record_names.get(&name) {
                    Some(&r) => Decl::Record(r),
                    None => {
                        return Err(FrontendError::ty(nspan, format!("unknown struct `{name}`")))
                    }
                }
            }
            "unsigned" | "signed" => {
                let next = match self.peek() {
                    Tok::Ident(s) if matches!(s.as_str(), "int" | "char" | "short" | "long") => {
                        let s = s.clone();
                        self.next();
                        s
                    }
                    _ => "int".to_string(),
                };
                let full = match (first.as_str(), next.as_str()) {
                    ("unsigned", "char") => "unsigned char",
                    ("unsigned", "short") => "unsigned short",
                    ("unsigned", _) => "unsigned",
                    ("signed", "char") => "signed char",
                    ("signed", "short") => "short",
                    _ => "int",
                };
                Decl::Scalar(ScalarType::from_name(full).unwrap())
            }
            other => {
                if let Some(t) = ScalarType::from_name(other) {
                    Decl::Scalar(t)
                } else if let Some(&r) = self.record_names.get(other) {
                    Decl::Record(r)
                } else {
                    return Err(FrontendError::parse(span, format!("unknown type `{other}`")));
                }
            }
        };
        while self.is_ident("const") {
            self.next();
        }
        Ok(t)
    }

    fn array_len(&mut self) -> PResult<u32> {
        let span = self.span();
        let e = self.expr()?;
        let v = const_eval(&e).ok_or_else(|| FrontendError::ty(span, "array length must be constant"))?;
        self.expect_punct("]")?;
        if v <= 0 || v > 1 << 20 {
            return Err(FrontendError::ty(span, format!("bad array length {v}")));
        }
        Ok(v as u32)
    }

    // ---- top level ---------------------------------------------------------

    fn headers(&mut self) -> PResult<()> {
        loop {
            match self.peek() {
                Tok::Eof => return Ok(()),
                Tok::AtDomain => self.domain_annotation()?,
                Tok::AtAssert => {
                    return Err(FrontendError::parse(self.span(), "assertion outside a function"))
                }
                Tok::Punct(";") => {
                    self.next();
                }
                _ => self.top_item()?,
            }
        }
    }

    fn domain_annotation(&mut self) -> PResult<()> {
        self.next();
        let (name, span) = self.ident()?;
        self.expect_punct("=")?;
        let dom = if self.eat_punct("{") {
            let mut vs = Vec::new();
            if !self.is_punct("}") {
                loop {
                    vs.push(self.const_int()?);
                    if !self.eat_punct(",") {
                        break;
                    }
                }
            }
            self.expect_punct("}")?;
            Domain::Values(vs)
        } else {
            let lo = self.const_int()?;
            self.expect_punct("..")?;
            let hi = self.const_int()?;
            Domain::Range(lo, hi)
        };
        self.eat_punct(";");
        if !matches!(self.peek(), Tok::AtEnd) {
            return Err(self.unexpected("end of annotation"));
        }
        self.next();
        if dom.is_empty() {
            return Err(FrontendError::ty(span, format!("empty domain for `{name}`")));
        }
        if self.domains.insert(name.clone(), dom).is_some() {
            return Err(FrontendError::ty(span, format!("duplicate domain for `{name}`")));
        }
        Ok(())
    }

    fn const_int(&mut self) -> PResult<i64> {
        let span = self.span();
        let e = self.unary()?;
        const_eval(&e).ok_or_else(|| FrontendError::ty(span, "expected constant"))
    }

    fn record_body(&mut self, name: String, span: Span) -> PResult<usize> {
        self.expect_punct("{")?;
        let mut fields: Vec<FieldDef> = Vec::new();
        while !self.eat_punct("}") {
            let fspan = self.span();
            let t = match self.decl_type()? {
                Decl::Scalar(t) => t,
                _ => return Err(FrontendError::ty(fspan, "record fields must be scalars or arrays")),
            };
            loop {
                let (fname, fs) = self.ident()?;
                let ty = if self.eat_punct("[") {
                    FieldType::Array(t, self.array_len()?)
                } else {
                    FieldType::Scalar(t)
                };
                if fields.iter().any(|f| f.name == fname) {
                    return Err(FrontendError::ty(fs, format!("duplicate field `{fname}`")));
                }
                fields.push(FieldDef { name: fname, ty });
                if !self.eat_punct(",") {
                    break;
                }
            }
            self.expect_punct(";")?;
        }
        if self.record_names.contains_key(&name) {
            return Err(FrontendError::ty(span, format!("duplicate struct `{name}`")));
        }
        self.records.push(RecordDef { name: name.clone(), fields });
        let id = self.records.len() - 1;
        self.record_names.insert(name, id);
        Ok(id)
    }

    fn top_item(&mut self) -> PResult<()> {
        let span = self.span();
        if self.is_ident("typedef") {
            self.next();
            if !self.is_ident("struct") {
                return Err(FrontendError::unsupported(span, "only struct typedefs are supported"));
            }
            self.next();
            let tag = if let Tok::Ident(_) = self.peek() { Some(self.ident()?.0) } else { None };
            let tmp = format!("#typedef{}", self.records.len());
            let id = self.record_body(tmp.clone(), span)?;
            let (alias, aspan) = self.ident()?;
            self.expect_punct(";")?;
            self.record_names.remove(&tmp);
            let canonical = tag.clone().unwrap_or_else(|| alias.clone());
            for n in [Some(alias), tag].into_iter().flatten() {
                if self.record_names.insert(n.clone(), id).is_some() {
                    return Err(FrontendError::ty(aspan, format!("duplicate struct `{n}`")));
                }
            }
            self.records[id].name = canonical;
            return Ok(());
        }
        if self.is_ident("struct") && matches!(self.peek_at(2), Tok::Punct("{")) {
            self.next();
            let (name, nspan) = self.ident()?;
            self.record_body(name, nspan)?;
            self.expect_punct(";")?;
            return Ok(());
        }
        let is_extern = if self.is_ident("extern") {
            self.next();
            true
        } else {
            false
        };
        let decl = self.decl_type()?;
        let (name, nspan) = self.ident()?;
        if self.is_punct("(") {
            return self.function_header(decl, name, nspan);
        }
        self.global_declarator(&decl, is_extern, name, nspan)?;
        while self.eat_punct(",") {
            let (n, s) = self.ident()?;
            self.global_declarator(&decl, is_extern, n, s)?;
        }
        self.expect_punct(";")
    }

    fn global_declarator(&mut self, decl: &Decl, is_extern: bool, name: String, span: Span) -> PResult<()> {
        if self.globals.iter().any(|g| g.name == name) {
            return Err(FrontendError::ty(span, format!("duplicate global `{name}`")));
        }
        let ty = match decl {
            Decl::Void => return Err(FrontendError::ty(span, "variable of type void")),
            Decl::Record(r) => Type::Record(*r),
            Decl::Scalar(t) => {
                if self.eat_punct("[") {
                    Type::Array(*t, self.array_len()?)
                } else {
                    Type::Scalar(*t)
                }
            }
        };
        let mut init = None;
        if self.eat_punct("=") {
            let ispan = self.span();
            let e = self.expr()?;
            let v = const_eval(&e)
                .ok_or_else(|| FrontendError::ty(ispan, "global initializer must be constant"))?;
            match ty {
                Type::Scalar(t) => init = Some(t.wrap(v as i128)),
                _ => return Err(FrontendError::unsupported(ispan, "aggregate initializers")),
            }
        }
        let kind = match fault_number(&name) {
            Some((n, false)) => {
                if !matches!(ty, Type::Scalar(_)) || init.is_some() {
                    return Err(FrontendError::ty(span, "fault variables are uninitialized scalars"));
                }
                GlobalKind::Fault(n)
            }
            Some((n, true)) => {
                if ty != Type::Scalar(ScalarType::U32) {
                    return Err(FrontendError::ty(span, "fault counters are u32"));
                }
                GlobalKind::Counter(n)
            }
            None => {
                if is_extern {
                    return Err(FrontendError::unsupported(span, "extern is reserved for fault variables"));
                }
                GlobalKind::User
            }
        };
        if matches!(kind, GlobalKind::Fault(_)) != is_extern {
            return Err(FrontendError::ty(span, format!("`{name}` must be declared extern")));
        }
        self.globals.push(Global { name, ty, init, kind, span });
        Ok(())
    }

    fn function_header(&mut self, decl: Decl, name: String, span: Span) -> PResult<()> {
        let ret = match decl {
            Decl::Void => None,
            Decl::Scalar(t) => Some(t),
            Decl::Record(_) => return Err(FrontendError::unsupported(span, "record return values")),
        };
        self.expect_punct("(")?;
        let mut params: Vec<Param> = Vec::new();
        if self.is_ident("void") && matches!(self.peek_at(1), Tok::Punct(")")) {
            self.next();
        }
        if !self.is_punct(")") {
            loop {
                let pspan = self.span();
                let d = self.decl_type()?;
                let ptr = self.eat_punct("*");
                let (pname, _) = self.ident()?;
                let ty = match d {
                    Decl::Void => return Err(FrontendError::ty(pspan, "void parameter")),
                    Decl::Record(r) => {
                        if !ptr {
                            return Err(FrontendError::unsupported(pspan, "records are passed by pointer"));
                        }
                        ParamType::RecordPtr(r)
                    }
                    Decl::Scalar(t) => {
                        if ptr {
                            return Err(FrontendError::unsupported(pspan, "scalar pointers"));
                        }
                        if self.eat_punct("[") {
                            ParamType::ArrayRef(t, self.array_len()?)
                        } else {
                            ParamType::Scalar(t)
                        }
                    }
                };
                if params.iter().any(|p| p.name == pname) {
                    return Err(FrontendError::ty(pspan, format!("duplicate parameter `{pname}`")));
                }
                params.push(Param { name: pname, ty });
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        if self.eat_punct(";") {
            // Prototype; the definition supplies the signature.
            return Ok(());
        }
        if !self.is_punct("{") {
            return Err(self.unexpected("`{` or `;`"));
        }
        if self.sigs.iter().any(|s| s.name == name) {
            return Err(FrontendError::ty(span, format!("duplicate function `{name}`")));
        }
        let body_start = self.pos;
        let mut depth = 0usize;
        loop {
            match self.peek() {
                Tok::Punct("{") => depth += 1,
                Tok::Punct("}") => {
                    depth -= 1;
                    if depth == 0 {
                        self.next();
                        break;
                    }
                }
                Tok::Eof => return Err(FrontendError::parse(span, "unterminated function body")),
                _ => {}
            }
            self.next();
        }
        self.sigs.push(Signature { name, ret, params, body_start, span });
        Ok(())
    }

    // ---- function bodies ------------------------------------------------------

    fn function_body(&mut self, i: usize) -> PResult<Function> {
        let sig = self.sigs[i].clone();
        self.pos = sig.body_start;
        self.f = Some(FnState {
            params: sig.params.clone(),
            locals: Vec::new(),
            scopes: vec![HashMap::new()],
            labels: HashSet::new(),
            gotos: Vec::new(),
            ret: sig.ret,
            loop_depth: 0,
        });
        let body = self.block()?;
        let st = self.f.take().unwrap();
        for (l, s) in &st.gotos {
            if !st.labels.contains(l) {
                return Err(FrontendError::ty(*s, format!("undefined label `{l}`")));
            }
        }
        Ok(Function {
            name: sig.name,
            ret: sig.ret,
            params: st.params,
            locals: st.locals,
            body,
            span: sig.span,
        })
    }

    fn fs(&mut self) -> &mut FnState {
        self.f.as_mut().unwrap()
    }

    fn block(&mut self) -> PResult<Block> {
        self.expect_punct("{")?;
        self.fs().scopes.push(HashMap::new());
        let mut stmts = Vec::new();
        while !self.eat_punct("}") {
            if matches!(self.peek(), Tok::Eof) {
                return Err(self.unexpected("`}`"));
            }
            self.statement(&mut stmts)?;
        }
        self.fs().scopes.pop();
        Ok(Block { stmts })
    }

    /// Body of `if`/`while`/`for`: a block or a single statement.
    fn body(&mut self) -> PResult<Block> {
        if self.is_punct("{") {
            return self.block();
        }
        self.fs().scopes.push(HashMap::new());
        let mut stmts = Vec::new();
        self.statement(&mut stmts)?;
        self.fs().scopes.pop();
        Ok(Block { stmts })
    }

    fn declare_local(&mut self, name: String, ty: Type, span: Span) -> PResult<usize> {
        let st = self.fs();
        if st.params.iter().any(|p| p.name == name) || st.scopes.iter().any(|s| s.contains_key(&name)) {
            return Err(FrontendError::ty(span, format!("duplicate or shadowing declaration `{name}`")));
        }
        st.locals.push(Local { name: name.clone(), ty });
        let slot = st.params.len() + st.locals.len() - 1;
        st.scopes.last_mut().unwrap().insert(name, slot);
        Ok(slot)
    }

    fn new_assert_id(&mut self) -> AssertId {
        let id = AssertId(self.next_assert);
        self.next_assert += 1;
        id
    }

    /// Push `stmt` preceded by its runtime-error assertions, unless those are already present.
    fn emit(&mut self, out: &mut Vec<Stmt>, stmt: Stmt, rte: Vec<(AssertOrigin, Expr)>) {
        let n = rte.len();
        let already = n > 0
            && out.len() >= n
            && out[out.len() - n..].iter().zip(&rte).all(|(s, (o, c))| {
                matches!(&s.kind, StmtKind::Assert { origin, cond, .. }
                    if origin == o && strip_spans(cond) == strip_spans(c))
            });
        if !already {
            for (origin, cond) in rte {
                let id = self.new_assert_id();
                out.push(Stmt::new(StmtKind::Assert { id, origin, cond }, stmt.span));
            }
        }
        out.push(stmt);
    }

    fn statement(&mut self, out: &mut Vec<Stmt>) -> PResult<()> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Punct("{") => {
                let b = self.block()?;
                out.push(Stmt::new(StmtKind::Block(b), span));
            }
            Tok::Punct(";") => {
                self.next();
            }
            Tok::AtAssert => {
                self.next();
                let mut origin = AssertOrigin::User;
                if self.is_ident("rte") && matches!(self.peek_at(1), Tok::Punct(":")) {
                    self.next();
                    self.next();
                    let (tag, tspan) = self.ident()?;
                    origin = match tag.as_str() {
                        "index_bound" => AssertOrigin::IndexBound,
                        "mem_access" => AssertOrigin::MemAccess,
                        _ => return Err(FrontendError::parse(tspan, format!("unknown rte tag `{tag}`"))),
                    };
                    self.expect_punct(":")?;
                }
                let e = self.expr()?;
                let cond = self.check(&e, None)?;
                self.expect_punct(";")?;
                if !matches!(self.peek(), Tok::AtEnd) {
                    return Err(self.unexpected("end of annotation"));
                }
                self.next();
                let id = self.new_assert_id();
                out.push(Stmt::new(StmtKind::Assert { id, origin, cond }, span));
            }
            Tok::AtDomain => {
                return Err(FrontendError::parse(span, "domain annotations must be at top level"))
            }
            Tok::Ident(kw) => match kw.as_str() {
                "if" => {
                    self.next();
                    self.expect_punct("(")?;
                    let c = self.expr()?;
                    self.expect_punct(")")?;
                    let cond = self.check(&c, None)?;
                    let rte = self.rte(&[&cond], None);
                    let then_block = self.body()?;
                    let else_block = if self.is_ident("else") {
                        self.next();
                        Some(self.body()?)
                    } else {
                        None
                    };
                    self.emit(out, Stmt::new(StmtKind::If { cond, then_block, else_block }, span), rte);
                }
                "while" => {
                    self.next();
                    self.expect_punct("(")?;
                    let c = self.expr()?;
                    self.expect_punct(")")?;
                    let cond = self.check(&c, None)?;
                    self.fs().loop_depth += 1;
                    let body = self.body()?;
                    self.fs().loop_depth -= 1;
                    out.push(Stmt::new(StmtKind::While { cond, body }, span));
                }
                "for" => self.for_stmt(out, span)?,
                "break" => {
                    self.next();
                    self.expect_punct(";")?;
                    if self.fs().loop_depth == 0 {
                        return Err(FrontendError::ty(span, "break outside a loop"));
                    }
                    out.push(Stmt::new(StmtKind::Break, span));
                }
                "continue" => return Err(FrontendError::unsupported(span, "continue")),
                "goto" => {
                    self.next();
                    let (l, ls) = self.ident()?;
                    self.expect_punct(";")?;
                    self.fs().gotos.push((l.clone(), ls));
                    out.push(Stmt::new(StmtKind::Goto(l), span));
                }
                "return" => {
                    self.next();
                    let ret = self.fs().ret;
                    let value = if self.eat_punct(";") {
                        if ret.is_some() {
                            return Err(FrontendError::ty(span, "missing return value"));
                        }
                        None
                    } else {
                        let e = self.expr()?;
                        self.expect_punct(";")?;
                        let t = ret.ok_or_else(|| FrontendError::ty(span, "return value in void function"))?;
                        let v = self.check(&e, Some(t))?;
                        Some(convert(v, t))
                    };
                    let rte = match &value {
                        Some(v) => self.rte(&[v], None),
                        None => Vec::new(),
                    };
                    self.emit(out, Stmt::new(StmtKind::Return(value), span), rte);
                }
                _ if matches!(self.peek_at(1), Tok::Punct(":")) => {
                    let (l, ls) = self.ident()?;
                    self.next();
                    if !self.fs().labels.insert(l.clone()) {
                        return Err(FrontendError::ty(ls, format!("duplicate label `{l}`")));
                    }
                    out.push(Stmt::new(StmtKind::Label(l), span));
                }
                _ if self.starts_type() => {
                    self.declaration(out)?;
                    self.expect_punct(";")?;
                }
                _ => {
                    self.simple_statement(out)?;
                    self.expect_punct(";")?;
                }
            },
            _ => {
                self.simple_statement(out)?;
                self.expect_punct(";")?;
            }
        }
        Ok(())
    }

    fn for_stmt(&mut self, out: &mut Vec<Stmt>, span: Span) -> PResult<()> {
        self.next();
        self.expect_punct("(")?;
        self.fs().scopes.push(HashMap::new());
        // The init statement is parsed straight into `out` so that its
        // runtime-error assertions land (and are deduplicated) before the loop.
        let before = out.len();
        if !self.is_punct(";") {
            if self.starts_type() {
                self.declaration(out)?;
            } else {
                self.simple_statement(out)?;
            }
        }
        let init = if out.len() > before {
            let s = out.pop().unwrap();
            if matches!(s.kind, StmtKind::Call { .. } | StmtKind::Assert { .. }) {
                return Err(FrontendError::unsupported(s.span, "call in for init"));
            }
            Some(Box::new(s))
        } else {
            None
        };
        self.expect_punct(";")?;
        let cond = if self.is_punct(";") {
            None
        } else {
            let c = self.expr()?;
            Some(self.check(&c, None)?)
        };
        self.expect_punct(";")?;
        let mut post = Vec::new();
        if !self.is_punct(")") {
            self.simple_statement(&mut post)?;
        }
        self.expect_punct(")")?;
        if post.len() > 1 || post.iter().any(|s| matches!(s.kind, StmtKind::Call { .. })) {
            return Err(FrontendError::unsupported(span, "for step must be a plain assignment"));
        }
        let step = post.pop().map(Box::new);
        self.fs().loop_depth += 1;
        let body = self.body()?;
        self.fs().loop_depth -= 1;
        self.fs().scopes.pop();
        out.push(Stmt::new(StmtKind::For { init, cond, step, body }, span));
        Ok(())
    }

    fn declaration(&mut self, out: &mut Vec<Stmt>) -> PResult<()> {
        let dspan = self.span();
        let decl = self.decl_type()?;
        loop {
            let (name, nspan) = self.ident()?;
            let ty = match &decl {
                Decl::Void => return Err(FrontendError::ty(dspan, "variable of type void")),
                Decl::Record(r) => Type::Record(*r),
                Decl::Scalar(t) => {
                    if self.eat_punct("[") {
                        Type::Array(*t, self.array_len()?)
                    } else {
                        Type::Scalar(*t)
                    }
                }
            };
            if self.eat_punct("=") {
                let t = match ty {
                    Type::Scalar(t) => t,
                    _ => return Err(FrontendError::unsupported(nspan, "aggregate initializers")),
                };
                let e = self.expr()?;
                let slot = self.declare_local(name, ty, nspan)?;
                if let SExpr::Call(f, args, cspan) = &e {
                    if !f.starts_with("__") {
                        out.push(Stmt::new(StmtKind::Decl { slot, init: None }, nspan));
                        let dest = Place::var(VarRef::Slot(slot));
                        self.call(out, Some(dest), f, args, *cspan)?;
                        if !self.eat_punct(",") {
                            return Ok(());
                        }
                        continue;
                    }
                }
                let v = self.check(&e, Some(t))?;
                let v = convert(v, t);
                let rte = self.rte(&[&v], None);
                self.emit(out, Stmt::new(StmtKind::Decl { slot, init: Some(v) }, nspan), rte);
            } else {
                let slot = self.declare_local(name, ty, nspan)?;
                out.push(Stmt::new(StmtKind::Decl { slot, init: None }, nspan));
            }
            if !self.eat_punct(",") {
                return Ok(());
            }
        }
    }

    /// Assignment, increment or call, without the trailing `;`.
    fn simple_statement(&mut self, out: &mut Vec<Stmt>) -> PResult<()> {
        let span = self.span();
        if self.is_punct("++") || self.is_punct("--") {
            let delta = if self.next().tok == Tok::Punct("++") { 1 } else { -1 };
            let target = self.unary()?;
            let place = self.place(&target)?;
            let rte = self.rte(&[], Some(&place));
            self.emit(out, Stmt::new(StmtKind::Increment { place, delta }, span), rte);
            return Ok(());
        }
        let lhs = self.unary()?;
        if let SExpr::Call(f, args, cspan) = &lhs {
            return match f.as_str() {
                "__assert" => {
                    let [a] = args.as_slice() else {
                        return Err(FrontendError::ty(*cspan, "__assert takes one argument"));
                    };
                    let cond = self.check(a, None)?;
                    let id = self.new_assert_id();
                    out.push(Stmt::new(StmtKind::Assert { id, origin: AssertOrigin::User, cond }, span));
                    Ok(())
                }
                "__countermeasure" => {
                    if !args.is_empty() {
                        return Err(FrontendError::ty(*cspan, "__countermeasure takes no arguments"));
                    }
                    out.push(Stmt::new(StmtKind::Countermeasure, span));
                    Ok(())
                }
                "__print" => {
                    let [a] = args.as_slice() else {
                        return Err(FrontendError::ty(*cspan, "__print takes one argument"));
                    };
                    let e = self.check(a, None)?;
                    let rte = self.rte(&[&e], None);
                    self.emit(out, Stmt::new(StmtKind::Print(e), span), rte);
                    Ok(())
                }
                _ => self.call(out, None, f, args, *cspan),
            };
        }
        let op = match self.peek() {
            Tok::Punct(p) => *p,
            _ => return Err(self.unexpected("assignment")),
        };
        let place = self.place(&lhs)?;
        let pty = self.place_type(&place);
        match op {
            "++" | "--" => {
                self.next();
                let rte = self.rte(&[], Some(&place));
                let delta = if op == "++" { 1 } else { -1 };
                self.emit(out, Stmt::new(StmtKind::Increment { place, delta }, span), rte);
            }
            "=" => {
                self.next();
                let rhs = self.expr()?;
                if let SExpr::Call(f, args, cspan) = &rhs {
                    if !f.starts_with("__") {
                        return self.call(out, Some(place), f, args, *cspan);
                    }
                }
                let v = convert(self.check(&rhs, Some(pty))?, pty);
                let rte = self.rte(&[&v], Some(&place));
                self.emit(out, Stmt::new(StmtKind::Assign { place, value: v }, span), rte);
            }
            "+=" | "-=" | "*=" | "/=" | "%=" | "&=" | "|=" | "^=" | "<<=" | ">>=" => {
                self.next();
                let bop = match op {
                    "+=" => BinOp::Add,
                    "-=" => BinOp::Sub,
                    "*=" => BinOp::Mul,
                    "/=" => BinOp::Div,
                    "%=" => BinOp::Rem,
                    "&=" => BinOp::And,
                    "|=" => BinOp::Or,
                    "^=" => BinOp::Xor,
                    "<<=" => BinOp::Shl,
                    _ => BinOp::Shr,
                };
                let rhs = self.expr()?;
                let full = SExpr::Binary(bop, Box::new(lhs.clone()), Box::new(rhs), span);
                let v = convert(self.check(&full, Some(pty))?, pty);
                let rte = self.rte(&[&v], Some(&place));
                self.emit(out, Stmt::new(StmtKind::Assign { place, value: v }, span), rte);
            }
            _ => return Err(self.unexpected("assignment")),
        }
        Ok(())
    }

    fn call(&mut self, out: &mut Vec<Stmt>, dest: Option<Place>, f: &str, args: &[SExpr], span: Span) -> PResult<()> {
        let fi = self
            .sigs
            .iter()
            .position(|s| s.name == f)
            .ok_or_else(|| FrontendError::ty(span, format!("unknown function `{f}`")))?;
        let sig = self.sigs[fi].clone();
        if sig.params.len() != args.len() {
            return Err(FrontendError::ty(
                span,
                format!("`{f}` expects {} arguments, got {}", sig.params.len(), args.len()),
            ));
        }
        if dest.is_some() && sig.ret.is_none() {
            return Err(FrontendError::ty(span, format!("`{f}` returns no value")));
        }
        let mut targs = Vec::new();
        let mut vals = Vec::new();
        for (p, a) in sig.params.iter().zip(args) {
            match p.ty {
                ParamType::Scalar(t) => {
                    let v = convert(self.check(a, Some(t))?, t);
                    vals.push(v.clone());
                    targs.push(Arg::Value(v));
                }
                pt => {
                    let (name, nspan, addr) = match a {
                        SExpr::AddrOf(inner, _) => match inner.as_ref() {
                            SExpr::Name(n, s) => (n.clone(), *s, true),
                            _ => return Err(FrontendError::unsupported(a.span(), "address of non-variable")),
                        },
                        SExpr::Name(n, s) => (n.clone(), *s, false),
                        _ => return Err(FrontendError::ty(a.span(), "expected a variable passed by reference")),
                    };
                    let var = self.resolve(&name, nspan)?;
                    let (vty, is_ref) = self.var_info(var);
                    let ok = match (pt, vty) {
                        (ParamType::RecordPtr(r), Type::Record(r2)) => r == r2 && (addr != is_ref),
                        (ParamType::ArrayRef(t, n), Type::Array(t2, n2)) => t == t2 && n == n2 && !addr,
                        _ => false,
                    };
                    if !ok {
                        return Err(FrontendError::ty(a.span(), format!("argument type mismatch for `{}`", p.name)));
                    }
                    targs.push(Arg::Ref(var));
                }
            }
        }
        let refs: Vec<&Expr> = vals.iter().collect();
        let rte = self.rte(&refs, dest.as_ref());
        self.emit(out, Stmt::new(StmtKind::Call { dest, func: fi, args: targs }, span), rte);
        Ok(())
    }

    // ---- expressions ------------------------------------------------------------

    fn expr(&mut self) -> PResult<SExpr> {
        self.binary(1)
    }

    fn binop_info(&self) -> Option<(BinOp, u8)> {
        let p = match self.peek() {
            Tok::Punct(p) => *p,
            _ => return None,
        };
        Some(match p {
            "||" => (BinOp::LogOr, 1),
            "&&" => (BinOp::LogAnd, 2),
            "|" => (BinOp::Or, 3),
            "^" => (BinOp::Xor, 4),
            "&" => (BinOp::And, 5),
            "==" => (BinOp::Eq, 6),
            "!=" => (BinOp::Ne, 6),
            "<" => (BinOp::Lt, 7),
            "<=" => (BinOp::Le, 7),
            ">" => (BinOp::Gt, 7),
            ">=" => (BinOp::Ge, 7),
            "<<" => (BinOp::Shl, 8),
            ">>" => (BinOp::Shr, 8),
            "+" => (BinOp::Add, 9),
            "-" => (BinOp::Sub, 9),
            "*" => (BinOp::Mul, 10),
            "/" => (BinOp::Div, 10),
            "%" => (BinOp::Rem, 10),
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<SExpr> {
        let mut lhs = self.unary()?;
        while let Some((op, prec)) = self.binop_info() {
            if prec < min_prec {
                break;
            }
            let span = self.span();
            self.next();
            let rhs = self.binary(prec + 1)?;
            lhs = SExpr::Binary(op, Box::new(lhs), Box::new(rhs), span);
        }
        Ok(lhs)
    }

    fn is_cast(&self) -> bool {
        if !self.is_punct("(") {
            return false;
        }
        match self.peek_at(1) {
            Tok::Ident(s) => {
                matches!(s.as_str(), "unsigned" | "signed" | "const") || ScalarType::from_name(s).is_some()
            }
            _ => false,
        }
    }

    fn unary(&mut self) -> PResult<SExpr> {
        let span = self.span();
        if self.is_cast() {
            self.next();
            let t = match self.decl_type()? {
                Decl::Scalar(t) => t,
                _ => return Err(FrontendError::unsupported(span, "non-scalar cast")),
            };
            self.expect_punct(")")?;
            let e = self.unary()?;
            return Ok(SExpr::Cast(t, Box::new(e), span));
        }
        let op = match self.peek() {
            Tok::Punct("-") => Some(UnOp::Neg),
            Tok::Punct("!") => Some(UnOp::Not),
            Tok::Punct("~") => Some(UnOp::BitNot),
            Tok::Punct("+") => {
                self.next();
                return self.unary();
            }
            Tok::Punct("&") => {
                self.next();
                let e = self.unary()?;
                return Ok(SExpr::AddrOf(Box::new(e), span));
            }
            _ => None,
        };
        if let Some(op) = op {
            self.next();
            if op == UnOp::Neg {
                if let Tok::Int(v) = *self.peek() {
                    self.next();
                    return self.postfix(SExpr::Int(-v, span));
                }
            }
            let e = self.unary()?;
            return Ok(SExpr::Unary(op, Box::new(e), span));
        }
        let primary = self.primary()?;
        self.postfix(primary)
    }

    fn primary(&mut self) -> PResult<SExpr> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.next();
                Ok(SExpr::Int(v, span))
            }
            Tok::Str(s) => {
                self.next();
                Ok(SExpr::Str(s, span))
            }
            Tok::Ident(name) => {
                self.next();
                if name == "true" || name == "false" {
                    return Ok(SExpr::Int((name == "true") as i64, span));
                }
                if self.eat_punct("(") {
                    let mut args = Vec::new();
                    if !self.is_punct(")") {
                        loop {
                            args.push(self.expr()?);
                            if !self.eat_punct(",") {
                                break;
                            }
                        }
                    }
                    self.expect_punct(")")?;
                    return Ok(SExpr::Call(name, args, span));
                }
                Ok(SExpr::Name(name, span))
            }
            Tok::Punct("(") => {
                self.next();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            _ => Err(self.unexpected("expression")),
        }
    }

    fn postfix(&mut self, mut e: SExpr) -> PResult<SExpr> {
        loop {
            let span = self.span();
            if self.eat_punct("[") {
                let i = self.expr()?;
                self.expect_punct("]")?;
                e = SExpr::Index(Box::new(e), Box::new(i), span);
            } else if self.is_punct(".") || self.is_punct("->") {
                let arrow = self.next().tok == Tok::Punct("->");
                let (f, _) = self.ident()?;
                e = SExpr::Member(Box::new(e), f, arrow, span);
            } else {
                return Ok(e);
            }
        }
    }

    // ---- checking ------------------------------------------------------------------

    fn resolve(&self, name: &str, span: Span) -> PResult<VarRef> {
        if let Some(st) = &self.f {
            for s in st.scopes.iter().rev() {
                if let Some(&slot) = s.get(name) {
                    return Ok(VarRef::Slot(slot));
                }
            }
            if let Some(i) = st.params.iter().position(|p| p.name == name) {
                return Ok(VarRef::Slot(i));
            }
        }
        if let Some(g) = self.globals.iter().position(|g| g.name == name) {
            return Ok(VarRef::Global(g));
        }
        Err(FrontendError::ty(span, format!("unknown variable `{name}`")))
    }

    /// Object type and whether the variable is a by-reference parameter.
    fn var_info(&self, v: VarRef) -> (Type, bool) {
        match v {
            VarRef::Global(g) => (self.globals[g].ty, false),
            VarRef::Slot(s) => {
                let st = self.f.as_ref().unwrap();
                if s < st.params.len() {
                    (st.params[s].ty.object_type(), st.params[s].ty.is_ref())
                } else {
                    (st.locals[s - st.params.len()].ty, false)
                }
            }
        }
    }

    fn place_type(&self, p: &Place) -> ScalarType {
        let (ty, _) = self.var_info(p.var);
        match (ty, p.field) {
            (Type::Scalar(t), _) | (Type::Array(t, _), _) => t,
            (Type::Record(r), Some(f)) => self.records[r].fields[f].ty.elem(),
            (Type::Record(_), None) => unreachable!("record place without field"),
        }
    }

    fn place(&mut self, e: &SExpr) -> PResult<Place> {
        let span = e.span();
        let (base, index) = match e {
            SExpr::Index(b, i, _) => (b.as_ref(), Some(i.as_ref())),
            other => (other, None),
        };
        let (var, field, shape) = match base {
            SExpr::Name(n, s) => {
                let v = self.resolve(n, *s)?;
                let (ty, _) = self.var_info(v);
                let shape = match ty {
                    Type::Scalar(_) => None,
                    Type::Array(_, n) => Some(n),
                    Type::Record(_) => {
                        return Err(FrontendError::ty(span, format!("record `{n}` used as a value")))
                    }
                };
                (v, None, shape)
            }
            SExpr::Member(b, fname, arrow, _) => {
                let SExpr::Name(n, s) = b.as_ref() else {
                    return Err(FrontendError::unsupported(span, "nested member access"));
                };
                let v = self.resolve(n, *s)?;
                let (ty, is_ref) = self.var_info(v);
                let Type::Record(r) = ty else {
                    return Err(FrontendError::ty(span, format!("`{n}` is not a record")));
                };
                if *arrow != is_ref {
                    return Err(FrontendError::ty(
                        span,
                        if *arrow { "`->` on a non-pointer" } else { "`.` on a pointer" },
                    ));
                }
                let fi = self.records[r]
                    .field_index(fname)
                    .ok_or_else(|| FrontendError::ty(span, format!("no field `{fname}`")))?;
                let shape = match self.records[r].fields[fi].ty {
                    FieldType::Scalar(_) => None,
                    FieldType::Array(_, n) => Some(n),
                };
                (v, Some(fi), shape)
            }
            _ => return Err(FrontendError::ty(span, "expression is not assignable")),
        };
        let index = match (index, shape) {
            (Some(i), Some(_)) => Some(Box::new(self.check(i, Some(ScalarType::U32))?)),
            (None, None) => None,
            (Some(_), None) => return Err(FrontendError::ty(span, "subscript of a scalar")),
            (None, Some(_)) => return Err(FrontendError::ty(span, "array used as a value")),
        };
        Ok(Place { var, field, index })
    }

    fn check(&mut self, e: &SExpr, hint: Option<ScalarType>) -> PResult<Expr> {
        let span = e.span();
        Ok(match e {
            SExpr::Int(v, _) => {
                let t = hint.unwrap_or(ScalarType::I32);
                Expr::new(ExprKind::Const(t.wrap(*v as i128)), t, span)
            }
            SExpr::Str(..) => return Err(FrontendError::ty(span, "string outside __sym_input")),
            SExpr::AddrOf(..) => return Err(FrontendError::unsupported(span, "address-of outside call arguments")),
            SExpr::Name(..) | SExpr::Index(..) | SExpr::Member(..) => {
                let p = self.place(e)?;
                let t = self.place_type(&p);
                Expr::new(ExprKind::Load(p), t, span)
            }
            SExpr::Call(f, args, _) => {
                let Some(tname) = f.strip_prefix("__sym_input_") else {
                    return Err(FrontendError::unsupported(span, format!("call to `{f}` inside an expression")));
                };
                let t = ScalarType::from_name(tname)
                    .ok_or_else(|| FrontendError::ty(span, format!("unknown input type `{tname}`")))?;
                let [SExpr::Str(name, _)] = args.as_slice() else {
                    return Err(FrontendError::ty(span, "symbolic inputs take one string name"));
                };
                Expr::new(ExprKind::Input(name.clone()), t, span)
            }
            SExpr::Cast(t, inner, _) => {
                let a = self.check(inner, None)?;
                Expr::new(ExprKind::Cast(Box::new(a)), *t, span)
            }
            SExpr::Unary(op, inner, _) => match op {
                UnOp::Not => {
                    let a = self.check(inner, None)?;
                    Expr::new(ExprKind::Unary(*op, Box::new(a)), ScalarType::U8, span)
                }
                _ => {
                    let a = self.check(inner, hint)?;
                    let t = a.ty;
                    Expr::new(ExprKind::Unary(*op, Box::new(a)), t, span)
                }
            },
            SExpr::Binary(op, l, r, _) => {
                if op.is_logical() {
                    let a = self.check(l, None)?;
                    let b = self.check(r, None)?;
                    return Ok(Expr::new(ExprKind::Binary(*op, Box::new(a), Box::new(b)), ScalarType::U8, span));
                }
                let h = if op.is_comparison() { None } else { hint };
                let (a, b) = match (l.is_literal(), r.is_literal()) {
                    (true, false) => {
                        let b = self.check(r, h)?;
                        (self.check(l, Some(b.ty))?, b)
                    }
                    (false, true) => {
                        let a = self.check(l, h)?;
                        let b = self.check(r, Some(a.ty))?;
                        (a, b)
                    }
                    _ => (self.check(l, h)?, self.check(r, h)?),
                };
                let t = unify(a.ty, b.ty);
                let (a, b) = (convert(a, t), convert(b, t));
                let rt = if op.is_comparison() { ScalarType::U8 } else { t };
                Expr::new(ExprKind::Binary(*op, Box::new(a), Box::new(b)), rt, span)
            }
        })
    }

    // ---- runtime-error assertions ----------------------------------------------------

    fn rte(&self, exprs: &[&Expr], written: Option<&Place>) -> Vec<(AssertOrigin, Expr)> {
        let mut out: Vec<(AssertOrigin, Expr)> = Vec::new();
        let push = |o: AssertOrigin, c: Expr, out: &mut Vec<(AssertOrigin, Expr)>| {
            if !out.iter().any(|(o2, c2)| *o2 == o && strip_spans(c2) == strip_spans(&c)) {
                out.push((o, c));
            }
        };
        for e in exprs {
            let mut accesses = Vec::new();
            collect_accesses(e, &mut accesses);
            for p in accesses {
                for (o, c) in self.access_checks(p, true) {
                    push(o, c, &mut out);
                }
            }
        }
        if let Some(p) = written {
            if let Some(i) = &p.index {
                let mut accesses = Vec::new();
                collect_accesses(i, &mut accesses);
                for q in accesses {
                    for (o, c) in self.access_checks(q, true) {
                        push(o, c, &mut out);
                    }
                }
            }
            for (o, c) in self.access_checks(p, false) {
                push(o, c, &mut out);
            }
        }
        out
    }

    fn access_checks(&self, p: &Place, read: bool) -> Vec<(AssertOrigin, Expr)> {
        let Some(idx) = &p.index else { return Vec::new() };
        let (ty, is_ref) = self.var_info(p.var);
        let len = match (ty, p.field) {
            (Type::Array(_, n), _) => n,
            (Type::Record(r), Some(f)) => match self.records[r].fields[f].ty {
                FieldType::Array(_, n) => n,
                FieldType::Scalar(_) => return Vec::new(),
            },
            _ => return Vec::new(),
        };
        let Some(cond) = bound_check(idx, len) else { return Vec::new() };
        let mut v = vec![(AssertOrigin::IndexBound, cond.clone())];
        if read && is_ref {
            v.push((AssertOrigin::MemAccess, cond));
        }
        v
    }
}

/// Array accesses evaluated unconditionally by `e` (the right operand of
/// `&&`/`||` is skipped).
fn collect_accesses<'a>(e: &'a Expr, out: &mut Vec<&'a Place>) {
    match &e.kind {
        ExprKind::Const(_) | ExprKind::Input(_) => {}
        ExprKind::Load(p) => {
            if let Some(i) = &p.index {
                collect_accesses(i, out);
                out.push(p);
            }
        }
        ExprKind::Unary(_, a) | ExprKind::Cast(a) => collect_accesses(a, out),
        ExprKind::Binary(op, a, b) => {
            collect_accesses(a, out);
            if !op.is_logical() {
                collect_accesses(b, out);
            }
        }
    }
}

/// `idx < len` (and `0 <= idx` for signed indices); `None` when vacuous.
/// Value of an expression built only from literals.
fn fold_const(e: &Expr) -> Option<i64> {
    use crate::semantics;
    Some(match &e.kind {
        ExprKind::Const(v) => *v,
        ExprKind::Load(_) | ExprKind::Input(_) => return None,
        ExprKind::Unary(op, a) => semantics::unop(*op, a.ty, fold_const(a)?),
        ExprKind::Cast(a) => semantics::cast(e.ty, fold_const(a)?),
        ExprKind::Binary(op, a, b) => semantics::binop(*op, a.ty, fold_const(a)?, fold_const(b)?),
    })
}

fn bound_check(idx: &Expr, len: u32) -> Option<Expr> {
    if let Some(v) = fold_const(idx) {
        return if (0..len as i64).contains(&v) {
            None
        } else {
            Some(Expr::constant(0, ScalarType::I32))
        };
    }
    let t = idx.ty;
    let upper = if (len as i64) <= t.max() {
        Some(Expr::binary(BinOp::Lt, idx.clone(), Expr::constant(len as i64, t), ScalarType::U8))
    } else {
        None
    };
    let lower = if t.signed() {
        Some(Expr::binary(BinOp::Le, Expr::constant(0, t), idx.clone(), ScalarType::U8))
    } else {
        None
    };
    match (lower, upper) {
        (Some(l), Some(u)) => Some(Expr::binary(BinOp::LogAnd, l, u, ScalarType::U8)),
        (l, u) => l.or(u),
    }
}

fn strip_spans(e: &Expr) -> Expr {
    let mut e = e.clone();
    e.walk_mut(&mut |x| x.span = Span::default());
    e
}

/// Common type of a binary operation: the wider type, unsigned on a tie.
pub fn unify(a: ScalarType, b: ScalarType) -> ScalarType {
    if a == b {
        return a;
    }
    match a.bits().cmp(&b.bits()) {
        std::cmp::Ordering::Greater => a,
        std::cmp::Ordering::Less => b,
        std::cmp::Ordering::Equal => {
            if a.signed() {
                b
            } else {
                a
            }
        }
    }
}

/// Insert an explicit conversion when `e` is not already of type `t`.
pub fn convert(e: Expr, t: ScalarType) -> Expr {
    if e.ty == t {
        e
    } else {
        let span = e.span;
        Expr::new(ExprKind::Cast(Box::new(e)), t, span)
    }
}

fn const_eval(e: &SExpr) -> Option<i64> {
    Some(match e {
        SExpr::Int(v, _) => *v,
        SExpr::Unary(op, a, _) => {
            let a = const_eval(a)?;
            match op {
                UnOp::Neg => a.checked_neg()?,
                UnOp::Not => (a == 0) as i64,
                UnOp::BitNot => !a,
            }
        }
        SExpr::Binary(op, a, b, _) => {
            let (a, b) = (const_eval(a)?, const_eval(b)?);
            match op {
                BinOp::Add => a.checked_add(b)?,
                BinOp::Sub => a.checked_sub(b)?,
                BinOp::Mul => a.checked_mul(b)?,
                BinOp::Div => a.checked_div(b).unwrap_or(0),
                BinOp::Rem => a.checked_rem(b).unwrap_or(a),
                BinOp::And => a & b,
                BinOp::Or => a | b,
                BinOp::Xor => a ^ b,
                BinOp::Shl => a.checked_shl(u32::try_from(b).ok()?)?,
                BinOp::Shr => a.checked_shr(u32::try_from(b).ok()?)?,
                op => crate::semantics::binop(*op, ScalarType::I32, a, b),
            }
        }
        SExpr::Cast(ty, a, _) => ty.wrap(const_eval(a)? as i128),
        _ => return None,
    })
}
