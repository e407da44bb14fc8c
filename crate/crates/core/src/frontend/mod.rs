//! FIC source language: lexing, parsing, type checking, CFG construction and printing.

pub mod ast;
pub mod cfg;
mod lexer;
mod parser;
mod printer;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ast::*;
pub use cfg::{build_all, build_cfg, place_type, BasicBlock, BlockId, Cfg, EdgeLabel, Instr, InstrKind, Point, Terminator};
pub use parser::{convert, unify};
pub use printer::{print_expr, print_place, print_program};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum FrontendError {
    #[error("{span}: parse error: {msg}")]
    Parse { span: Span, msg: String },
    #[error("{span}: type error: {msg}")]
    Type { span: Span, msg: String },
    #[error("{span}: unsupported: {msg}")]
    Unsupported { span: Span, msg: String },
}

impl FrontendError {
    pub(crate) fn parse(span: Span, msg: impl Into<String>) -> Self {
        FrontendError::Parse { span, msg: msg.into() }
    }

    pub(crate) fn ty(span: Span, msg: impl Into<String>) -> Self {
        FrontendError::Type { span, msg: msg.into() }
    }

    pub(crate) fn unsupported(span: Span, msg: impl Into<String>) -> Self {
        FrontendError::Unsupported { span, msg: msg.into() }
    }

    pub fn span(&self) -> Span {
        match self {
            FrontendError::Parse { span, .. }
            | FrontendError::Type { span, .. }
            | FrontendError::Unsupported { span, .. } => *span,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceUnit {
    pub path: String,
    pub text: String,
    pub entry: String,
    /// Flags enabling `//@ if FLAG` blocks.
    #[serde(default)]
    pub flags: Vec<String>,
}

impl SourceUnit {
    pub fn new(path: impl Into<String>, text: impl Into<String>, entry: impl Into<String>) -> Self {
        SourceUnit { path: path.into(), text: text.into(), entry: entry.into(), flags: Vec::new() }
    }

    pub fn with_flags(mut self, flags: &[&str]) -> Self {
        self.flags = flags.iter().map(|s| s.to_string()).collect();
        self
    }
}

/// Parse and type-check a source unit.
pub fn parse(unit: &SourceUnit) -> Result<Program, FrontendError> {
    parser::parse_unit(unit)
}

pub fn pretty_print(p: &Program, path: &str) -> SourceUnit {
    let entry = p.entry.map(|e| p.functions[e].name.clone()).unwrap_or_default();
    SourceUnit::new(path, print_program(p), entry)
}

/// Structural equality ignoring source positions.
pub fn same_structure(a: &Program, b: &Program) -> bool {
    let (mut a, mut b) = (a.clone(), b.clone());
    clear_spans(&mut a);
    clear_spans(&mut b);
    a == b
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_src(src: &str) -> Result<Program, FrontendError> {
        parse(&SourceUnit::new("t.fic", src, "main"))
    }

    fn roundtrip(src: &str) -> Program {
        let p = parse_src(src).unwrap();
        let text = print_program(&p);
        let q = parse_src(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
        assert!(same_structure(&p, &q), "round trip changed the program:\n{text}");
        p
    }

    #[test]
    fn empty_source() {
        let p = parse_src("").unwrap();
        assert!(p.functions.is_empty());
        assert_eq!(p.entry, None);
    }

    #[test]
    fn duplicate_names_rejected() {
        assert!(parse_src("u32 a; u32 a;").is_err());
        assert!(parse_src("void main() { u32 x; u32 x; }").is_err());
        assert!(parse_src("void main(u32 x) { u32 x; }").is_err());
        assert!(parse_src("void main() { l: ; l: ; }").is_err());
        assert!(parse_src("void f() {} void f() {}").is_err());
    }

    #[test]
    fn sibling_scopes_may_reuse_names() {
        let p = roundtrip(
            "void main() { for (u32 i = 0; i < 2; i++) { __print(i); } for (u32 i = 0; i < 3; i++) { __print(i); } }",
        );
        assert_eq!(p.functions[0].locals.len(), 2);
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_src("void main() {\n  x = 1;\n}").unwrap_err();
        assert!(matches!(e, FrontendError::Type { .. }));
        assert_eq!(e.span().line, 2);
        let e = parse_src("void main() { u32 x = ; }").unwrap_err();
        assert!(matches!(e, FrontendError::Parse { .. }));
        let e = parse_src("void main() { u32 x; x = &x; }").unwrap_err();
        assert!(matches!(e, FrontendError::Unsupported { .. }));
    }

    #[test]
    fn c_aliases_print_canonically() {
        let p = roundtrip("unsigned int g; int main() { unsigned char c = 3; size_t n = 4; return (int)(c + n); }");
        let text = print_program(&p);
        assert!(text.contains("u32 g;"));
        assert!(text.contains("u8 c = 3;"));
        assert!(text.contains("i32 main()"));
    }

    #[test]
    fn implicit_conversions_become_casts() {
        let p = parse_src("void main() { u8 a = 1; u32 b = a; i32 c = b + 1; }").unwrap();
        let text = print_program(&p);
        assert!(text.contains("u32 b = (u32)(a);"), "{text}");
        assert!(text.contains("i32 c = (i32)(b + 1);"), "{text}");
    }

    #[test]
    fn literal_typing_follows_context() {
        let p = parse_src("void main() { u8 a = 250; a = a + 10; }").unwrap();
        let StmtKind::Assign { value, .. } = &p.functions[0].body.stmts[1].kind else { panic!() };
        assert_eq!(value.ty, ScalarType::U8);
    }

    #[test]
    fn records_pointers_and_rte() {
        let src = r#"
            typedef struct { u32 msg_size; u8 msg[256]; } data_t;
            void show(data_t *d, u8 buf[4]) {
                u32 i = d->msg_size & 0xff;
                __print(d->msg[i]);
                buf[i & 3] = 2;
            }
            void main() { data_t data; u8 b[4]; show(&data, b); }
        "#;
        let p = roundtrip(src);
        let asserts = p.assertions();
        let origins: Vec<_> = asserts.iter().map(|a| a.origin).collect();
        assert_eq!(
            origins,
            vec![AssertOrigin::IndexBound, AssertOrigin::MemAccess, AssertOrigin::IndexBound]
        );
        assert_eq!(asserts.iter().map(|a| a.id.0).collect::<Vec<_>>(), vec![0, 1, 2]);
        let text = print_program(&p);
        assert!(text.contains("//@ assert rte: index_bound: i < 256;"), "{text}");
        assert!(text.contains("//@ assert rte: mem_access: i < 256;"), "{text}");
    }

    #[test]
    fn annotations_domains_and_flags() {
        let src = "//@ domain n = {1, 5};\n//@ domain m = 0..3;\nvoid main() {\n u32 x = __sym_input_u32(\"n\");\n//@ if FIXES\n x = 1;\n//@ endif\n //@ assert x != 0;\n}\n";
        let p = roundtrip(src);
        assert_eq!(p.domains["n"], Domain::Values(vec![1, 5]));
        assert_eq!(p.domains["m"], Domain::Range(0, 3));
        assert_eq!(p.assertions().len(), 1);
        assert_eq!(p.functions[0].body.stmts.len(), 2);
        let q = parse(&SourceUnit::new("t", src, "main").with_flags(&["FIXES"])).unwrap();
        assert_eq!(q.functions[0].body.stmts.len(), 3);
    }

    #[test]
    fn operators_roundtrip() {
        roundtrip(
            "i32 g = -5;\n\
             i32 f(i32 a, i32 b) { return -(a - -3) * (b % 7) / 2 + (~a >> 1) - (a << 2); }\n\
             void main() { i32 r = 0; r = f(1, 2); if (!(r < 3) && (r != 4 || r >= 0)) { r = -(1); } while (r > 0) { r--; } goto done; done: return; }",
        );
    }

    #[test]
    fn cfg_shapes() {
        let p = parse_src("void main() { u32 a = 1; u32 b = a; __print(b); }").unwrap();
        let c = build_cfg(&p, 0);
        let live: Vec<_> = (0..c.blocks.len()).filter(|&b| c.reachable[b] && b != c.exit).collect();
        assert_eq!(live, vec![c.entry]);
        assert_eq!(c.successors(c.entry), vec![c.exit]);
        assert_eq!(c.blocks[c.entry].instrs.len(), 3);

        let p = parse_src("void main() { u32 i; for (i = 0; i < 4; i++) { __print(i); } }").unwrap();
        let c = build_cfg(&p, 0);
        assert_eq!(c.loop_headers.len(), 1);
        let h = *c.loop_headers.iter().next().unwrap();
        assert!(matches!(c.blocks[h].term, Terminator::Branch { .. }));
    }

    #[test]
    fn dominators_on_diamond() {
        let p = parse_src("void main() { u32 x = 0; if (x) { x = 1; } else { x = 2; } __print(x); }").unwrap();
        let c = build_cfg(&p, 0);
        let Terminator::Branch { then_bb, else_bb, .. } = c.blocks[c.entry].term else { panic!() };
        assert!(c.dominates(c.entry, then_bb));
        assert!(!c.dominates(then_bb, else_bb));
        assert!(c.postdominates(c.exit, c.entry));
        assert!(!c.postdominates(then_bb, c.entry));
    }
}
