use super::*;
use crate::absint::{analyze, AnalysisOptions};
use crate::corpus;
use crate::frontend::{build_all, parse, SourceUnit};
use crate::instrument::{instrument, FaultConfig, FaultModel};

fn graph_of(src: &str, entry: &str, model: FaultModel) -> (Registry, Vec<Cfg>, Pdg) {
    let p = parse(&SourceUnit::new("t.fic", src, entry)).unwrap();
    let r = instrument(&p, model);
    let cfgs = build_all(&r.program);
    let a = analyze(&r.program, &cfgs, &FaultConfig::all_symbolic(&r), &AnalysisOptions::default());
    let g = build_pdg(&r, &cfgs, &a);
    (r, cfgs, g)
}

fn all_assertions(r: &Registry) -> BTreeSet<AssertId> {
    r.program.assertions().iter().map(|a| a.id).collect()
}

fn site_with_text(r: &Registry, text: &str) -> SiteId {
    r.sites.iter().find(|s| s.text == text).unwrap_or_else(|| panic!("no site `{text}`")).id
}

#[test]
fn assertion_depends_only_on_its_definitions() {
    let (r, _, g) = graph_of("void main() { u8 x = 1; u8 y = 2; //@ assert x == 1;\n }", "main", FaultModel::Data);
    let sites = dependent_sites(&g, &all_assertions(&r)).unwrap();
    let x = site_with_text(&r, "1");
    let y = site_with_text(&r, "2");
    assert!(sites.contains(&x));
    assert!(!sites.contains(&y));
}

#[test]
fn print_message_excludes_the_printed_char() {
    let r = instrument(&corpus::PRINT_MESSAGE.parse(), FaultModel::Both);
    let cfgs = build_all(&r.program);
    let a = analyze(&r.program, &cfgs, &FaultConfig::all_symbolic(&r), &AnalysisOptions::default());
    let g = build_pdg(&r, &cfgs, &a);
    let sites = dependent_sites(&g, &all_assertions(&r)).unwrap();
    assert_eq!(sites, (0..5).map(SiteId).collect());
    // each assertion alone already needs the mask
    for id in all_assertions(&r) {
        assert!(dependent_sites(&g, &BTreeSet::from([id])).unwrap().contains(&SiteId(4)));
    }
}

#[test]
fn callee_writes_reach_caller_assertions() {
    let src = "u32 g; u32 h; void set() { g = 5; h = 6; } void main() { set(); //@ assert g == 5;\n }";
    let (r, _, g) = graph_of(src, "main", FaultModel::Data);
    let sites = dependent_sites(&g, &all_assertions(&r)).unwrap();
    assert!(sites.contains(&site_with_text(&r, "5")));
    assert!(!sites.contains(&site_with_text(&r, "6")));
    let an = g.assertion_nodes[&all_assertions(&r).into_iter().next().unwrap()];
    let co = g
        .nodes
        .iter()
        .find(|n| n.kind == NodeKind::CallOutput && n.loc == Some(Loc { base: Base::Global(0), field: None }))
        .unwrap()
        .id;
    assert!(g.data_edges.contains(&(co, an)));
    assert!(g.interproc_edges.iter().any(|&(x, y)| y == co && g.nodes[x].kind == NodeKind::FunctionOutput));
}

#[test]
fn by_reference_writes_flow_back() {
    let src = "struct S { u8 a; u8 b; }; void w(struct S *s) { s->a = 3; s->b = 4; }
               void main() { struct S v; w(&v); //@ assert v.b == 4;\n }";
    let (r, _, g) = graph_of(src, "main", FaultModel::Data);
    let sites = dependent_sites(&g, &all_assertions(&r)).unwrap();
    assert!(sites.contains(&site_with_text(&r, "4")));
    assert!(!sites.contains(&site_with_text(&r, "3")));
}

#[test]
fn countermeasures_create_control_dependence() {
    let src = "void main() { u8 c = __sym_input_u8(\"c\"); u8 x = 0; if (c) { __countermeasure(); } x = 1; //@ assert x == 0;\n }";
    let (r, _, g) = graph_of(src, "main", FaultModel::Both);
    let sites = dependent_sites(&g, &all_assertions(&r)).unwrap();
    assert!(sites.contains(&site_with_text(&r, "c")), "{:?}", r.sites);
}

#[test]
fn halting_callee_guards_later_statements() {
    let src = "u8 k; void check() { if (k != 1) { __countermeasure(); } }
               void main() { u8 x = 2; k = 1; check(); //@ assert x == 2;\n }";
    let (r, _, g) = graph_of(src, "main", FaultModel::Both);
    let sites = dependent_sites(&g, &all_assertions(&r)).unwrap();
    assert!(sites.contains(&site_with_text(&r, "k != 1")));
    assert!(sites.contains(&site_with_text(&r, "1")));
}

#[test]
fn unfeasible_path_keeps_the_first_test() {
    let r = instrument(&corpus::UNFEASIBLE.parse(), corpus::UNFEASIBLE.model);
    let cfgs = build_all(&r.program);
    let a = analyze(&r.program, &cfgs, &FaultConfig::all_symbolic(&r), &AnalysisOptions::default());
    let g = build_pdg(&r, &cfgs, &a);
    let target = r
        .program
        .assertions()
        .iter()
        .find(|x| crate::frontend::print_expr(&r.program, x.function, &x.cond).contains('!'))
        .unwrap()
        .id;
    let sites = dependent_sites(&g, &BTreeSet::from([target])).unwrap();
    assert!(sites.contains(&site_with_text(&r, "a && b")));
}

#[test]
fn empty_and_unknown_targets() {
    let (_, _, g) = graph_of("void main() { u8 x = 1; //@ assert x;\n }", "main", FaultModel::Both);
    assert!(dependent_sites(&g, &BTreeSet::new()).unwrap().is_empty());
    assert_eq!(
        dependent_sites(&g, &BTreeSet::from([AssertId(99)])),
        Err(DepError::UnknownAssertion(AssertId(99)))
    );
}

#[test]
fn dead_code_has_no_dependences() {
    let src = "void main() { u8 x = 1; if (0) { x = 2; } //@ assert x == 1;\n }";
    let (r, _, g) = graph_of(src, "main", FaultModel::Data);
    let sites = dependent_sites(&g, &all_assertions(&r)).unwrap();
    assert!(!sites.contains(&site_with_text(&r, "2")));
}

#[test]
fn dot_dump_mentions_every_node() {
    let (r, _, g) = graph_of("void main() { u8 x = 1; //@ assert x;\n }", "main", FaultModel::Both);
    let dot = g.to_dot(&r.program);
    assert!(dot.starts_with("digraph"));
    assert_eq!(dot.matches("label=").count(), g.nodes.len());
}
