use proptest::prelude::*;

use super::*;
use crate::corpus;
use crate::frontend::{parse, SourceUnit};
use crate::instrument::instrument;

fn registry(c: corpus::CorpusProgram) -> Registry {
    instrument(&c.parse(), c.model)
}

fn selected(r: &Registry, cfg: &PipelineConfig) -> Vec<String> {
    let run = run_selection(r, &build_all(&r.program), cfg).unwrap();
    run.selection.sites.iter().map(|s| s.to_string()).collect()
}

#[test]
fn strategy_file_layout() {
    let s = StrategyFile {
        version: SCHEMA_VERSION.into(),
        model: FaultModel::Data,
        max_faults: 1,
        sites: vec!["fault_4".into()],
        fixed: BTreeMap::from([("fault_5".to_string(), 0)]),
    };
    let text = s.emit();
    assert!(text.contains("version: '1.0'") || text.contains("version: \"1.0\""), "{text}");
    assert!(text.contains("- fault_4"));
    assert!(text.contains("model: data"));
    assert_eq!(StrategyFile::parse(&text).unwrap(), s);
}

proptest! {
    #[test]
    fn strategy_round_trip(
        model in prop_oneof![Just(FaultModel::Data), Just(FaultModel::TestInversion), Just(FaultModel::Both)],
        max_faults in 0u32..5,
        sites in prop::collection::btree_set(0u32..300, 0..12),
        fixed in prop::collection::btree_map(300u32..400, any::<i64>(), 0..4),
    ) {
        let s = StrategyFile {
            version: SCHEMA_VERSION.into(),
            model,
            max_faults,
            sites: sites.iter().map(|i| SiteId(*i).to_string()).collect(),
            fixed: fixed.iter().map(|(k, v)| (SiteId(*k).to_string(), *v)).collect(),
        };
        prop_assert_eq!(StrategyFile::parse(&s.emit()).unwrap(), s);
    }
}

#[test]
fn strategy_errors() {
    let r = registry(corpus::PRINT_MESSAGE);
    let bad = "version: '0.9'\nmodel: data\nmax_faults: 1\nsites: []\n";
    assert!(matches!(StrategyFile::parse(bad), Err(PipelineError::SchemaMismatch { .. })));
    let unknown = "version: '1.0'\nmodel: data\nmax_faults: 1\nsites: [fault_9]\n";
    let s = StrategyFile::parse(unknown).unwrap();
    assert!(matches!(s.resolve(&r), Err(PipelineError::UnknownSite(n)) if n == "fault_9"));
    let ok = "version: '1.0'\nmodel: both\nmax_faults: 1\nsites: [fault_4]\nfixed:\n  fault_0: 3\n";
    let c = StrategyFile::parse(ok).unwrap().resolve(&r).unwrap();
    assert_eq!(c.setting(SiteId(4)), FaultSetting::Symbolic);
    assert_eq!(c.setting(SiteId(0)), FaultSetting::Fixed(3));
    assert_eq!(c.setting(SiteId(1)), FaultSetting::Fixed(0));
}

#[test]
fn print_message_strategies() {
    let r = registry(corpus::PRINT_MESSAGE);
    let deps = PipelineConfig { prove: false, ..PipelineConfig::default() };
    assert_eq!(selected(&r, &deps), ["fault_0", "fault_1", "fault_2", "fault_3", "fault_4"]);
    let bf = PipelineConfig { prove: false, brute_force: true, ..PipelineConfig::default() };
    assert_eq!(selected(&r, &bf), ["fault_4"]);
}

#[test]
fn flag_conflicts() {
    let r = registry(corpus::PRINT_MESSAGE);
    let cfgs = build_all(&r.program);
    for cfg in [
        PipelineConfig { brute_force: true, max_faults: 2, ..PipelineConfig::default() },
        PipelineConfig { shrink: true, max_faults: 2, ..PipelineConfig::default() },
        PipelineConfig { grow: true, shrink: true, ..PipelineConfig::default() },
    ] {
        assert!(matches!(run_selection(&r, &cfgs, &cfg), Err(PipelineError::FlagConflict(_))));
    }
}

#[test]
fn steps_never_grow_the_selection() {
    let r = registry(corpus::VERIFYPIN_BASIC);
    let cfg = PipelineConfig { brute_force: true, occ_limit: Some(4), ..PipelineConfig::default() };
    let run = run_selection(&r, &build_all(&r.program), &cfg).unwrap();
    assert_eq!(run.steps.iter().map(|s| s.step.as_str()).collect::<Vec<_>>(), ["deps", "prove", "brute-force", "occurrence"]);
    let mut prev = r.sites.len();
    for s in &run.steps {
        assert_eq!(s.sites_before, prev);
        assert!(s.sites_after <= s.sites_before);
        prev = s.sites_after;
    }
}

#[test]
fn print_message_report_and_exit_code() {
    let r = registry(corpus::PRINT_MESSAGE);
    let rep = run_pipeline(&r, "print_message", &PipelineConfig::sound(1), Budget::default()).unwrap();
    assert_eq!(rep.exit_code(), 1);
    assert_eq!(rep.sites, ["fault_4"]);
    assert_eq!(rep.table.rows[&SiteId(4)], vec![0, 1]);
    assert!(rep.complete);
    let text = rep.render();
    assert!(text.contains("Injection Point"));
    let back = RunReport::from_json(&rep.to_json()).unwrap();
    assert_eq!(back, rep);
}

#[test]
fn safe_program_exits_zero_and_heuristics_are_incomplete() {
    let p = parse(&SourceUnit::new("t.fic", "void main() { u8 x = 1; //@ assert x == 1;\n }", "main")).unwrap();
    let r = instrument(&p, FaultModel::Data);
    let rep = run_pipeline(&r, "t", &PipelineConfig::sound(0), Budget::default()).unwrap();
    assert_eq!(rep.exit_code(), 0);
    assert!(rep.table.rows.values().all(|row| row.iter().all(|&n| n == 0)));
    let cfg = PipelineConfig { occ_limit: Some(10), max_faults: 0, ..PipelineConfig::default() };
    let rep = run_pipeline(&r, "t", &cfg, Budget::default()).unwrap();
    assert!(!rep.complete);
    assert_eq!(rep.exit_code(), 2);
}

#[test]
fn comparing_reports() {
    let r = registry(corpus::VERIFYPIN_BASIC);
    let all = PipelineConfig { deps: false, prove: false, ..PipelineConfig::default() };
    let a = run_pipeline(&r, "verifypin_basic", &all, Budget::default()).unwrap();
    let b = run_pipeline(&r, "verifypin_basic", &PipelineConfig { prove: false, ..PipelineConfig::default() }, Budget::default()).unwrap();
    assert_eq!(a.attacks.len(), b.attacks.len());
    assert!(b.sites.len() < a.sites.len());
    let table = compare_reports(&[a.clone(), b]).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[2].contains("all") && lines[3].contains("deps"));
    assert_eq!(compare_reports(std::slice::from_ref(&a)).unwrap().lines().count(), 3);
    let mut old = a;
    old.version = "0.1".into();
    assert!(matches!(compare_reports(&[old.clone()]), Err(PipelineError::SchemaMismatch { .. })));
    assert!(matches!(RunReport::from_json(&old.to_json()), Err(PipelineError::SchemaMismatch { .. })));
}
