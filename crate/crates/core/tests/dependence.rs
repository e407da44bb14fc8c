//! Dependence graph against brute-force fault injection on generated programs.

mod common;

use std::collections::BTreeSet;

use common::progen::generate;
use faultline_core::absint::{analyze, concrete_run, AnalysisOptions, FaultInjection, FaultValue, RunOptions, Termination};
use faultline_core::depgraph::{build_pdg, dependent_sites};
use faultline_core::frontend::{build_all, parse, SourceUnit};
use faultline_core::instrument::{instrument, FaultConfig, FaultModel};
use faultline_core::{AssertId, SiteId};
use proptest::prelude::*;

fn violated(t: &Termination) -> Option<AssertId> {
    match t {
        Termination::AssertionViolation(a) => Some(*a),
        _ => None,
    }
}

fn comparable(t: &Termination) -> bool {
    matches!(t, Termination::Normal | Termination::Countermeasure | Termination::AssertionViolation(_))
}

fn check(seed: u64) -> Result<(), String> {
    let g = generate(seed);
    let p = parse(&SourceUnit::new("gen.fic", g.source.clone(), "main")).map_err(|e| e.to_string())?;
    let r = instrument(&p, FaultModel::Both);
    let cfgs = build_all(&r.program);
    let a = analyze(&r.program, &cfgs, &FaultConfig::all_symbolic(&r), &AnalysisOptions::default());
    let pdg = build_pdg(&r, &cfgs, &a);
    let opts = RunOptions { step_limit: 100_000, ..RunOptions::default() };
    for inputs in g.input_space() {
        let nominal = concrete_run(&r.program, &cfgs, &inputs, &[], &opts);
        if !comparable(&nominal.termination) {
            continue;
        }
        for s in &r.sites {
            let n = nominal.occurrences.get(&s.id).copied().unwrap_or(0);
            for occurrence in 1..=n.min(2) {
                for value in [FaultValue::Const(1), FaultValue::Const(s.ty.all_ones()), FaultValue::Flip] {
                    let f = FaultInjection { site: s.id, occurrence, value };
                    let t = concrete_run(&r.program, &cfgs, &inputs, &[f], &opts);
                    if !comparable(&t.termination) {
                        continue;
                    }
                    if violated(&nominal.termination) == violated(&t.termination) {
                        continue;
                    }
                    // a run stops at its first violation, so only the first
                    // assertion whose outcome differs is owed to the fault
                    let (a, b) = (&nominal.verdicts, &t.verdicts);
                    let k = a.iter().zip(b).take_while(|(u, v)| u == v).count();
                    let blamed: Vec<AssertId> = match (a.get(k), b.get(k)) {
                        (Some(u), Some(v)) if u.0 == v.0 => vec![u.0],
                        (u, v) => u.into_iter().chain(v).filter(|w| !w.1).map(|w| w.0).collect(),
                    };
                    for id in blamed {
                        let deps = dependent_sites(&pdg, &BTreeSet::from([id])).unwrap();
                        if !deps.contains(&s.id) {
                            return Err(format!("{f:?} with {inputs:?} changes {id} but {} is not a dependence", s.id));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn verdict_changes_follow_dependences(seed in any::<u64>()) {
        if let Err(e) = check(seed) {
            prop_assert!(false, "seed {seed}: {e}\n{}", generate(seed).source);
        }
    }

    #[test]
    fn closure_is_monotone(seed in any::<u64>(), mask in any::<u64>()) {
        let g = generate(seed);
        let p = parse(&SourceUnit::new("gen.fic", g.source, "main")).unwrap();
        let r = instrument(&p, FaultModel::Both);
        let cfgs = build_all(&r.program);
        let a = analyze(&r.program, &cfgs, &FaultConfig::all_symbolic(&r), &AnalysisOptions::default());
        let pdg = build_pdg(&r, &cfgs, &a);
        let all: Vec<AssertId> = r.program.assertions().iter().map(|a| a.id).collect();
        let small: BTreeSet<AssertId> = all.iter().enumerate().filter(|(i, _)| mask >> (i % 64) & 1 == 1).map(|(_, a)| *a).collect();
        let big: BTreeSet<AssertId> = all.iter().copied().collect();
        let ds: BTreeSet<SiteId> = dependent_sites(&pdg, &small).unwrap();
        let db = dependent_sites(&pdg, &big).unwrap();
        prop_assert!(ds.is_subset(&db));
    }
}
