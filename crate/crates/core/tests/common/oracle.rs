#![allow(dead_code)]

//! Exhaustive concrete fault injection: every input of the declared domains,
//! every evaluation of every active site, values {1, all-ones, flip}, and a
//! second fault at any later evaluation.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use faultline_core::absint::{analyze, concrete_run, AnalysisOptions, FaultInjection, FaultValue, RunOptions, Termination, Trace};
use faultline_core::depgraph::build_pdg;
use faultline_core::frontend::{build_all, Cfg, Domain};
use faultline_core::instrument::{FaultConfig, FaultModel, Registry};
use faultline_core::select::{eliminate_proven, select_by_dependency};
use faultline_core::symex::Signature;
use faultline_core::{AssertId, SiteId};

pub struct Oracle<'a> {
    pub r: &'a Registry,
    cfgs: Vec<Cfg>,
    pub sites: BTreeSet<SiteId>,
    opts: RunOptions,
}

/// Cartesian product of the declared input domains. Ranges contribute
/// their bounds.
pub fn input_space(r: &Registry) -> Vec<BTreeMap<String, i64>> {
    let mut out = vec![BTreeMap::new()];
    for (name, d) in &r.program.domains {
        let vals: Vec<i64> = match d {
            Domain::Values(vs) => vs.clone(),
            Domain::Range(lo, hi) => vec![*lo, *hi],
        };
        out = out
            .into_iter()
            .flat_map(|m| {
                vals.iter().map(move |v| {
                    let mut m = m.clone();
                    m.insert(name.clone(), *v);
                    m
                })
            })
            .collect();
    }
    out
}

fn occurrence_at(log: &[SiteId], k: usize) -> u32 {
    log[..=k].iter().filter(|s| **s == log[k]).count() as u32
}

impl<'a> Oracle<'a> {
    pub fn new(r: &'a Registry, sites: BTreeSet<SiteId>) -> Oracle<'a> {
        let cfgs = build_all(&r.program);
        Oracle { r, cfgs, sites, opts: RunOptions { step_limit: 2_000_000, record_blocks: false, record_sites: true } }
    }

    pub fn all_sites(r: &'a Registry) -> Oracle<'a> {
        Oracle::new(r, r.site_ids())
    }

    fn values(&self, s: SiteId) -> [FaultValue; 3] {
        [FaultValue::Const(1), FaultValue::Const(self.r.site(s).ty.all_ones()), FaultValue::Flip]
    }

    pub fn run(&self, inputs: &BTreeMap<String, i64>, faults: &[FaultInjection]) -> Trace {
        concrete_run(&self.r.program, &self.cfgs, inputs, faults, &self.opts)
    }

    /// Every signature of an assertion violation with at most `max_faults`
    /// (0, 1 or 2) injected faults.
    pub fn signatures(&self, max_faults: u32) -> BTreeSet<Signature> {
        let mut out = BTreeSet::new();
        let inversion = self.r.model == FaultModel::TestInversion;
        let note = |t: &Trace, out: &mut BTreeSet<Signature>| {
            // a test-inversion fault must change the outcome of its test
            if inversion && t.hits.iter().any(|h| (h.pre ^ h.injected != 0) == (h.pre != 0)) {
                return;
            }
            if let Termination::AssertionViolation(a) = t.termination {
                let mut sites: Vec<SiteId> = t.hits.iter().map(|h| h.site).collect();
                sites.sort();
                out.insert(Signature { assertion: a, faults: sites.len() as u32, sites });
            }
        };
        for inputs in input_space(self.r) {
            let nominal = self.run(&inputs, &[]);
            note(&nominal, &mut out);
            if max_faults == 0 || matches!(nominal.termination, Termination::AssertionViolation(_)) {
                continue;
            }
            for (j, &s) in nominal.site_log.iter().enumerate() {
                if !self.sites.contains(&s) {
                    continue;
                }
                let occurrence = occurrence_at(&nominal.site_log, j);
                for value in self.values(s) {
                    let f1 = FaultInjection { site: s, occurrence, value };
                    let t1 = self.run(&inputs, &[f1]);
                    note(&t1, &mut out);
                    if max_faults < 2 || matches!(t1.termination, Termination::AssertionViolation(_)) {
                        continue;
                    }
                    // the prefix up to the first fault is the nominal one; a
                    // second fault may still undo a countermeasure
                    for k in j + 1..t1.site_log.len() {
                        let s2 = t1.site_log[k];
                        if !self.sites.contains(&s2) {
                            continue;
                        }
                        let occurrence = occurrence_at(&t1.site_log, k);
                        for value in self.values(s2) {
                            let f2 = FaultInjection { site: s2, occurrence, value };
                            note(&self.run(&inputs, &[f1, f2]), &mut out);
                        }
                    }
                }
            }
        }
        out
    }
}

/// Assertions named by a signature set.
pub fn violated(sigs: &BTreeSet<Signature>) -> BTreeSet<AssertId> {
    sigs.iter().map(|s| s.assertion).collect()
}

/// An assertion that proven-assertion elimination drops although the
/// oracle violates it with at most `max_faults` faults. `None` also when
/// the analysis gives up.
pub fn proven_but_violated(r: &Registry, max_faults: u32) -> Option<AssertId> {
    let cfgs = build_all(&r.program);
    let a = analyze(&r.program, &cfgs, &FaultConfig::all_symbolic(r), &AnalysisOptions::default());
    if a.timed_out {
        return None;
    }
    let g = build_pdg(r, &cfgs, &a);
    let targets: BTreeSet<AssertId> = r.program.assertions().iter().map(|a| a.id).collect();
    let sel = eliminate_proven(select_by_dependency(&g, &targets).ok()?, r, &cfgs, &g, Duration::from_secs(30));
    let proven: BTreeSet<AssertId> = targets.difference(&sel.target_assertions).copied().collect();
    let hit = violated(&Oracle::all_sites(r).signatures(max_faults));
    proven.intersection(&hit).next().copied()
}
