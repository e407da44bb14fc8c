use std::time::{Duration, Instant};

use super::*;
use crate::corpus::{self, CorpusProgram};
use crate::depgraph::build_pdg;
use crate::frontend::{parse, SourceUnit};
use crate::instrument::{instrument, FaultModel};

struct Setup {
    r: Registry,
    cfgs: Vec<Cfg>,
    g: Pdg,
}

fn setup(p: &crate::frontend::Program, model: FaultModel) -> Setup {
    let r = instrument(p, model);
    let cfgs = build_all(&r.program);
    let a = absint::analyze(&r.program, &cfgs, &FaultConfig::all_symbolic(&r), &AnalysisOptions::default());
    let g = build_pdg(&r, &cfgs, &a);
    Setup { r, cfgs, g }
}

fn corpus_setup(c: CorpusProgram) -> Setup {
    setup(&c.parse(), c.model)
}

fn src_setup(src: &str) -> Setup {
    setup(&parse(&SourceUnit::new("t.fic", src, "main")).unwrap(), FaultModel::Data)
}

fn targets(r: &Registry) -> BTreeSet<AssertId> {
    r.program.assertions().iter().map(|a| a.id).collect()
}

fn ids(v: &[u32]) -> BTreeSet<SiteId> {
    v.iter().map(|&i| SiteId(i)).collect()
}

fn deps(s: &Setup) -> Selection {
    select_by_dependency(&s.g, &targets(&s.r)).unwrap()
}

#[test]
fn dependency_selection_on_print_message() {
    let s = corpus_setup(corpus::PRINT_MESSAGE);
    let sel = deps(&s);
    assert_eq!(sel.sites, ids(&[0, 1, 2, 3, 4]));
    assert!(sel.provenance.values().all(|p| p == &["deps"]));
}

#[test]
fn no_assertions_select_nothing() {
    let s = src_setup("void main() { u8 x = 1; __print(x); }");
    assert!(deps(&s).is_empty());
}

#[test]
fn verifypin_dependency_selection_is_strict() {
    let s = corpus_setup(corpus::VERIFYPIN_BASIC);
    let sel = deps(&s);
    assert!(!sel.is_empty() && sel.len() < s.r.sites.len(), "{} of {}", sel.len(), s.r.sites.len());
}

#[test]
fn proven_assertions_take_their_sites_along() {
    // the assertion holds whatever is injected into x
    let s = src_setup("void main() { u8 x = 3; //@ assert (x & 3) <= 3;\n }");
    let sel = eliminate_proven(deps(&s), &s.r, &s.cfgs, &s.g, Duration::from_secs(10));
    assert!(sel.is_empty() && sel.target_assertions.is_empty());

    let s = corpus_setup(corpus::PRINT_MESSAGE);
    let sel = eliminate_proven(deps(&s), &s.r, &s.cfgs, &s.g, Duration::from_secs(10));
    assert_eq!(sel.sites, ids(&[0, 1, 2, 3, 4]));
    assert_eq!(sel.target_assertions.len(), 1);
    assert_eq!(sel.provenance[&SiteId(4)], ["deps", "prove"]);
}

#[test]
fn brute_force_keeps_only_the_mask() {
    let s = corpus_setup(corpus::PRINT_MESSAGE);
    let sel = brute_force_filter(deps(&s), &s.r, &s.cfgs, 1, Duration::from_secs(10)).unwrap();
    assert_eq!(sel.sites, ids(&[4]));
    assert_eq!(
        brute_force_filter(deps(&s), &s.r, &s.cfgs, 2, Duration::from_secs(10)),
        Err(SelectError::MultiFaultContext(2))
    );
}

#[test]
fn brute_force_drops_sites_of_trivial_assertions() {
    let s = src_setup("void main() { u8 x = 4; //@ assert 1;\n __print(x); }");
    let mut sel = Selection { sites: s.r.site_ids(), target_assertions: targets(&s.r), ..Selection::default() };
    sel.provenance = sel.sites.iter().map(|x| (*x, vec![])).collect();
    let sel = brute_force_filter(sel, &s.r, &s.cfgs, 1, Duration::from_secs(10)).unwrap();
    assert!(sel.is_empty());
}

#[test]
fn occurrences_of_print_message() {
    let c = corpus::PRINT_MESSAGE;
    let r = instrument(&c.parse(), c.model);
    let occ = count_occurrences(&r, &c.harness_inputs()).unwrap();
    let want = [1, 256, 257, 256, 1];
    for (i, n) in want.iter().enumerate() {
        assert_eq!(occ.exact[&SiteId(i as u32)], *n, "fault_{i}");
    }
    assert!(occ.projected.is_empty());
}

#[test]
fn straight_line_site_occurs_once() {
    let p = parse(&SourceUnit::new("t.fic", "void main() { u8 x = 4; __print(x); }", "main")).unwrap();
    let r = instrument(&p, FaultModel::Data);
    let occ = count_occurrences(&r, &BTreeMap::new()).unwrap();
    assert!(occ.exact.values().all(|&n| n == 1) && !occ.exact.is_empty());
}

#[test]
fn nonterminating_counting_is_an_error() {
    let p = parse(&SourceUnit::new("t.fic", "void main() { u32 x = 0; while (1) { x = x + 1; } }", "main")).unwrap();
    let r = instrument(&p, FaultModel::Data);
    assert!(matches!(count_occurrences(&r, &BTreeMap::new()), Err(SelectError::NonTerminating(_))));
}

#[test]
fn projection_skips_loops_of_the_dead_region() {
    let c = corpus::PROJECTION;
    let r = instrument(&c.parse(), c.model);
    let occ = count_occurrences(&r, &c.harness_inputs()).unwrap();
    assert_eq!(occ.exact[&SiteId(0)], 7);
    for s in [1, 2, 3] {
        assert!(!occ.exact.contains_key(&SiteId(s)));
    }
    assert_eq!(occ.projected.get(&SiteId(1)), Some(&7));
    assert_eq!(occ.projected.get(&SiteId(3)), Some(&7));
    assert_eq!(occ.projected.get(&SiteId(2)), None);
}

/// Paths through the dead region from `entry`, each as the list of
/// blocks, bounded to `limit` blocks (long paths only arise in cycles).
fn region_paths(cfg: &Cfg, entry: BlockId, dead: &dyn Fn(BlockId) -> bool, limit: usize) -> Vec<Vec<BlockId>> {
    let mut out = Vec::new();
    let mut stack = vec![vec![entry]];
    while let Some(p) = stack.pop() {
        let last = *p.last().unwrap();
        let next: Vec<BlockId> = cfg.successors(last).into_iter().filter(|&b| dead(b)).collect();
        if next.is_empty() || p.len() >= limit {
            out.push(p);
            continue;
        }
        for b in next {
            let mut q = p.clone();
            q.push(b);
            stack.push(q);
        }
    }
    out
}

#[test]
fn nested_dead_branches_inherit_the_projection() {
    let src = "u32 g; u32 z;
        void main() {
            for (u32 k = 0; k < 3; k++) {
                if (g == 0) {
                    g = 0;
                } else {
                    z = 1;
                    if (z > 5) {
                        z = 2;
                        if (z > 6) { z = 3; } else { z = 4; }
                    }
                    while (z < 9) { z = z + 2; }
                }
            }
            //@ assert g == 0;
        }";
    let p = parse(&SourceUnit::new("t.fic", src, "main")).unwrap();
    let r = instrument(&p, FaultModel::Both);
    let occ = count_occurrences(&r, &BTreeMap::new()).unwrap();
    // oracle: a dead site is projected iff no bounded path through its
    // region evaluates it twice
    let cfgs = build_all(&r.program);
    let nominal = absint::analyze(&r.program, &cfgs, &FaultConfig::none(), &AnalysisOptions::default());
    let cfg = &cfgs[r.program.entry.unwrap()];
    let dead = |b: BlockId| nominal.is_dead(cfg.func, b) && b != cfg.exit;
    let pts = site_points(&r.program, &cfgs);
    let branch = cfg
        .blocks
        .iter()
        .enumerate()
        .find_map(|(b, bb)| match &bb.term {
            Terminator::Branch { then_bb, else_bb, .. } if !dead(b) && dead(*else_bb) && !dead(*then_bb) => Some(*else_bb),
            _ => None,
        })
        .unwrap();
    let paths = region_paths(cfg, branch, &dead, 40);
    let text = |s: SiteId| r.site(s).text.clone();
    let mut seen_projected = 0;
    for s in &r.sites {
        let blocks: Vec<BlockId> = pts[&s.id].iter().map(|p| p.block).collect();
        if !blocks.iter().all(|&b| dead(b)) {
            continue;
        }
        let most = paths.iter().map(|p| p.iter().filter(|b| blocks.contains(b)).count()).max().unwrap();
        if most <= 1 {
            assert_eq!(occ.projected.get(&s.id), Some(&3), "{}", text(s.id));
            seen_projected += 1;
        } else {
            assert_eq!(occ.projected.get(&s.id), None, "{}", text(s.id));
        }
    }
    // z = 1, both nested assignments, and the inner tests are projected
    assert!(seen_projected >= 4, "{occ:?}");
}

#[test]
fn occurrence_limit() {
    let s = corpus_setup(corpus::PRINT_MESSAGE);
    let c = corpus::PRINT_MESSAGE;
    let occ = count_occurrences(&s.r, &c.harness_inputs()).unwrap();
    let sel = filter_by_occurrence(deps(&s), &occ, 1);
    assert_eq!(sel.sites, ids(&[0, 4]));
    assert_eq!(sel.provenance[&SiteId(0)], ["deps", "occurrence"]);
    assert!(filter_by_occurrence(deps(&s), &occ, 0).is_empty());
    assert_eq!(default_order(&deps(&s), &occ), [0, 4, 1, 3, 2].map(SiteId));
}

/// A runner that "times out" whenever `bad` is part of the run, reporting
/// traces where each site fired according to `weights`.
fn fake(bad: Option<SiteId>, weights: BTreeMap<SiteId, u32>) -> impl FnMut(&BTreeSet<SiteId>, Duration) -> RunOutcome {
    move |sites, _| {
        let stuck = bad.is_some_and(|b| sites.contains(&b));
        let trig = weights.iter().filter(|(s, _)| sites.contains(s)).map(|(s, n)| (*s, *n)).collect();
        RunOutcome {
            terminated: !stuck,
            early: if stuck {
                vec![EarlyTrace { reason: "budget".into(), fault_count: 0, steps: 0, site_triggers: trig, evaluations: BTreeMap::new() }]
            } else {
                vec![]
            },
        }
    }
}

fn all_of(n: u32) -> Selection {
    let sites = (0..n).map(SiteId).collect::<BTreeSet<_>>();
    Selection { provenance: sites.iter().map(|s| (*s, vec![])).collect(), sites, target_assertions: BTreeSet::new() }
}

#[test]
fn growing_and_shrinking_with_a_fake_runner() {
    let order: Vec<SiteId> = (0..4).map(SiteId).collect();
    let sel = strategy_grow(all_of(4), &mut fake(None, BTreeMap::new()), Duration::from_secs(1), &order);
    assert_eq!(sel.sites, ids(&[0, 1, 2, 3]));
    let sel = strategy_grow(all_of(4), &mut fake(Some(SiteId(2)), BTreeMap::new()), Duration::from_secs(1), &order);
    assert_eq!(sel.sites, ids(&[0, 1, 3]));

    let sel = strategy_shrink(all_of(4), &mut fake(None, BTreeMap::new()), Duration::from_secs(1), 1).unwrap();
    assert_eq!(sel.sites, ids(&[0, 1, 2, 3]));
    let w = BTreeMap::from([(SiteId(0), 1), (SiteId(2), 50), (SiteId(3), 4)]);
    let sel = strategy_shrink(all_of(4), &mut fake(Some(SiteId(2)), w), Duration::from_secs(1), 1).unwrap();
    assert_eq!(sel.sites, ids(&[0, 1, 3]));
    assert_eq!(sel.provenance[&SiteId(0)], ["shrink"]);
}

#[test]
fn shrink_ties_remove_the_lower_id() {
    // sites 1 and 3 fire equally; the run only finishes once both are gone
    let w = BTreeMap::from([(SiteId(1), 7), (SiteId(3), 7)]);
    let mut calls = Vec::new();
    let mut runner = |sites: &BTreeSet<SiteId>, _: Duration| {
        calls.push(sites.clone());
        let stuck = sites.contains(&SiteId(1)) || sites.contains(&SiteId(3));
        let site_triggers = w.iter().filter(|(s, _)| sites.contains(s)).map(|(s, n)| (*s, *n)).collect();
        RunOutcome {
            terminated: !stuck,
            early: vec![EarlyTrace { reason: "budget".into(), fault_count: 0, steps: 0, site_triggers, evaluations: BTreeMap::new() }],
        }
    };
    let sel = strategy_shrink(all_of(4), &mut runner, Duration::from_secs(1), 1).unwrap();
    assert_eq!(sel.sites, ids(&[0, 2]));
    assert_eq!(calls[1], ids(&[0, 2, 3]), "site 1 goes first");
    assert_eq!(
        strategy_shrink(all_of(2), &mut fake(None, BTreeMap::new()), Duration::from_secs(1), 2),
        Err(SelectError::MultiFaultContext(2))
    );
}

const EXPLODING: &str = include_str!("../../tests/fixtures/exploding.fic");

#[test]
fn growing_rejects_the_exploding_site() {
    let p = parse(&SourceUnit::new("exploding.fic", EXPLODING, "main")).unwrap();
    let s = setup(&p, FaultModel::Data);
    let bound = s.r.sites.iter().find(|x| x.text == "n").unwrap().id;
    let sel = deps(&s);
    assert!(sel.sites.contains(&bound));
    let occ = count_occurrences(&s.r, &BTreeMap::new()).unwrap();
    let mut runner = SymexRunner { r: &s.r, cfgs: &s.cfgs, max_faults: 1 };
    let t = Instant::now();
    let grown = strategy_grow(sel.clone(), &mut runner, Duration::from_secs(2), &default_order(&sel, &occ));
    let mut want = sel.sites.clone();
    want.remove(&bound);
    assert_eq!(grown.sites, want);
    assert!(runner.run(&grown.sites, Duration::from_secs(2)).terminated);
    assert!(t.elapsed() < Duration::from_secs(30));

    let shrunk = strategy_shrink(sel, &mut runner, Duration::from_secs(2), 1).unwrap();
    assert_eq!(shrunk.sites, want, "the exploding site goes first");
}
