use super::*;
use crate::corpus;
use crate::frontend::AssertOrigin;
use crate::instrument::instrument;

fn registry(c: corpus::CorpusProgram) -> Registry {
    instrument(&c.parse(), c.model)
}

fn sites(ids: &[u32]) -> FaultConfig {
    FaultConfig::symbolic(ids.iter().map(|&i| SiteId(i)))
}

fn user_assertion(r: &Registry) -> AssertId {
    r.program.assertions().iter().find(|a| a.origin == AssertOrigin::User).unwrap().id
}

#[test]
fn print_message_single_fault_hits_the_mask() {
    let r = registry(corpus::PRINT_MESSAGE);
    let res = explore(&r, &sites(&[0, 1, 2, 3, 4]), &ExploreOptions::faults(1)).unwrap();
    let sigs: Vec<Signature> = res.signatures().into_iter().collect();
    assert_eq!(
        sigs,
        vec![Signature { assertion: user_assertion(&r), sites: vec![SiteId(4)], faults: 1 }],
        "{:?}",
        res.stats
    );
    assert_eq!(res.table.zero_fault, 0);
    assert_eq!(res.table.rows[&SiteId(4)], vec![0, 1]);
    assert!(res.complete);
    assert_eq!(res.stats.replay_defects, 0);
}

#[test]
fn no_faults_no_attacks() {
    for c in corpus::variants() {
        let r = registry(c);
        let res = explore(&r, &FaultConfig::all_symbolic(&r), &ExploreOptions::faults(0)).unwrap();
        assert!(res.attacks.is_empty(), "{}: {:?}", c.name, res.signatures());
        assert!(res.complete, "{}", c.name);
    }
}

#[test]
fn unfeasible_branch_is_reached_by_inverting_the_first_test() {
    let r = registry(corpus::UNFEASIBLE);
    let res = explore(&r, &FaultConfig::all_symbolic(&r), &ExploreOptions::faults(1)).unwrap();
    let target = r
        .program
        .assertions()
        .iter()
        .find(|a| a.origin == AssertOrigin::User && crate::frontend::print_expr(&r.program, a.function, &a.cond).contains('!'))
        .unwrap()
        .id;
    let hit = res.attacks.iter().find(|a| a.assertion == target).expect("attack on a && !b");
    assert_eq!(hit.faults.len(), 1);
    let s = r.site(hit.faults[0].site);
    assert_eq!(s.text, "a && b");
    assert_eq!(hit.inputs.len(), 0);
}

#[test]
fn doubled_tests_need_two_faults() {
    let r = registry(corpus::BOOTLOADER.with_fixes());
    let all = FaultConfig::all_symbolic(&r);
    let one = explore(&r, &all, &ExploreOptions::faults(1)).unwrap();
    assert!(one.attacks.is_empty(), "{:?}", one.signatures());
    let two = explore(&r, &all, &ExploreOptions::faults(2)).unwrap();
    assert!(!two.attacks.is_empty());
    assert!(two.attacks.iter().all(|a| a.faults.len() == 2));
    assert_eq!(two.stats.replay_defects, 0);
}

#[test]
fn plain_bootloader_falls_to_one_fault() {
    let r = registry(corpus::BOOTLOADER);
    let one = explore(&r, &FaultConfig::all_symbolic(&r), &ExploreOptions::faults(1)).unwrap();
    assert!(!one.attacks.is_empty());
}

#[test]
fn corrupted_fault_value_fails_replay() {
    let r = registry(corpus::PRINT_MESSAGE);
    let strat = sites(&[0, 1, 2, 3, 4]);
    let res = explore(&r, &strat, &ExploreOptions::faults(1)).unwrap();
    let mut ap = res.attacks[0].clone();
    replay(&r, &strat, &ap).unwrap();
    ap.faults[0].value = 1;
    assert!(matches!(replay(&r, &strat, &ap), Err(SymexError::ReplayMismatch { .. })));
}

#[test]
fn fixed_sites_inject_everywhere() {
    // fault_4 fixed to a value that lifts the size above 255: no symbolic fault needed
    let r = registry(corpus::PRINT_MESSAGE);
    let mut strat = FaultConfig::none();
    strat.active.insert(SiteId(4), FaultSetting::Fixed(0x100));
    let res = explore(&r, &strat, &ExploreOptions::faults(0)).unwrap();
    assert_eq!(res.attacks.len(), 1);
    assert!(res.attacks[0].faults.is_empty());
    assert_eq!(res.table.zero_fault, 1);
}

#[test]
fn exploration_is_deterministic() {
    let r = registry(corpus::VERIFYPIN_BASIC);
    let all = FaultConfig::all_symbolic(&r);
    let a = explore(&r, &all, &ExploreOptions::faults(1)).unwrap();
    let b = explore(&r, &all, &ExploreOptions::faults(1)).unwrap();
    assert_eq!(a.table, b.table);
    assert_eq!(a.attacks, b.attacks);
}

#[test]
fn budget_exhaustion_leaves_early_traces() {
    let r = registry(corpus::PRINT_MESSAGE);
    let opts = ExploreOptions {
        max_faults: 2,
        budget: Budget { max_paths: Some(3), ..Budget::default() },
        search: Search::Dfs,
    };
    let res = explore(&r, &FaultConfig::all_symbolic(&r), &opts).unwrap();
    assert!(!res.complete);
    assert!(!res.early.is_empty());
    let line = res.early_jsonl();
    assert!(line.lines().next().unwrap().contains("site_triggers"));
}

#[test]
fn bfs_finds_the_same_signatures() {
    let r = registry(corpus::VERIFYPIN_BASIC);
    let all = FaultConfig::all_symbolic(&r);
    let a = explore(&r, &all, &ExploreOptions::faults(1)).unwrap();
    let b = explore(&r, &all, &ExploreOptions { search: Search::Bfs, ..ExploreOptions::faults(1) }).unwrap();
    assert_eq!(a.signatures(), b.signatures());
}
