//! Narrowing the set of fault sites handed to symbolic execution.
//!
//! The sound steps (dependences, proven assertions, per-site proofs) never
//! lose an attack. Occurrence limits and strategy growing or shrinking are
//! heuristics whose results must be reported as incomplete.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::absint::{self, AbsResult, AnalysisOptions, AssertStatus, Interval, RunOptions, Termination};
use crate::depgraph::{dependent_sites, DepError, Pdg};
use crate::frontend::{build_all, AssertId, BlockId, Cfg, Terminator};
use crate::instrument::{insert_counters, site_points, FaultConfig, Registry, SiteId};
use crate::symex::{self, Budget, EarlyTrace, ExploreOptions};

pub const TAG_DEPS: &str = "deps";
pub const TAG_PROVE: &str = "prove";
pub const TAG_BRUTE: &str = "brute-force";
pub const TAG_OCC: &str = "occurrence";
pub const TAG_GROW: &str = "grow";
pub const TAG_SHRINK: &str = "shrink";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SelectError {
    #[error("this step is only valid for single-fault analysis (max_faults = {0})")]
    MultiFaultContext(u32),
    #[error("occurrence counting did not terminate within {0} steps")]
    NonTerminating(u64),
    #[error(transparent)]
    Dependence(#[from] DepError),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub sites: BTreeSet<SiteId>,
    /// Steps each site went through, in order.
    pub provenance: BTreeMap<SiteId, Vec<String>>,
    pub target_assertions: BTreeSet<AssertId>,
}

impl Selection {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Keep only `keep` and record `tag` on the survivors.
    fn retain(mut self, keep: &BTreeSet<SiteId>, tag: &str) -> Selection {
        self.sites.retain(|s| keep.contains(s));
        self.provenance.retain(|s, _| keep.contains(s));
        for s in &self.sites {
            self.provenance.entry(*s).or_default().push(tag.to_string());
        }
        self
    }

    pub fn config(&self) -> FaultConfig {
        FaultConfig::symbolic(self.sites.iter().copied())
    }
}

/// Sites the target assertions depend on.
pub fn select_by_dependency(g: &Pdg, targets: &BTreeSet<AssertId>) -> Result<Selection, SelectError> {
    let sites = dependent_sites(g, targets)?;
    Ok(Selection {
        provenance: sites.iter().map(|s| (*s, vec![TAG_DEPS.to_string()])).collect(),
        sites,
        target_assertions: targets.clone(),
    })
}

/// Drop assertions proven with every selected site symbolic, and the sites
/// only those assertions depended on.
pub fn eliminate_proven(sel: Selection, r: &Registry, cfgs: &[Cfg], g: &Pdg, budget: Duration) -> Selection {
    let opts = AnalysisOptions { timeout: budget, record_states: false, ..AnalysisOptions::default() };
    let a = absint::analyze(&r.program, cfgs, &sel.config(), &opts);
    if a.timed_out {
        return sel;
    }
    let mut out = sel;
    out.target_assertions.retain(|&id| a.status(id) == AssertStatus::Unproven);
    let keep = match dependent_sites(g, &out.target_assertions) {
        Ok(s) => s,
        Err(_) => return out,
    };
    out.retain(&keep, TAG_PROVE)
}

/// Drop every site that cannot violate a target on its own: with all other
/// sites inactive, the interval analysis proves all targets. Single fault only.
pub fn brute_force_filter(
    sel: Selection,
    r: &Registry,
    cfgs: &[Cfg],
    max_faults: u32,
    budget_per_site: Duration,
) -> Result<Selection, SelectError> {
    if max_faults > 1 {
        return Err(SelectError::MultiFaultContext(max_faults));
    }
    let opts = AnalysisOptions { timeout: budget_per_site, record_states: false, ..AnalysisOptions::default() };
    let sites: Vec<SiteId> = sel.sites.iter().copied().collect();
    let keep: BTreeSet<SiteId> = sites
        .par_iter()
        .filter(|&&s| {
            let alone = FaultConfig::symbolic([s]);
            let a = absint::analyze(&r.program, cfgs, &alone, &opts);
            a.timed_out || sel.target_assertions.iter().any(|&id| a.status(id) == AssertStatus::Unproven)
        })
        .copied()
        .collect();
    Ok(sel.retain(&keep, TAG_BRUTE))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccurrenceMap {
    /// Maximum number of evaluations of each site reached without faults.
    pub exact: BTreeMap<SiteId, u64>,
    /// Estimates for sites in code that is dead without faults.
    pub projected: BTreeMap<SiteId, u64>,
}

impl OccurrenceMap {
    /// Exact count when known, else the projection.
    pub fn count(&self, s: SiteId) -> Option<u64> {
        self.exact.get(&s).or_else(|| self.projected.get(&s)).copied()
    }
}

const COUNT_STEPS: u64 = 50_000_000;

/// Occurrences of every site with faults inactive, for `input`. Counters are
/// bounded by interval analysis; where that is imprecise the counts of a
/// concrete run on `input` are used instead.
pub fn count_occurrences(r: &Registry, input: &BTreeMap<String, i64>) -> Result<OccurrenceMap, SelectError> {
    let counted = insert_counters(r);
    let ccfgs = build_all(&counted);
    let mut opts = AnalysisOptions { record_states: false, ..AnalysisOptions::default() };
    for (k, &v) in input {
        opts.inputs.insert(k.clone(), Interval { lo: v, hi: v });
    }
    let a = absint::analyze(&counted, &ccfgs, &FaultConfig::none(), &opts);
    let top = |v: &Interval| a.timed_out || v.hi >= u32::MAX as i64;
    let mut exact = BTreeMap::new();
    let mut concrete: Option<BTreeMap<SiteId, i64>> = None;
    for s in &r.sites {
        let v = a.counter_max.get(&s.id).copied().unwrap_or(Interval::ZERO);
        let n = if top(&v) {
            if concrete.is_none() {
                let ropts = RunOptions { step_limit: COUNT_STEPS, ..RunOptions::default() };
                let t = absint::concrete_run(&counted, &ccfgs, input, &[], &ropts);
                if t.termination == Termination::StepLimit {
                    return Err(SelectError::NonTerminating(COUNT_STEPS));
                }
                concrete = Some(t.counters);
            }
            concrete.as_ref().and_then(|c| c.get(&s.id).copied()).unwrap_or(0)
        } else {
            v.hi
        };
        if n > 0 {
            exact.insert(s.id, n as u64);
        }
    }
    let cfgs = build_all(&r.program);
    let nominal = absint::analyze(&r.program, &cfgs, &FaultConfig::none(), &opts);
    Ok(project_occurrences(r, &cfgs, OccurrenceMap { exact, projected: BTreeMap::new() }, &nominal))
}

/// Give sites in nominally dead code the occurrence count of the branch
/// leading there, when a path through the dead region can evaluate them at
/// most once. Sites inside loops of the region get nothing.
pub fn project_occurrences(r: &Registry, cfgs: &[Cfg], occ: OccurrenceMap, a_nominal: &AbsResult) -> OccurrenceMap {
    let points = site_points(&r.program, cfgs);
    // sites evaluated at each block
    let mut at: BTreeMap<(usize, BlockId), Vec<SiteId>> = BTreeMap::new();
    for (s, pts) in &points {
        for pt in pts {
            at.entry((pt.func, pt.block)).or_default().push(*s);
        }
    }
    let mut out = occ;
    let mut projected: BTreeMap<SiteId, u64> = BTreeMap::new();
    for cfg in cfgs {
        let f = cfg.func;
        let dead = |b: BlockId| a_nominal.is_dead(f, b) && b != cfg.exit;
        for (b, bb) in cfg.blocks.iter().enumerate() {
            let Terminator::Branch { then_bb, else_bb, .. } = &bb.term else { continue };
            if !cfg.reachable[b] || dead(b) {
                continue;
            }
            let region_entry = match (dead(*then_bb), dead(*else_bb)) {
                (true, false) => *then_bb,
                (false, true) => *else_bb,
                _ => continue,
            };
            // how often the branch itself runs: a site evaluated once in its block
            let here = at.get(&(f, b)).cloned().unwrap_or_default();
            let Some(n) = here
                .iter()
                .filter(|s| here.iter().filter(|t| t == s).count() == 1)
                .filter_map(|s| out.exact.get(s))
                .max()
                .copied()
            else {
                continue;
            };
            for (s, k) in project_region(cfg, region_entry, &dead, &at, n) {
                if !out.exact.contains_key(&s) {
                    let e = projected.entry(s).or_insert(k);
                    *e = (*e).max(k);
                }
            }
        }
    }
    out.projected = projected;
    out
}

fn project_region(
    cfg: &Cfg,
    entry: BlockId,
    dead: &dyn Fn(BlockId) -> bool,
    at: &BTreeMap<(usize, BlockId), Vec<SiteId>>,
    n: u64,
) -> Vec<(SiteId, u64)> {
    let mut region = BTreeSet::new();
    let mut stack = vec![entry];
    while let Some(b) = stack.pop() {
        if dead(b) && region.insert(b) {
            stack.extend(cfg.successors(b));
        }
    }
    let succ = |b: BlockId| -> Vec<BlockId> { cfg.successors(b).into_iter().filter(|s| region.contains(s)).collect() };
    // blocks reachable from each block inside the region, in one or more steps
    let reach: BTreeMap<BlockId, HashSet<BlockId>> = region
        .iter()
        .map(|&b| {
            let mut seen = HashSet::new();
            let mut st = succ(b);
            while let Some(x) = st.pop() {
                if seen.insert(x) {
                    st.extend(succ(x));
                }
            }
            (b, seen)
        })
        .collect();
    let mut blocks_of: BTreeMap<SiteId, Vec<BlockId>> = BTreeMap::new();
    for &b in &region {
        for s in at.get(&(cfg.func, b)).into_iter().flatten() {
            blocks_of.entry(*s).or_default().push(b);
        }
    }
    blocks_of
        .into_iter()
        .filter(|(_, bs)| {
            let cyclic = bs.iter().any(|b| reach[b].contains(b));
            let twice = bs.iter().enumerate().any(|(i, x)| bs.iter().skip(i + 1).any(|y| x == y || reach[x].contains(y) || reach[y].contains(x)));
            !cyclic && !twice
        })
        .map(|(s, _)| (s, n))
        .collect()
}

/// Keep sites occurring at most `limit` times. Sites without any count are
/// dropped.
pub fn filter_by_occurrence(sel: Selection, occ: &OccurrenceMap, limit: u64) -> Selection {
    let keep = sel.sites.iter().copied().filter(|&s| occ.count(s).is_some_and(|n| n <= limit)).collect();
    sel.retain(&keep, TAG_OCC)
}

/// Sites by ascending occurrence count, then id. Sites without a count go last.
pub fn default_order(sel: &Selection, occ: &OccurrenceMap) -> Vec<SiteId> {
    let mut v: Vec<SiteId> = sel.sites.iter().copied().collect();
    v.sort_by_key(|&s| (occ.count(s).unwrap_or(u64::MAX), s));
    v
}

/// What a bounded symbolic run reports back to the growing and shrinking
/// heuristics.
#[derive(Debug, Clone, Default)]
pub struct RunOutcome {
    pub terminated: bool,
    pub early: Vec<EarlyTrace>,
}

pub trait Runner {
    fn run(&mut self, sites: &BTreeSet<SiteId>, budget: Duration) -> RunOutcome;
}

impl<F: FnMut(&BTreeSet<SiteId>, Duration) -> RunOutcome> Runner for F {
    fn run(&mut self, sites: &BTreeSet<SiteId>, budget: Duration) -> RunOutcome {
        self(sites, budget)
    }
}

/// Runs the symbolic engine with the given sites symbolic and the rest inactive.
pub struct SymexRunner<'a> {
    pub r: &'a Registry,
    pub cfgs: &'a [Cfg],
    pub max_faults: u32,
}

impl Runner for SymexRunner<'_> {
    fn run(&mut self, sites: &BTreeSet<SiteId>, budget: Duration) -> RunOutcome {
        let strategy = FaultConfig::symbolic(sites.iter().copied());
        let opts = ExploreOptions { budget: Budget::with_timeout(budget), ..ExploreOptions::faults(self.max_faults) };
        let abs = absint::analyze(&self.r.program, self.cfgs, &strategy, &AnalysisOptions { record_states: false, ..AnalysisOptions::default() });
        match symex::explore_with(self.r, self.cfgs, &strategy, &abs, &opts) {
            Ok(res) => RunOutcome { terminated: res.complete, early: res.early },
            Err(_) => RunOutcome::default(),
        }
    }
}

/// Add sites one at a time in `order`, keeping each one if the run with it
/// still finishes within `per_run`. The result depends on the order.
pub fn strategy_grow(sel: Selection, runner: &mut dyn Runner, per_run: Duration, order: &[SiteId]) -> Selection {
    let mut kept = BTreeSet::new();
    for &s in order.iter().filter(|s| sel.sites.contains(s)) {
        let mut probe = kept.clone();
        probe.insert(s);
        if runner.run(&probe, per_run).terminated {
            kept = probe;
        }
    }
    sel.retain(&kept, TAG_GROW)
}

/// Run the whole selection; while it does not finish within `budget`, drop
/// the site triggered most often by the unfinished traces (lower id on a
/// tie). Single fault only.
pub fn strategy_shrink(sel: Selection, runner: &mut dyn Runner, budget: Duration, max_faults: u32) -> Result<Selection, SelectError> {
    if max_faults > 1 {
        return Err(SelectError::MultiFaultContext(max_faults));
    }
    let mut kept = sel.sites.clone();
    while !kept.is_empty() {
        let out = runner.run(&kept, budget);
        if out.terminated {
            break;
        }
        let mut freq: BTreeMap<SiteId, u64> = kept.iter().map(|s| (*s, 0)).collect();
        for t in &out.early {
            for (s, n) in &t.site_triggers {
                if let Some(f) = freq.get_mut(s) {
                    *f += *n as u64;
                }
            }
        }
        // max by count; ties resolve to the first, i.e. lowest, id
        let worst = freq.iter().fold(None, |best: Option<(SiteId, u64)>, (&s, &n)| match best {
            Some((_, m)) if m >= n => best,
            _ => Some((s, n)),
        });
        match worst {
            Some((s, _)) => {
                kept.remove(&s);
            }
            None => break,
        }
    }
    Ok(sel.retain(&kept, TAG_SHRINK))
}

#[cfg(test)]
mod tests;
