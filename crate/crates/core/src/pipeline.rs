//! The end-to-end flow: select sites, explore them, report.
//!
//! Strategy files are small YAML documents naming the symbolic sites.
//! Run reports are JSON and carry everything `faultline report` compares.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::absint::{self, AnalysisOptions, AssertStatus};
use crate::depgraph::build_pdg;
use crate::frontend::{build_all, AssertId, Cfg};
use crate::instrument::{FaultConfig, FaultModel, FaultSetting, Registry, SiteId};
use crate::select::{self, OccurrenceMap, SelectError, Selection, SymexRunner};
use crate::symex::{self, AttackPath, Budget, EarlyTrace, ExploreOptions, ExploreStats, ReportTable, Search, SymexError};

pub const SCHEMA_VERSION: &str = "1.0";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("conflicting options: {0}")]
    FlagConflict(String),
    #[error("strategy file: {0}")]
    Strategy(String),
    #[error("unknown fault variable `{0}`")]
    UnknownSite(String),
    #[error("schema version {found} does not match {expected}")]
    SchemaMismatch { expected: String, found: String },
    #[error(transparent)]
    Select(#[from] SelectError),
    #[error(transparent)]
    Symex(#[from] SymexError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyFile {
    pub version: String,
    pub model: FaultModel,
    pub max_faults: u32,
    /// Fault variables left symbolic.
    pub sites: Vec<String>,
    /// Fault variables forced to a constant at every occurrence.
    #[serde(default)]
    pub fixed: BTreeMap<String, i64>,
}

impl StrategyFile {
    pub fn from_selection(r: &Registry, sel: &Selection, max_faults: u32) -> StrategyFile {
        StrategyFile {
            version: SCHEMA_VERSION.to_string(),
            model: r.model,
            max_faults,
            sites: sel.sites.iter().map(|s| s.to_string()).collect(),
            fixed: BTreeMap::new(),
        }
    }

    pub fn emit(&self) -> String {
        serde_yaml::to_string(self).expect("strategy is serializable")
    }

    pub fn parse(text: &str) -> Result<StrategyFile, PipelineError> {
        let s: StrategyFile = serde_yaml::from_str(text).map_err(|e| PipelineError::Strategy(e.to_string()))?;
        if s.version != SCHEMA_VERSION {
            return Err(PipelineError::SchemaMismatch { expected: SCHEMA_VERSION.into(), found: s.version });
        }
        Ok(s)
    }

    /// The fault configuration this file describes for `r`.
    pub fn resolve(&self, r: &Registry) -> Result<FaultConfig, PipelineError> {
        let site = |name: &str| -> Result<SiteId, PipelineError> {
            name.parse::<SiteId>()
                .ok()
                .filter(|s| (s.0 as usize) < r.sites.len())
                .ok_or_else(|| PipelineError::UnknownSite(name.to_string()))
        };
        let mut c = FaultConfig::none();
        for n in &self.sites {
            c.active.insert(site(n)?, FaultSetting::Symbolic);
        }
        for (n, v) in &self.fixed {
            c.active.insert(site(n)?, FaultSetting::Fixed(*v));
        }
        Ok(c)
    }
}

/// Which selection steps to run, in the fixed order deps, prove,
/// brute-force, occurrence limit, grow, shrink.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub deps: bool,
    pub prove: bool,
    pub brute_force: bool,
    pub occ_limit: Option<u64>,
    pub grow: bool,
    pub shrink: bool,
    pub max_faults: u32,
    /// Budget of one interval analysis.
    pub analysis_budget: Duration,
    /// Budget of one symbolic run while growing or shrinking.
    pub run_budget: Duration,
    /// Inputs for occurrence counting.
    pub harness: BTreeMap<String, i64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            deps: true,
            prove: true,
            brute_force: false,
            occ_limit: None,
            grow: false,
            shrink: false,
            max_faults: 1,
            analysis_budget: Duration::from_secs(30),
            run_budget: Duration::from_secs(10),
            harness: BTreeMap::new(),
        }
    }
}

impl PipelineConfig {
    /// The recommended pipeline: every sound step, brute force when single-fault.
    pub fn sound(max_faults: u32) -> PipelineConfig {
        PipelineConfig { brute_force: max_faults <= 1, max_faults, ..PipelineConfig::default() }
    }

    pub fn check(&self) -> Result<(), PipelineError> {
        if self.brute_force && self.max_faults > 1 {
            return Err(PipelineError::FlagConflict("brute-force selection needs max_faults = 1".into()));
        }
        if self.shrink && self.max_faults > 1 {
            return Err(PipelineError::FlagConflict("shrinking needs max_faults = 1".into()));
        }
        if self.grow && self.shrink {
            return Err(PipelineError::FlagConflict("choose one of grow and shrink".into()));
        }
        Ok(())
    }

    /// Does the result of this pipeline possibly miss attacks?
    pub fn heuristic(&self) -> bool {
        self.occ_limit.is_some() || self.grow || self.shrink
    }

    /// Short label such as `deps+prove+bf`.
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.deps {
            parts.push("deps".to_string());
        }
        if self.prove {
            parts.push("prove".to_string());
        }
        if self.brute_force {
            parts.push("bf".to_string());
        }
        if let Some(n) = self.occ_limit {
            parts.push(format!("occ{n}"));
        }
        if self.grow {
            parts.push("grow".to_string());
        }
        if self.shrink {
            parts.push("shrink".to_string());
        }
        if parts.is_empty() {
            "all".to_string()
        } else {
            parts.join("+")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: String,
    pub sites_before: usize,
    pub sites_after: usize,
    pub millis: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionRun {
    pub selection: Selection,
    pub steps: Vec<StepRecord>,
    pub occurrences: Option<OccurrenceMap>,
}

/// Run the configured selection steps on `r`.
pub fn run_selection(r: &Registry, cfgs: &[Cfg], cfg: &PipelineConfig) -> Result<SelectionRun, PipelineError> {
    cfg.check()?;
    let all_targets: BTreeSet<AssertId> = r.program.assertions().iter().map(|a| a.id).collect();
    let mut steps = Vec::new();
    let mut sel = Selection {
        sites: r.site_ids(),
        provenance: r.sites.iter().map(|s| (s.id, Vec::new())).collect(),
        target_assertions: all_targets.clone(),
    };
    let mut step = |name: &str, before: usize, sel: &Selection, t: Instant| {
        steps.push(StepRecord { step: name.to_string(), sites_before: before, sites_after: sel.len(), millis: t.elapsed().as_millis() as u64 });
    };
    let pdg = if cfg.deps || cfg.prove {
        let opts = AnalysisOptions { timeout: cfg.analysis_budget, ..AnalysisOptions::default() };
        let a = absint::analyze(&r.program, cfgs, &FaultConfig::all_symbolic(r), &opts);
        Some(build_pdg(r, cfgs, &a))
    } else {
        None
    };
    if cfg.deps {
        let t = Instant::now();
        let before = sel.len();
        sel = select::select_by_dependency(pdg.as_ref().expect("built above"), &all_targets)?;
        step(select::TAG_DEPS, before, &sel, t);
    }
    if cfg.prove {
        let t = Instant::now();
        let before = sel.len();
        sel = select::eliminate_proven(sel, r, cfgs, pdg.as_ref().expect("built above"), cfg.analysis_budget);
        step(select::TAG_PROVE, before, &sel, t);
    }
    if cfg.brute_force {
        let t = Instant::now();
        let before = sel.len();
        sel = select::brute_force_filter(sel, r, cfgs, cfg.max_faults, cfg.analysis_budget)?;
        step(select::TAG_BRUTE, before, &sel, t);
    }
    let mut occurrences = None;
    if cfg.occ_limit.is_some() || cfg.grow {
        occurrences = Some(select::count_occurrences(r, &cfg.harness)?);
    }
    if let (Some(limit), Some(occ)) = (cfg.occ_limit, &occurrences) {
        let t = Instant::now();
        let before = sel.len();
        sel = select::filter_by_occurrence(sel, occ, limit);
        step(select::TAG_OCC, before, &sel, t);
    }
    let mut runner = SymexRunner { r, cfgs, max_faults: cfg.max_faults };
    if cfg.grow {
        let t = Instant::now();
        let before = sel.len();
        let order = select::default_order(&sel, occurrences.as_ref().expect("counted above"));
        sel = select::strategy_grow(sel, &mut runner, cfg.run_budget, &order);
        step(select::TAG_GROW, before, &sel, t);
    }
    if cfg.shrink {
        let t = Instant::now();
        let before = sel.len();
        sel = select::strategy_shrink(sel, &mut runner, cfg.run_budget, cfg.max_faults)?;
        step(select::TAG_SHRINK, before, &sel, t);
    }
    Ok(SelectionRun { selection: sel, steps, occurrences })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackRecord {
    pub signature: String,
    pub assertion: AssertId,
    pub path: AttackPath,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub program: String,
    /// Pipeline label, e.g. `deps+prove`.
    pub config: String,
    pub model: FaultModel,
    pub max_faults: u32,
    pub steps: Vec<StepRecord>,
    pub total_sites: usize,
    pub sites: Vec<String>,
    pub provenance: BTreeMap<String, Vec<String>>,
    pub assertions_total: usize,
    pub assertions_unproven: usize,
    pub table: ReportTable,
    pub attacks: Vec<AttackRecord>,
    pub stats: ExploreStats,
    /// False when a heuristic selection ran or the exploration hit a limit.
    pub complete: bool,
    pub elapsed_ms: u64,
    /// Unfinished paths, kept out of the JSON (see `early_jsonl`).
    #[serde(skip)]
    pub early: Vec<EarlyTrace>,
}

impl RunReport {
    /// 1 when attacks were found, else 2 when the result is incomplete, else 0.
    pub fn exit_code(&self) -> i32 {
        if !self.attacks.is_empty() {
            1
        } else if !self.complete {
            2
        } else {
            0
        }
    }

    /// Unfinished paths as line-delimited JSON, for trace-guided shrinking.
    pub fn early_jsonl(&self) -> String {
        self.early.iter().map(|e| serde_json::to_string(e).expect("serializable") + "\n").collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serializable")
    }

    pub fn from_json(text: &str) -> Result<RunReport, PipelineError> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| PipelineError::Strategy(e.to_string()))?;
        let found = v.get("version").and_then(|x| x.as_str()).unwrap_or("").to_string();
        if found != SCHEMA_VERSION {
            return Err(PipelineError::SchemaMismatch { expected: SCHEMA_VERSION.into(), found });
        }
        serde_json::from_value(v).map_err(|e| PipelineError::Strategy(e.to_string()))
    }

    /// Human-readable summary: the attack table, then one line per attack.
    pub fn render(&self) -> String {
        let mut out = self.table.render(true);
        let _ = writeln!(out, "\n{} attack path(s), {} explored path(s), {} early trace(s){}", self.attacks.len(), self.table.explored_paths, self.table.early_traces, if self.complete { "" } else { ", incomplete" });
        for a in &self.attacks {
            let faults: Vec<String> = a.path.faults.iter().map(|f| format!("{}#{}={:#x}", f.site, f.occurrence, f.value)).collect();
            let _ = writeln!(out, "  {} via {}", a.assertion, faults.join(" "));
        }
        out
    }
}

/// Options of one attack run.
#[derive(Debug, Clone)]
pub struct AttackOptions {
    pub max_faults: u32,
    pub budget: Budget,
    pub search: Search,
}

/// Explore `strategy` and package the result as a report.
pub fn attack(r: &Registry, program: &str, strategy: &FaultConfig, opts: &AttackOptions) -> Result<RunReport, PipelineError> {
    let t = Instant::now();
    let cfgs = build_all(&r.program);
    let abs = absint::analyze(&r.program, &cfgs, strategy, &AnalysisOptions { record_states: false, ..AnalysisOptions::default() });
    let eo = ExploreOptions { max_faults: opts.max_faults, budget: opts.budget.clone(), search: opts.search };
    let res = symex::explore_with(r, &cfgs, strategy, &abs, &eo)?;
    let assertions = r.program.assertions();
    let unproven = assertions.iter().filter(|a| abs.status(a.id) == AssertStatus::Unproven).count();
    let sites: Vec<String> = strategy.active.iter().filter(|(_, s)| **s == FaultSetting::Symbolic).map(|(s, _)| s.to_string()).collect();
    Ok(RunReport {
        version: SCHEMA_VERSION.to_string(),
        program: program.to_string(),
        config: "strategy".to_string(),
        model: r.model,
        max_faults: opts.max_faults,
        steps: Vec::new(),
        total_sites: r.sites.len(),
        provenance: sites.iter().map(|s| (s.clone(), Vec::new())).collect(),
        sites,
        assertions_total: assertions.len(),
        assertions_unproven: unproven,
        table: res.table.clone(),
        attacks: res
            .attacks
            .iter()
            .map(|a| AttackRecord { signature: a.signature().to_string(), assertion: a.assertion, path: a.clone() })
            .collect(),
        stats: res.stats.clone(),
        complete: res.complete,
        elapsed_ms: t.elapsed().as_millis() as u64,
        early: res.early,
    })
}

/// Selection followed by an attack on the selected sites.
pub fn run_pipeline(r: &Registry, program: &str, cfg: &PipelineConfig, budget: Budget) -> Result<RunReport, PipelineError> {
    let t = Instant::now();
    let cfgs = build_all(&r.program);
    let run = run_selection(r, &cfgs, cfg)?;
    let opts = AttackOptions { max_faults: cfg.max_faults, budget, search: Search::Dfs };
    let mut rep = attack(r, program, &run.selection.config(), &opts)?;
    rep.config = cfg.label();
    rep.steps = run.steps;
    rep.provenance = run.selection.provenance.iter().map(|(s, p)| (s.to_string(), p.clone())).collect();
    rep.complete &= !cfg.heuristic();
    rep.elapsed_ms = t.elapsed().as_millis() as u64;
    Ok(rep)
}

/// Side-by-side comparison of reports, one row each.
pub fn compare_reports(reports: &[RunReport]) -> Result<String, PipelineError> {
    for r in reports {
        if r.version != SCHEMA_VERSION {
            return Err(PipelineError::SchemaMismatch { expected: SCHEMA_VERSION.into(), found: r.version.clone() });
        }
    }
    let rows: Vec<[String; 8]> = reports
        .iter()
        .map(|r| {
            [
                r.program.clone(),
                r.config.clone(),
                r.max_faults.to_string(),
                format!("{}/{}", r.sites.len(), r.total_sites),
                r.attacks.len().to_string(),
                r.table.explored_paths.to_string(),
                format!("{:.2}s", r.elapsed_ms as f64 / 1000.0),
                if r.complete { "yes" } else { "no" }.to_string(),
            ]
        })
        .collect();
    let head = ["program", "config", "faults", "IP", "AP", "EP", "time", "complete"];
    let mut w: Vec<usize> = head.iter().map(|h| h.len()).collect();
    for row in &rows {
        for (i, c) in row.iter().enumerate() {
            w[i] = w[i].max(c.len());
        }
    }
    let mut out = String::new();
    let line = |cells: Vec<&str>, out: &mut String| {
        let s: Vec<String> = cells.iter().enumerate().map(|(i, c)| format!("{c:<width$}", width = w[i])).collect();
        out.push_str(s.join("  ").trim_end());
        out.push('\n');
    };
    line(head.to_vec(), &mut out);
    line(w.iter().map(|n| "-".repeat(*n)).collect::<Vec<_>>().iter().map(|s| s.as_str()).collect(), &mut out);
    for row in &rows {
        line(row.iter().map(|s| s.as_str()).collect(), &mut out);
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
