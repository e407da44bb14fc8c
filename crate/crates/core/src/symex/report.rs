//! Attack counts per site and fault count, and their text table.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::engine::{AttackPath, ExploreStats};
use crate::instrument::SiteId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportTable {
    pub max_faults: u32,
    /// For each symbolic site, attack signatures using it with exactly `k`
    /// faults at index `k`.
    pub rows: BTreeMap<SiteId, Vec<u64>>,
    /// Attacks needing no fault at all.
    pub zero_fault: u64,
    pub total: u64,
    pub explored_paths: u64,
    pub early_traces: u64,
}

impl ReportTable {
    pub fn build(sites: &[SiteId], max_faults: u32, attacks: &[AttackPath], stats: &ExploreStats) -> ReportTable {
        let width = max_faults as usize + 1;
        let mut rows: BTreeMap<SiteId, Vec<u64>> = sites.iter().map(|s| (*s, vec![0; width])).collect();
        let mut zero_fault = 0;
        for a in attacks {
            let sig = a.signature();
            if sig.sites.is_empty() {
                zero_fault += 1;
            }
            let mut seen = sig.sites.clone();
            seen.dedup();
            for s in seen {
                let row = rows.entry(s).or_insert_with(|| vec![0; width]);
                row[(sig.faults as usize).min(width - 1)] += 1;
            }
        }
        ReportTable {
            max_faults,
            rows,
            zero_fault,
            total: attacks.len() as u64,
            explored_paths: stats.completed_paths + stats.early_traces,
            early_traces: stats.early_traces,
        }
    }

    /// Attacks involving `s`, over all fault counts.
    pub fn site_total(&self, s: SiteId) -> u64 {
        self.rows.get(&s).map_or(0, |r| r.iter().sum())
    }

    /// Text table with a row per site, only sites with attacks when `compact`.
    pub fn render(&self, compact: bool) -> String {
        let head: Vec<String> = (0..=self.max_faults).map(|k| format!("{k}-fault")).collect();
        let col = head.iter().map(|h| h.len()).max().unwrap_or(7).max(9);
        let mut names: Vec<(String, Vec<u64>)> = Vec::new();
        if self.zero_fault > 0 {
            let mut r = vec![0; self.max_faults as usize + 1];
            r[0] = self.zero_fault;
            names.push(("(no fault)".to_string(), r));
        }
        for (s, r) in &self.rows {
            if !compact || r.iter().any(|&n| n > 0) {
                names.push((s.to_string(), r.clone()));
            }
        }
        let first = names.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(17);
        let mut out = String::new();
        let _ = write!(out, "{:<first$}", "Fault Count");
        for h in &head {
            let _ = write!(out, "  {h:>col$}");
        }
        out.push('\n');
        out.push_str("Injection Point\n");
        out.push_str(&"-".repeat(first));
        for _ in &head {
            out.push_str("  ");
            out.push_str(&"-".repeat(col));
        }
        out.push('\n');
        for (n, r) in names {
            let _ = write!(out, "{n:<first$}");
            for v in r {
                let _ = write!(out, "  {v:>col$}");
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::AssertId;
    use crate::symex::engine::FaultEvent;

    fn attack(sites: &[u32]) -> AttackPath {
        AttackPath {
            assertion: AssertId(0),
            inputs: BTreeMap::new(),
            faults: sites
                .iter()
                .enumerate()
                .map(|(i, s)| FaultEvent { site: SiteId(*s), occurrence: i as u32 + 1, value: 1 })
                .collect(),
            trace: Vec::new(),
        }
    }

    #[test]
    fn rows_count_signatures_by_fault_count() {
        let t = ReportTable::build(
            &[SiteId(0), SiteId(4)],
            2,
            &[attack(&[4]), attack(&[0, 4]), attack(&[4, 4])],
            &ExploreStats::default(),
        );
        assert_eq!(t.rows[&SiteId(4)], vec![0, 1, 2]);
        assert_eq!(t.rows[&SiteId(0)], vec![0, 0, 1]);
        assert_eq!(t.site_total(SiteId(4)), 3);
    }

    #[test]
    fn renders_the_fault_count_table() {
        let t = ReportTable::build(&[SiteId(4)], 1, &[attack(&[4])], &ExploreStats::default());
        let s = t.render(true);
        let lines: Vec<&str> = s.lines().collect();
        assert!(lines[0].starts_with("Fault Count") && lines[0].contains("0-fault") && lines[0].contains("1-fault"));
        assert_eq!(lines[1], "Injection Point");
        let row: Vec<&str> = lines[3].split_whitespace().collect();
        assert_eq!(row, ["fault_4", "0", "1"]);
    }
}
