//! CVE records mapping attack-vector events to CVSS scores.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::DecisionError;
use crate::event::{Event, EventSet};

pub const CVEDB_HEADER: &str = "beacon-cvedb v1";

/// Attack-vector database bundled with the crate (illustrative CVSS values).
pub const DEFAULT_CVEDB: &str = include_str!("../../fixtures/cvedb.tsv");

/// One attack vector of a CVE. A CVE may appear on several rows when it has
/// alternative vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct CveEntry {
    pub cve_id: String,
    pub cvss: f64,
    pub attack_vector_events: EventSet,
}

impl CveEntry {
    pub fn new(cve_id: &str, cvss: f64, events: EventSet) -> Result<Self, DecisionError> {
        if !(0.0..=10.0).contains(&cvss) {
            return Err(DecisionError::CveDb(format!("{cve_id}: cvss {cvss} outside [0, 10]")));
        }
        if events.is_empty() {
            return Err(DecisionError::CveDb(format!("{cve_id}: empty attack vector")));
        }
        Ok(Self {
            cve_id: cve_id.to_owned(),
            cvss,
            attack_vector_events: events,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CveDb {
    entries: Vec<CveEntry>,
    worst: BTreeMap<Event, f64>,
}

impl CveDb {
    pub fn new(entries: Vec<CveEntry>) -> Self {
        let mut worst: BTreeMap<Event, f64> = BTreeMap::new();
        for e in &entries {
            for ev in e.attack_vector_events.iter() {
                let slot = worst.entry(ev).or_insert(0.0);
                *slot = slot.max(e.cvss);
            }
        }
        Self { entries, worst }
    }

    pub fn parse(text: &str) -> Result<Self, DecisionError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim_end() == CVEDB_HEADER => {}
            _ => {
                return Err(DecisionError::Header {
                    expected: CVEDB_HEADER,
                })
            }
        }
        let mut entries: Vec<CveEntry> = Vec::new();
        for (idx, raw) in lines {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |reason: &str| DecisionError::CveDb(format!("line {}: {reason}", idx + 1));
            let fields: Vec<&str> = line.split('\t').collect();
            let [id, cvss, events] = fields[..] else {
                return Err(bad("expected cve_id<TAB>cvss<TAB>events"));
            };
            let cvss: f64 = cvss.trim().parse().map_err(|_| bad("cvss is not a number"))?;
            let events = EventSet::from_names(
                events.split(',').map(str::trim).filter(|s| !s.is_empty()),
            );
            let entry = CveEntry::new(id.trim(), cvss, events).map_err(|e| bad(&e.to_string()))?;
            if !entries.contains(&entry) {
                entries.push(entry);
            }
        }
        Ok(Self::new(entries))
    }

    pub fn bundled() -> Self {
        Self::parse(DEFAULT_CVEDB).expect("bundled cve database parses")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{CVEDB_HEADER}\n");
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{}\t{}\t{}",
                e.cve_id,
                e.cvss,
                e.attack_vector_events.to_list_string()
            );
        }
        out
    }

    pub fn entries(&self) -> &[CveEntry] {
        &self.entries
    }

    /// Highest CVSS among entries whose vector contains `event`; 0 if none.
    pub fn cvss(&self, event: &Event) -> f64 {
        self.worst.get(event).copied().unwrap_or(0.0)
    }
}
