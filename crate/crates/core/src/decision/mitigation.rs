use std::collections::BTreeMap;

use super::cvedb::CveDb;
use crate::event::EventSet;

/// Exposure of one CVE under a policy.
#[derive(Debug, Clone, PartialEq)]
pub struct MitigationRow {
    pub cve_id: String,
    pub cvss: f64,
    /// Alternative attack vectors, in database order.
    pub vectors: Vec<EventSet>,
    pub blocked: bool,
    /// Per vector, the events the policy does not allow.
    pub missing: Vec<EventSet>,
}

/// A vector is blocked when any of its events is not allowed; a CVE is
/// blocked when all of its vectors are.
pub fn check_mitigation(allowed: &EventSet, db: &CveDb) -> Vec<MitigationRow> {
    let mut rows: Vec<MitigationRow> = Vec::new();
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    for e in db.entries() {
        let missing = e.attack_vector_events.difference(allowed);
        let i = *index.entry(&e.cve_id).or_insert_with(|| {
            rows.push(MitigationRow {
                cve_id: e.cve_id.clone(),
                cvss: e.cvss,
                vectors: Vec::new(),
                blocked: true,
                missing: Vec::new(),
            });
            rows.len() - 1
        });
        let row = &mut rows[i];
        row.cvss = row.cvss.max(e.cvss);
        row.blocked &= !missing.is_empty();
        row.vectors.push(e.attack_vector_events.clone());
        row.missing.push(missing);
    }
    rows
}
