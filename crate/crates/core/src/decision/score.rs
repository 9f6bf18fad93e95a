use super::cvedb::CveDb;
use super::observations::ObservationStore;
use crate::event::EventSet;

/// `1 - max CVSS(e) / 10` over the allowed events; 1 for an empty set.
pub fn security_score(allowed: &EventSet, db: &CveDb) -> f64 {
    let worst = allowed.iter().map(|e| db.cvss(&e)).fold(0.0, f64::max);
    1.0 - worst / 10.0
}

/// Fraction of environments whose whole event set is allowed.
pub fn functionality_score(allowed: &EventSet, obs: &ObservationStore) -> f64 {
    if obs.is_empty() {
        return 0.0;
    }
    let covered = obs
        .environments()
        .filter(|(_, v)| v.events.is_subset(allowed))
        .count();
    covered as f64 / obs.len() as f64
}

/// Score or CVSS value for display, rounded to six decimals so float noise
/// such as `0.19000000000000006` prints as `0.19`.
pub fn format_score(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decision::cvedb::CveEntry;

    fn db(rows: &[(&str, f64, &[&str])]) -> CveDb {
        CveDb::new(
            rows.iter()
                .map(|(id, c, ev)| CveEntry::new(id, *c, EventSet::from_names(ev.iter().copied())).unwrap())
                .collect(),
        )
    }

    #[test]
    fn security_examples() {
        let d = db(&[("W", 8.0, &["waitid"]), ("R", 3.0, &["read"])]);
        assert_eq!(security_score(&EventSet::new(), &d), 1.0);
        assert!((security_score(&EventSet::from_names(["waitid"]), &d) - 0.2).abs() < 1e-12);
        assert!((security_score(&EventSet::from_names(["read", "waitid"]), &d) - 0.2).abs() < 1e-12);
        assert_eq!(security_score(&EventSet::from_names(["getpid"]), &d), 1.0);
    }

    #[test]
    fn functionality_examples() {
        let obs = ObservationStore::from_sets(
            "c",
            [
                ("x1", EventSet::from_names(["a"])),
                ("x2", EventSet::from_names(["a", "b"])),
            ],
        );
        assert_eq!(functionality_score(&EventSet::from_names(["a"]), &obs), 0.5);
        assert_eq!(functionality_score(&obs.observed_union(), &obs), 1.0);
        assert_eq!(functionality_score(&EventSet::new(), &obs), 0.0);
        // capabilities are compared separately from syscalls
        let caps = ObservationStore::from_sets("c", [("x", EventSet::from_names(["CAP_CHOWN"]))]);
        assert_eq!(functionality_score(&EventSet::from_names(["chown"]), &caps), 0.0);
    }
}
