use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use super::cvedb::CveDb;
use super::observations::ObservationStore;
use super::score::{format_score, functionality_score, security_score};
use super::DecisionError;
use crate::event::{Event, EventSet};

pub const POLICY_HEADER: &str = "beacon-policy v1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreTargets {
    pub security_min: f64,
    pub functionality_min: f64,
}

impl ScoreTargets {
    pub fn new(security_min: f64, functionality_min: f64) -> Result<Self, DecisionError> {
        for (name, v) in [("security", security_min), ("functionality", functionality_min)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(DecisionError::Targets(format!("{name} target {v} outside [0, 1]")));
            }
        }
        Ok(Self {
            security_min,
            functionality_min,
        })
    }

    /// Highest admissible per-event CVSS.
    pub fn cvss_ceiling(&self) -> f64 {
        10.0 * (1.0 - self.security_min)
    }

    /// Whether an event with this CVSS keeps the security score at or
    /// above target. Evaluated in the same form as the score itself.
    pub fn admits(&self, cvss: f64) -> bool {
        1.0 - cvss / 10.0 >= self.security_min
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Classification {
    AlwaysIn,
    SporadicIncluded,
    SporadicExcluded,
    NeverObserved,
}

impl Classification {
    pub fn label(self) -> &'static str {
        match self {
            Classification::AlwaysIn => "always-in",
            Classification::SporadicIncluded => "sporadic-included",
            Classification::SporadicExcluded => "sporadic-excluded",
            Classification::NeverObserved => "never-observed",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        [
            Classification::AlwaysIn,
            Classification::SporadicIncluded,
            Classification::SporadicExcluded,
            Classification::NeverObserved,
        ]
        .into_iter()
        .find(|c| c.label() == s)
    }
}

/// Events seen in every environment, and those seen in some but not all.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventClasses {
    pub always: EventSet,
    pub sporadic: EventSet,
}

pub fn classify_events(obs: &ObservationStore) -> EventClasses {
    let n = obs.len();
    let mut always = EventSet::new();
    let mut sporadic = EventSet::new();
    for (e, f) in obs.frequencies() {
        if f == n {
            always.insert(e);
        } else {
            sporadic.insert(e);
        }
    }
    EventClasses { always, sporadic }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub container: String,
    pub targets: ScoreTargets,
    pub allowed: EventSet,
    pub achieved_security: f64,
    pub achieved_functionality: f64,
    pub classification: BTreeMap<Event, Classification>,
}

impl Policy {
    pub fn syscalls(&self) -> impl Iterator<Item = &str> {
        self.allowed.syscalls.iter().map(String::as_str)
    }

    pub fn capabilities(&self) -> impl Iterator<Item = &str> {
        self.allowed.capabilities.iter().map(String::as_str)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{POLICY_HEADER}\n");
        let _ = writeln!(out, "container\t{}", self.container);
        let _ = writeln!(out, "security_min\t{}", self.targets.security_min);
        let _ = writeln!(out, "functionality_min\t{}", self.targets.functionality_min);
        let _ = writeln!(out, "achieved_security\t{}", self.achieved_security);
        let _ = writeln!(out, "achieved_functionality\t{}", self.achieved_functionality);
        for (e, c) in &self.classification {
            let _ = writeln!(out, "event\t{}\t{}", e.name(), c.label());
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, DecisionError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim_end() == POLICY_HEADER => {}
            _ => return Err(DecisionError::Header { expected: POLICY_HEADER }),
        }
        let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
        let mut classification = BTreeMap::new();
        for (idx, raw) in lines {
            let line = raw.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let bad = |r: &str| DecisionError::PolicyFormat(format!("line {}: {r}", idx + 1));
            let parts: Vec<&str> = line.split('\t').collect();
            match parts[..] {
                ["event", name, class] => {
                    let c = Classification::from_label(class).ok_or_else(|| bad("unknown classification"))?;
                    if classification.insert(Event::parse(name), c).is_some() {
                        return Err(bad("event listed twice"));
                    }
                }
                [key, value] => {
                    if fields.insert(key, value).is_some() {
                        return Err(bad("field listed twice"));
                    }
                }
                _ => return Err(bad("expected key<TAB>value or event<TAB>name<TAB>class")),
            }
        }
        let get = |k: &str| {
            fields
                .get(k)
                .copied()
                .ok_or_else(|| DecisionError::PolicyFormat(format!("missing `{k}`")))
        };
        let num = |k: &str| -> Result<f64, DecisionError> {
            get(k)?
                .parse()
                .map_err(|_| DecisionError::PolicyFormat(format!("`{k}` is not a number")))
        };
        let allowed = classification
            .iter()
            .filter(|(_, c)| matches!(c, Classification::AlwaysIn | Classification::SporadicIncluded))
            .map(|(e, _)| e.clone())
            .collect();
        Ok(Policy {
            container: get("container")?.to_owned(),
            targets: ScoreTargets::new(num("security_min")?, num("functionality_min")?)?,
            allowed,
            achieved_security: num("achieved_security")?,
            achieved_functionality: num("achieved_functionality")?,
            classification,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Infeasible {
    /// An event present in every environment exceeds the CVSS ceiling.
    AlwaysEventTooSevere { event: Event, cvss: f64, ceiling: f64 },
    /// Even every admissible event leaves functionality below target.
    FunctionalityUnreachable {
        ceiling: f64,
        /// Excluded events occurring in environments the best policy misses.
        blocking: Vec<(Event, f64)>,
        best_security: f64,
        best_functionality: f64,
    },
}

impl fmt::Display for Infeasible {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Infeasible::AlwaysEventTooSevere { event, cvss, ceiling } => write!(
                f,
                "event {event} occurs in every environment but has CVSS {} above the ceiling {}",
                format_score(*cvss),
                format_score(*ceiling)
            ),
            Infeasible::FunctionalityUnreachable {
                blocking,
                best_security,
                best_functionality,
                ..
            } => {
                let names: Vec<String> = blocking.iter().map(|(e, c)| format!("{e}({c})")).collect();
                write!(
                    f,
                    "functionality target unreachable; blocked by {}; best achievable security {}, functionality {}",
                    names.join(","),
                    format_score(*best_security),
                    format_score(*best_functionality)
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Synthesis {
    Policy(Policy),
    Infeasible(Infeasible),
}

impl Synthesis {
    pub fn policy(&self) -> Option<&Policy> {
        match self {
            Synthesis::Policy(p) => Some(p),
            Synthesis::Infeasible(_) => None,
        }
    }
}

/// Builds the smallest greedy policy meeting both targets.
///
/// Events seen in every environment are always allowed. Other observed
/// events are admissible when their CVSS keeps the security target; they
/// are added by descending environment frequency, then ascending CVSS, then
/// name, until the functionality target is met.
pub fn synthesize_policy(
    obs: &ObservationStore,
    db: &CveDb,
    targets: ScoreTargets,
) -> Result<Synthesis, DecisionError> {
    if obs.is_empty() {
        return Err(DecisionError::EmptyObservations);
    }
    let classes = classify_events(obs);
    let ceiling = targets.cvss_ceiling();
    for e in classes.always.iter() {
        let cvss = db.cvss(&e);
        if !targets.admits(cvss) {
            return Ok(Synthesis::Infeasible(Infeasible::AlwaysEventTooSevere {
                event: e,
                cvss,
                ceiling,
            }));
        }
    }

    let freq = obs.frequencies();
    let (mut admissible, excluded): (Vec<Event>, Vec<Event>) =
        classes.sporadic.iter().partition(|e| targets.admits(db.cvss(e)));
    admissible.sort_by(|a, b| {
        freq[b]
            .cmp(&freq[a])
            .then_with(|| db.cvss(a).partial_cmp(&db.cvss(b)).unwrap_or(Ordering::Equal))
            .then_with(|| a.cmp(b))
    });

    let mut allowed = classes.always.clone();
    let mut queue = admissible.into_iter();
    while functionality_score(&allowed, obs) < targets.functionality_min {
        match queue.next() {
            Some(e) => {
                allowed.insert(e);
            }
            None => {
                let missed: Vec<&EventSet> = obs
                    .environments()
                    .map(|(_, v)| &v.events)
                    .filter(|s| !s.is_subset(&allowed))
                    .collect();
                let blocking = excluded
                    .iter()
                    .filter(|e| missed.iter().any(|s| s.contains(e)))
                    .map(|e| (e.clone(), db.cvss(e)))
                    .collect();
                return Ok(Synthesis::Infeasible(Infeasible::FunctionalityUnreachable {
                    ceiling,
                    blocking,
                    best_security: security_score(&allowed, db),
                    best_functionality: functionality_score(&allowed, obs),
                }));
            }
        }
    }

    let mut classification = BTreeMap::new();
    for e in classes.always.iter() {
        classification.insert(e, Classification::AlwaysIn);
    }
    for e in classes.sporadic.iter() {
        let c = if allowed.contains(&e) {
            Classification::SporadicIncluded
        } else {
            Classification::SporadicExcluded
        };
        classification.insert(e, c);
    }
    for entry in db.entries() {
        for e in entry.attack_vector_events.iter() {
            classification.entry(e).or_insert(Classification::NeverObserved);
        }
    }
    Ok(Synthesis::Policy(Policy {
        container: obs.container().to_owned(),
        targets,
        achieved_security: security_score(&allowed, db),
        achieved_functionality: functionality_score(&allowed, obs),
        allowed,
        classification,
    }))
}

/// One row of a target sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub targets: ScoreTargets,
    pub outcome: Synthesis,
}

impl SweepRow {
    /// Policy size, or `None` when the targets are infeasible.
    pub fn size(&self) -> Option<usize> {
        self.outcome.policy().map(|p| p.allowed.len())
    }
}

pub fn sweep(
    obs: &ObservationStore,
    db: &CveDb,
    targets: &[ScoreTargets],
) -> Result<Vec<SweepRow>, DecisionError> {
    targets
        .iter()
        .map(|&t| {
            Ok(SweepRow {
                targets: t,
                outcome: synthesize_policy(obs, db, t)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decision::cvedb::CveEntry;

    fn store(sets: &[(&str, &[&str])]) -> ObservationStore {
        ObservationStore::from_sets(
            "c",
            sets.iter()
                .map(|(id, ev)| (id.to_string(), EventSet::from_names(ev.iter().copied()))),
        )
    }

    fn db(rows: &[(&str, f64)]) -> CveDb {
        CveDb::new(
            rows.iter()
                .map(|(ev, c)| CveEntry::new(&format!("CVE-{ev}"), *c, EventSet::from_names([*ev])).unwrap())
                .collect(),
        )
    }

    #[test]
    fn classification() {
        let obs = store(&[("x1", &["a", "b"]), ("x2", &["a"]), ("x3", &["a", "c"])]);
        let c = classify_events(&obs);
        assert_eq!(c.always, EventSet::from_names(["a"]));
        assert_eq!(c.sporadic, EventSet::from_names(["b", "c"]));
    }

    #[test]
    fn functionality_first_includes_everything() {
        let obs = store(&[("x1", &["a"]), ("x2", &["a", "b"]), ("x3", &["a", "c"])]);
        let d = db(&[("c", 9.9)]);
        let s = synthesize_policy(&obs, &d, ScoreTargets::new(0.0, 1.0).unwrap()).unwrap();
        let p = s.policy().unwrap();
        assert_eq!(p.allowed, obs.observed_union());
        assert_eq!(p.achieved_functionality, 1.0);
        assert!((p.achieved_security - 0.01).abs() < 1e-12);
    }

    #[test]
    fn severe_sporadic_event_is_infeasible_at_full_functionality() {
        let obs = store(&[("x1", &["a"]), ("x2", &["a", "b"])]);
        let d = db(&[("b", 9.0)]);
        // brute force over the four subsets of {a, b}
        let mut any = false;
        for mask in 0..4u8 {
            let set = EventSet::from_names(
                ["a", "b"].iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, n)| *n),
            );
            any |= security_score(&set, &d) >= 0.5 && functionality_score(&set, &obs) >= 1.0;
        }
        assert!(!any);
        match synthesize_policy(&obs, &d, ScoreTargets::new(0.5, 1.0).unwrap()).unwrap() {
            Synthesis::Infeasible(Infeasible::FunctionalityUnreachable {
                blocking,
                best_functionality,
                best_security,
                ceiling,
            }) => {
                assert_eq!(blocking, vec![(Event::syscall("b"), 9.0)]);
                assert_eq!((best_security, best_functionality), (1.0, 0.5));
                assert_eq!(ceiling, 5.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn severe_always_event_is_named() {
        let obs = store(&[("x1", &["a"]), ("x2", &["a", "b"])]);
        let d = db(&[("a", 7.0)]);
        match synthesize_policy(&obs, &d, ScoreTargets::new(0.5, 0.0).unwrap()).unwrap() {
            Synthesis::Infeasible(Infeasible::AlwaysEventTooSevere { event, .. }) => {
                assert_eq!(event, Event::syscall("a"))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn greedy_order_and_early_stop() {
        // b in 2 of 4 envs, c in 1; reaching 0.5 needs only b
        let obs = store(&[
            ("x1", &["a"]),
            ("x2", &["a", "b"]),
            ("x3", &["a", "b", "c"]),
            ("x4", &["a", "c", "d"]),
        ]);
        let p = synthesize_policy(&obs, &db(&[]), ScoreTargets::new(0.0, 0.5).unwrap()).unwrap();
        let p = p.policy().unwrap().clone();
        assert_eq!(p.allowed, EventSet::from_names(["a", "b"]));
        assert_eq!(p.classification[&Event::syscall("c")], Classification::SporadicExcluded);
        // frequency tie broken by lower CVSS
        let obs = store(&[("x1", &["a"]), ("x2", &["a", "p"]), ("x3", &["a", "q"])]);
        let p = synthesize_policy(&obs, &db(&[("p", 4.0), ("q", 2.0)]), ScoreTargets::new(0.0, 0.6).unwrap())
            .unwrap();
        assert_eq!(p.policy().unwrap().allowed, EventSet::from_names(["a", "q"]));
    }

    #[test]
    fn greedy_size_can_grow_with_security_target() {
        // with c admissible one event covers 1/3; without it a and b are needed
        let obs = store(&[("x0", &[]), ("x1", &["a", "b"]), ("x2", &["c"]), ("x3", &["c"])]);
        let d = db(&[("c", 6.0)]);
        let low = synthesize_policy(&obs, &d, ScoreTargets::new(0.0, 0.5).unwrap()).unwrap();
        let high = synthesize_policy(&obs, &d, ScoreTargets::new(0.5, 0.5).unwrap()).unwrap();
        assert_eq!(low.policy().unwrap().allowed.len(), 1);
        assert_eq!(high.policy().unwrap().allowed.len(), 2);
    }

    #[test]
    fn never_observed_db_events_are_classified() {
        let obs = store(&[("x1", &["read"])]);
        let d = db(&[("madvise", 7.8)]);
        let s = synthesize_policy(&obs, &d, ScoreTargets::new(0.0, 1.0).unwrap()).unwrap();
        let p = s.policy().unwrap();
        assert!(!p.allowed.contains(&Event::syscall("madvise")));
        assert_eq!(p.classification[&Event::syscall("madvise")], Classification::NeverObserved);
        assert_eq!(Policy::parse(&p.to_text()).unwrap(), *p);
    }

    #[test]
    fn boundary_cvss_is_admissible() {
        let obs = store(&[("x1", &[]), ("x2", &["e"])]);
        for (cvss, s) in [(3.0, 0.7), (5.0, 0.5), (7.0, 0.3), (1.0, 0.9)] {
            let d = db(&[("e", cvss)]);
            let t = ScoreTargets::new(s, 1.0).unwrap();
            let p = synthesize_policy(&obs, &d, t).unwrap();
            let achieved = security_score(&EventSet::from_names(["e"]), &d);
            assert_eq!(p.policy().is_some(), achieved >= s, "cvss {cvss} target {s}");
        }
    }

    #[test]
    fn empty_store_is_an_error() {
        let obs = ObservationStore::new("c");
        assert_eq!(
            synthesize_policy(&obs, &db(&[]), ScoreTargets::new(0.0, 1.0).unwrap()),
            Err(DecisionError::EmptyObservations)
        );
        assert!(ScoreTargets::new(1.5, 0.0).is_err());
    }
}
