//! Per-environment event sets of one container.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::DecisionError;
use crate::event::{Event, EventSet};
use crate::monitor::Observation;

pub const OBS_HEADER: &str = "beacon-obs v1";

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EnvironmentEvents {
    pub events: EventSet,
    pub counts: BTreeMap<Event, u64>,
}

/// Observations keyed by environment id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationStore {
    container: String,
    environments: BTreeMap<String, EnvironmentEvents>,
}

impl ObservationStore {
    pub fn new(container: &str) -> Self {
        Self {
            container: container.to_owned(),
            environments: BTreeMap::new(),
        }
    }

    /// Store built directly from event sets, with every count set to 1.
    pub fn from_sets<I, S>(container: &str, sets: I) -> Self
    where
        I: IntoIterator<Item = (S, EventSet)>,
        S: Into<String>,
    {
        let mut store = Self::new(container);
        for (id, events) in sets {
            let counts = events.iter().map(|e| (e, 1)).collect();
            store.insert(&id.into(), events, counts);
        }
        store
    }

    pub fn container(&self) -> &str {
        &self.container
    }

    pub fn len(&self) -> usize {
        self.environments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.environments.is_empty()
    }

    pub fn environments(&self) -> impl Iterator<Item = (&str, &EnvironmentEvents)> {
        self.environments.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn get(&self, environment_id: &str) -> Option<&EnvironmentEvents> {
        self.environments.get(environment_id)
    }

    /// Adds events for an environment, merging with anything already stored.
    pub fn insert(&mut self, environment_id: &str, events: EventSet, counts: BTreeMap<Event, u64>) {
        let slot = self.environments.entry(environment_id.to_owned()).or_default();
        slot.events.extend_from(&events);
        for (e, n) in counts {
            *slot.counts.entry(e).or_default() += n;
        }
    }

    pub fn record(&mut self, observation: &Observation) {
        self.insert(
            &observation.environment_id,
            observation.events.clone(),
            observation.counts.clone(),
        );
    }

    /// Union of every environment's events.
    pub fn observed_union(&self) -> EventSet {
        let mut all = EventSet::new();
        for v in self.environments.values() {
            all.extend_from(&v.events);
        }
        all
    }

    /// Number of environments in which each observed event occurs.
    pub fn frequencies(&self) -> BTreeMap<Event, usize> {
        let mut out = BTreeMap::new();
        for v in self.environments.values() {
            for e in v.events.iter() {
                *out.entry(e).or_default() += 1;
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, DecisionError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim_end() == OBS_HEADER => {}
            _ => return Err(DecisionError::Header { expected: OBS_HEADER }),
        }
        let mut store: Option<ObservationStore> = None;
        for (idx, raw) in lines {
            let line = raw.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let bad = |reason: String| DecisionError::Observations(format!("line {}: {reason}", idx + 1));
            let fields: Vec<&str> = line.split('\t').collect();
            let [container, env_id, events] = fields[..] else {
                return Err(bad("expected container<TAB>environment<TAB>events".into()));
            };
            if env_id.is_empty() {
                return Err(bad("empty environment id".into()));
            }
            let s = store.get_or_insert_with(|| ObservationStore::new(container));
            if s.container != container {
                return Err(bad(format!(
                    "container `{container}` differs from `{}`",
                    s.container
                )));
            }
            let mut set = EventSet::new();
            let mut counts = BTreeMap::new();
            for item in events.split(',').filter(|s| !s.is_empty()) {
                let (name, count) = match item.rsplit_once(':') {
                    Some((n, c)) => (n, c.parse::<u64>().map_err(|_| bad(format!("bad count in `{item}`")))?),
                    None => (item, 1),
                };
                let event = Event::parse(name);
                set.insert(event.clone());
                *counts.entry(event).or_default() += count;
            }
            s.insert(env_id, set, counts);
        }
        store.ok_or(DecisionError::EmptyObservations)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{OBS_HEADER}\n");
        for (id, v) in &self.environments {
            let items: Vec<String> = v
                .events
                .iter()
                .map(|e| format!("{}:{}", e.name(), v.counts.get(&e).copied().unwrap_or(1)))
                .collect();
            let _ = writeln!(out, "{}\t{}\t{}", self.container, id, items.join(","));
        }
        out
    }
}
