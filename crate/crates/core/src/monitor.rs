//! Trace replay through the per-namespace confinement state machine.
//!
//! A namespace is tracked from its `unshare` record on. Syscalls are recorded
//! only once `prctl` or `seccomp` has been seen for that namespace, and
//! capability checks only once `capset` has been seen. Records from untracked
//! namespaces are dropped.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::event::{canonical_capability, canonical_syscall, Event, EventSet};

pub const TRACE_HEADER: &str = "beacon-trace v1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("trace line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("record {index}: timestamp {timestamp} precedes {previous} in namespace {namespace}")]
    Ordering {
        index: usize,
        namespace: u64,
        timestamp: u64,
        previous: u64,
    },
    #[error("namespace {0} has no observations")]
    UnknownNamespace(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RecordKind {
    Syscall(String),
    Capability(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TraceRecord {
    pub timestamp: u64,
    pub namespace_id: u64,
    pub kind: RecordKind,
}

impl TraceRecord {
    pub fn syscall(timestamp: u64, namespace_id: u64, name: &str) -> Self {
        Self {
            timestamp,
            namespace_id,
            kind: RecordKind::Syscall(canonical_syscall(name)),
        }
    }

    pub fn capability(timestamp: u64, namespace_id: u64, name: &str) -> Self {
        Self {
            timestamp,
            namespace_id,
            kind: RecordKind::Capability(canonical_capability(name)),
        }
    }

    fn line(&self) -> String {
        match &self.kind {
            RecordKind::Syscall(n) => format!("{} {} SYS {}", self.timestamp, self.namespace_id, n),
            RecordKind::Capability(n) => {
                format!("{} {} CAP {}", self.timestamp, self.namespace_id, n)
            }
        }
    }
}

/// Parses a `beacon-trace v1` document.
pub fn parse_trace(text: &str) -> Result<Vec<TraceRecord>, TraceError> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    let mut lines = body.split('\n');
    match lines.next() {
        Some(TRACE_HEADER) => {}
        Some(other) => {
            return Err(TraceError::Format {
                line: 1,
                reason: format!("expected header `{TRACE_HEADER}`, found `{other}`"),
            })
        }
        None => unreachable!("split yields at least one item"),
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        if line.is_empty() {
            return Err(TraceError::Format {
                line: line_no,
                reason: "empty line".into(),
            });
        }
        records.push(parse_record(line).map_err(|reason| TraceError::Format {
            line: line_no,
            reason,
        })?);
    }
    Ok(records)
}

fn parse_record(line: &str) -> Result<TraceRecord, String> {
    let fields: Vec<&str> = line.split(' ').collect();
    let [ts, ns, kind, name] = fields[..] else {
        return Err(format!("expected 4 space-separated fields, found {}", fields.len()));
    };
    let timestamp = ts
        .parse::<u64>()
        .map_err(|_| format!("bad timestamp `{ts}`"))?;
    let namespace_id = ns
        .parse::<u64>()
        .map_err(|_| format!("bad namespace id `{ns}`"))?;
    if name.is_empty() {
        return Err("empty event name".into());
    }
    match kind {
        "SYS" => Ok(TraceRecord::syscall(timestamp, namespace_id, name)),
        "CAP" => Ok(TraceRecord::capability(timestamp, namespace_id, name)),
        other => Err(format!("unknown record kind `{other}`")),
    }
}

/// Serializes records as a `beacon-trace v1` document (LF-terminated).
pub fn write_trace<'a, I>(records: I) -> String
where
    I: IntoIterator<Item = &'a TraceRecord>,
{
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{}", r.line());
    }
    out
}

/// State kept for one tracked namespace.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NamespaceState {
    pub seccomp_flag: bool,
    pub capability_flag: bool,
    pub events: EventSet,
    /// Occurrences of each recorded event.
    pub counts: BTreeMap<Event, u64>,
}

impl NamespaceState {
    fn record(&mut self, event: Event) {
        *self.counts.entry(event.clone()).or_default() += 1;
        self.events.insert(event);
    }
}

/// Incremental state machine; feed records in trace order.
#[derive(Debug, Default)]
pub struct Monitor {
    states: BTreeMap<u64, NamespaceState>,
    last_seen: HashMap<u64, u64>,
    processed: usize,
}

impl Monitor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state(&self, namespace_id: u64) -> Option<&NamespaceState> {
        self.states.get(&namespace_id)
    }

    pub fn observe(&mut self, record: &TraceRecord) -> Result<(), TraceError> {
        let index = self.processed;
        let ns = record.namespace_id;
        if let Some(&previous) = self.last_seen.get(&ns) {
            if record.timestamp < previous {
                return Err(TraceError::Ordering {
                    index,
                    namespace: ns,
                    timestamp: record.timestamp,
                    previous,
                });
            }
        }
        self.last_seen.insert(ns, record.timestamp);
        self.processed += 1;

        match &record.kind {
            RecordKind::Syscall(name) => {
                let Some(state) = self.states.get_mut(&ns) else {
                    if name == "unshare" {
                        self.states.insert(ns, NamespaceState::default());
                    }
                    return Ok(());
                };
                if state.seccomp_flag {
                    state.record(Event::Syscall(name.clone()));
                }
                match name.as_str() {
                    "prctl" | "seccomp" => state.seccomp_flag = true,
                    "capset" => state.capability_flag = true,
                    _ => {}
                }
            }
            RecordKind::Capability(name) => {
                if let Some(state) = self.states.get_mut(&ns) {
                    if state.capability_flag {
                        state.record(Event::Capability(name.clone()));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn finish(self) -> BTreeMap<u64, NamespaceState> {
        self.states
    }
}

/// Replays `records` and returns the state of every tracked namespace.
pub fn ingest_trace<'a, I>(records: I) -> Result<BTreeMap<u64, NamespaceState>, TraceError>
where
    I: IntoIterator<Item = &'a TraceRecord>,
{
    let mut monitor = Monitor::new();
    for r in records {
        monitor.observe(r)?;
    }
    Ok(monitor.finish())
}

/// Event set observed for one environment run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observation {
    pub environment_id: String,
    pub events: EventSet,
    pub counts: BTreeMap<Event, u64>,
}

/// Labels the events of `namespace_id` with the environment that produced them.
pub fn event_set_for(
    environment_id: &str,
    results: &BTreeMap<u64, NamespaceState>,
    namespace_id: u64,
) -> Result<Observation, TraceError> {
    let state = results
        .get(&namespace_id)
        .ok_or(TraceError::UnknownNamespace(namespace_id))?;
    Ok(Observation {
        environment_id: environment_id.to_owned(),
        events: state.events.clone(),
        counts: state.counts.clone(),
    })
}
