//! Policy scoring and synthesis.
//!
//! A policy's security score is one minus the worst normalized CVSS among
//! its allowed events; its functionality score is the fraction of observed
//! environments whose whole event set it allows.

pub mod cvedb;
pub mod mitigation;
pub mod observations;
pub mod score;
pub mod synthesis;

use thiserror::Error;

pub use cvedb::{CveDb, CveEntry};
pub use mitigation::{check_mitigation, MitigationRow};
pub use observations::ObservationStore;
pub use score::{format_score, functionality_score, security_score};
pub use synthesis::{
    classify_events, sweep, synthesize_policy, Classification, EventClasses, Infeasible, Policy,
    ScoreTargets, SweepRow, Synthesis,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecisionError {
    #[error("missing or unsupported header, expected `{expected}`")]
    Header { expected: &'static str },
    #[error("cve database: {0}")]
    CveDb(String),
    #[error("observation store: {0}")]
    Observations(String),
    #[error("observation store has no environments")]
    EmptyObservations,
    #[error("policy file: {0}")]
    PolicyFormat(String),
    #[error("score targets: {0}")]
    Targets(String),
}
