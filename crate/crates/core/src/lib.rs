//! Environment-aware least-privilege policies for containers.
//!
//! The pipeline runs a container under many launch options and workloads,
//! records which syscalls and capability checks each run performs once the
//! container is confined, and then picks a syscall allow-list and capability
//! set that meets a security target (worst allowed CVSS) and a functionality
//! target (share of environments that keep working).
//!
//! - [`option_syntax`]: option grammars, value validation and sampling.
//! - [`environment`]: environments, canonical ids and the execution plan.
//! - [`monitor`]: trace parsing and the per-namespace confinement state machine.
//! - [`explorer`]: adaptive value mutation and union inference.
//! - [`simharness`]: synthetic container models that stand in for a runtime.
//! - [`decision`]: scoring, synthesis and CVE mitigation checks.
//! - [`emit`]: seccomp profiles and capability flags.
//!
//! ```
//! use beacon::decision::{synthesize_policy, CveDb, ObservationStore, ScoreTargets};
//! use beacon::event::EventSet;
//!
//! let obs = ObservationStore::from_sets(
//!     "demo",
//!     [
//!         ("baseline", EventSet::from_names(["read", "write"])),
//!         ("with-init", EventSet::from_names(["read", "write", "setpgid"])),
//!     ],
//! );
//! let targets = ScoreTargets::new(0.0, 1.0).unwrap();
//! let outcome = synthesize_policy(&obs, &CveDb::bundled(), targets).unwrap();
//! let policy = outcome.policy().unwrap();
//! assert_eq!(policy.allowed, EventSet::from_names(["read", "write", "setpgid"]));
//! ```

pub mod decision;
pub mod emit;
pub mod environment;
pub mod event;
pub mod explorer;
pub mod monitor;
pub mod option_syntax;
pub mod simharness;

pub use event::{Event, EventSet};

use thiserror::Error;

/// Any error the library or CLI can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Option(#[from] option_syntax::OptionError),
    #[error(transparent)]
    Environment(#[from] environment::EnvironmentError),
    #[error(transparent)]
    Trace(#[from] monitor::TraceError),
    #[error(transparent)]
    Explore(#[from] explorer::ExploreError),
    #[error(transparent)]
    Model(#[from] simharness::ModelError),
    #[error(transparent)]
    Decision(#[from] decision::DecisionError),
    #[error(transparent)]
    Emit(#[from] emit::EmitError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl Error {
    /// Short machine-readable category used in CLI error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Option(_) => "option",
            Error::Environment(_) => "environment",
            Error::Trace(_) => "trace",
            Error::Explore(_) => "explore",
            Error::Model(_) => "model",
            Error::Decision(_) => "decision",
            Error::Emit(_) => "emit",
            Error::Io { .. } => "io",
            Error::Usage(_) => "usage",
        }
    }
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/options.md")]
    struct Options;
    #[doc = include_str!("../../../book/src/environments.md")]
    struct Environments;
    #[doc = include_str!("../../../book/src/monitoring.md")]
    struct Monitoring;
    #[doc = include_str!("../../../book/src/exploration.md")]
    struct Exploration;
    #[doc = include_str!("../../../book/src/synthesis.md")]
    struct Synthesis;
    #[doc = include_str!("../../../book/src/emission.md")]
    struct Emission;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
    #[doc = include_str!("../../../book/src/formats.md")]
    struct Formats;
}
