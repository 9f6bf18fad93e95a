//! Synthetic container models.
//!
//! A model maps an [`Environment`] to an [`EventSet`]: a fixed base set plus
//! the events of every rule whose triggers all match, with interaction rules
//! applied last. Models stand in for a real container engine and can emit
//! traces in the format the monitor ingests.

use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environment::{
    parse_factor, plan_environments, workload_presets, Environment, EnvironmentPlan, WorkloadSpec,
};
use crate::event::{Event, EventSet};
use crate::explorer::{EnvironmentProbe, ProbeError};
use crate::decision::ObservationStore;
use crate::monitor::{event_set_for, ingest_trace, parse_trace, write_trace, TraceError, TraceRecord};
use crate::option_syntax::{OptionCatalog, Payload};

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("model file: {0}")]
    Format(String),
    #[error("model file has model_version {0}, expected 1")]
    Version(u32),
    #[error("rule `{rule}`: {reason}")]
    Trigger { rule: String, reason: String },
    #[error("duplicate rule label `{0}`")]
    DuplicateRule(String),
    #[error("interaction refers to unknown rule `{0}`")]
    UnknownRule(String),
}

/// One condition over an environment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Trigger {
    /// The option is bound (a boolean flag must be `true`).
    OptionPresent(String),
    /// The option's value text equals `value`.
    OptionEquals { option: String, value: String },
    /// The option's integer reading lies in `[at_least, below)`.
    OptionRange {
        option: String,
        at_least: Option<i128>,
        below: Option<i128>,
    },
    /// Some applied workload has `field` in `[at_least, below)`.
    Workload {
        field: String,
        at_least: Option<u64>,
        below: Option<u64>,
    },
    /// Some applied workload equals the named preset.
    WorkloadPreset(String),
}

impl Trigger {
    fn is_workload(&self) -> bool {
        matches!(self, Trigger::Workload { .. } | Trigger::WorkloadPreset(_))
    }

    fn matches_options(&self, env: &Environment) -> bool {
        match self {
            Trigger::OptionPresent(name) => env
                .option(name)
                .is_some_and(|v| v.payload != Payload::Flag(false)),
            Trigger::OptionEquals { option, value } => {
                env.option(option).is_some_and(|v| v.value_text() == *value)
            }
            Trigger::OptionRange {
                option,
                at_least,
                below,
            } => env
                .option(option)
                .and_then(|v| v.as_integer())
                .is_some_and(|v| at_least.is_none_or(|lo| v >= lo) && below.is_none_or(|hi| v < hi)),
            Trigger::Workload { .. } | Trigger::WorkloadPreset(_) => true,
        }
    }

    fn matches_workload(&self, w: &WorkloadSpec) -> bool {
        match self {
            Trigger::Workload {
                field,
                at_least,
                below,
            } => w
                .field(field)
                .is_some_and(|v| at_least.is_none_or(|lo| v >= lo) && below.is_none_or(|hi| v < hi)),
            Trigger::WorkloadPreset(name) => WorkloadSpec::preset(name).is_ok_and(|p| p == *w),
            _ => true,
        }
    }
}

/// Events added when every trigger matches. Workload triggers of one rule
/// must all hold for the same applied workload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub label: String,
    pub when: Vec<Trigger>,
    pub added: EventSet,
}

impl Rule {
    pub fn matches(&self, env: &Environment) -> bool {
        if !self.when.iter().all(|t| t.matches_options(env)) {
            return false;
        }
        let workload: Vec<&Trigger> = self.when.iter().filter(|t| t.is_workload()).collect();
        workload.is_empty()
            || env
                .workloads()
                .iter()
                .any(|w| workload.iter().all(|t| t.matches_workload(w)))
    }
}

/// Adjustment applied when two rules both match.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interaction {
    pub first: String,
    pub second: String,
    pub added: EventSet,
    pub removed: EventSet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticContainerModel {
    pub name: String,
    pub base: EventSet,
    pub rules: Vec<Rule>,
    pub interactions: Vec<Interaction>,
}

impl SyntheticContainerModel {
    pub fn new(name: &str, base: EventSet) -> Self {
        Self {
            name: name.to_owned(),
            base,
            rules: Vec::new(),
            interactions: Vec::new(),
        }
    }

    /// Parses the TOML model format.
    pub fn from_toml(text: &str) -> Result<Self, ModelError> {
        let doc: ModelDoc = toml::from_str(text).map_err(|e| ModelError::Format(e.message().to_owned()))?;
        if doc.model_version != MODEL_VERSION {
            return Err(ModelError::Version(doc.model_version));
        }
        let mut labels = BTreeSet::new();
        let mut rules = Vec::new();
        for r in doc.rule {
            if !labels.insert(r.label.clone()) {
                return Err(ModelError::DuplicateRule(r.label));
            }
            if r.when.is_empty() {
                return Err(ModelError::Trigger {
                    rule: r.label,
                    reason: "rule has no triggers".into(),
                });
            }
            let when = r
                .when
                .into_iter()
                .map(|t| t.into_trigger())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|reason| ModelError::Trigger {
                    rule: r.label.clone(),
                    reason,
                })?;
            rules.push(Rule {
                label: r.label,
                when,
                added: EventSet::from_names(r.added),
            });
        }
        let mut interactions = Vec::new();
        for i in doc.interaction {
            let [first, second] = i.between;
            for l in [&first, &second] {
                if !labels.contains(l) {
                    return Err(ModelError::UnknownRule(l.clone()));
                }
            }
            interactions.push(Interaction {
                first,
                second,
                added: EventSet::from_names(i.added),
                removed: EventSet::from_names(i.removed),
            });
        }
        Ok(Self {
            name: doc.name,
            base: EventSet::from_names(doc.base),
            rules,
            interactions,
        })
    }

    pub fn to_toml(&self) -> String {
        let names = |s: &EventSet| s.iter().map(|e| e.name().to_owned()).collect::<Vec<_>>();
        let doc = ModelDoc {
            model_version: MODEL_VERSION,
            name: self.name.clone(),
            base: names(&self.base),
            rule: self
                .rules
                .iter()
                .map(|r| RuleDoc {
                    label: r.label.clone(),
                    added: names(&r.added),
                    when: r.when.iter().map(TriggerDoc::from_trigger).collect(),
                })
                .collect(),
            interaction: self
                .interactions
                .iter()
                .map(|i| InteractionDoc {
                    between: [i.first.clone(), i.second.clone()],
                    added: names(&i.added),
                    removed: names(&i.removed),
                })
                .collect(),
        };
        toml::to_string(&doc).expect("model serializes")
    }

    /// Labels of rules matching `env`, in declaration order.
    pub fn matched_rules(&self, env: &Environment) -> Vec<&str> {
        self.rules
            .iter()
            .filter(|r| r.matches(env))
            .map(|r| r.label.as_str())
            .collect()
    }

    pub fn evaluate(&self, env: &Environment) -> EventSet {
        let mut events = self.base.clone();
        let matched = self.matched_rules(env);
        for r in self.rules.iter().filter(|r| matched.contains(&r.label.as_str())) {
            events.extend_from(&r.added);
        }
        for i in &self.interactions {
            if matched.contains(&i.first.as_str()) && matched.contains(&i.second.as_str()) {
                events.extend_from(&i.added);
                for e in i.removed.iter() {
                    events.remove(&e);
                }
            }
        }
        events
    }

    /// Trace records for one run: `unshare`, `capset`, `prctl` markers, then
    /// every event once in seeded random order.
    ///
    /// `capset` precedes `prctl` so that neither marker is itself recorded.
    pub fn emit_records(&self, env: &Environment, namespace_id: u64, seed: u64) -> Vec<TraceRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut events: Vec<Event> = self.evaluate(env).iter().collect();
        events.shuffle(&mut rng);
        let mut ts: u64 = 1_000_000 + rng.random_range(0..1_000);
        let mut next = |rng: &mut ChaCha8Rng| {
            ts += rng.random_range(1..=1_000);
            ts
        };
        let mut out = Vec::with_capacity(events.len() + 3);
        for marker in ["unshare", "capset", "prctl"] {
            out.push(TraceRecord::syscall(next(&mut rng), namespace_id, marker));
        }
        for e in events {
            let t = next(&mut rng);
            out.push(match e {
                Event::Syscall(n) => TraceRecord::syscall(t, namespace_id, &n),
                Event::Capability(n) => TraceRecord::capability(t, namespace_id, &n),
            });
        }
        out
    }

    /// The trace text for [`SyntheticContainerModel::emit_records`].
    pub fn emit_trace(&self, env: &Environment, namespace_id: u64, seed: u64) -> String {
        write_trace(&self.emit_records(env, namespace_id, seed))
    }
}

impl EnvironmentProbe for SyntheticContainerModel {
    fn observe(&mut self, env: &Environment) -> Result<EventSet, ProbeError> {
        Ok(self.evaluate(env))
    }
}

impl EnvironmentProbe for &SyntheticContainerModel {
    fn observe(&mut self, env: &Environment) -> Result<EventSet, ProbeError> {
        Ok(self.evaluate(env))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    model_version: u32,
    name: String,
    #[serde(default)]
    base: Vec<String>,
    #[serde(default)]
    rule: Vec<RuleDoc>,
    #[serde(default)]
    interaction: Vec<InteractionDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleDoc {
    label: String,
    added: Vec<String>,
    when: Vec<TriggerDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InteractionDoc {
    between: [String; 2],
    #[serde(default)]
    added: Vec<String>,
    #[serde(default)]
    removed: Vec<String>,
}

#[derive(Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TriggerDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    option: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    equals: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    workload: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    at_least: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    below: Option<i64>,
}

impl TriggerDoc {
    fn into_trigger(self) -> Result<Trigger, String> {
        let bounded = self.at_least.is_some() || self.below.is_some();
        match (self.option, self.workload, self.preset) {
            (Some(option), None, None) => match (self.equals, bounded) {
                (Some(value), false) => Ok(Trigger::OptionEquals { option, value }),
                (None, true) => Ok(Trigger::OptionRange {
                    option,
                    at_least: self.at_least.map(i128::from),
                    below: self.below.map(i128::from),
                }),
                (None, false) => Ok(Trigger::OptionPresent(option)),
                (Some(_), true) => Err("`equals` cannot be combined with bounds".into()),
            },
            (None, Some(field), None) => {
                if workload_presets()[0].field(&field).is_none() {
                    return Err(format!("unknown workload field `{field}`"));
                }
                if self.equals.is_some() || !bounded {
                    return Err("workload triggers take `at_least` and/or `below`".into());
                }
                let unsigned = |v: Option<i64>| {
                    v.map(|v| u64::try_from(v).map_err(|_| "workload bounds must be non-negative".to_owned()))
                        .transpose()
                };
                Ok(Trigger::Workload {
                    field,
                    at_least: unsigned(self.at_least)?,
                    below: unsigned(self.below)?,
                })
            }
            (None, None, Some(preset)) => {
                if self.equals.is_some() || bounded {
                    return Err("`preset` takes no other keys".into());
                }
                WorkloadSpec::preset(&preset).map_err(|e| e.to_string())?;
                Ok(Trigger::WorkloadPreset(preset))
            }
            _ => Err("trigger needs exactly one of `option`, `workload`, `preset`".into()),
        }
    }

    fn from_trigger(t: &Trigger) -> Self {
        match t {
            Trigger::OptionPresent(o) => TriggerDoc {
                option: Some(o.clone()),
                ..Default::default()
            },
            Trigger::OptionEquals { option, value } => TriggerDoc {
                option: Some(option.clone()),
                equals: Some(value.clone()),
                ..Default::default()
            },
            Trigger::OptionRange {
                option,
                at_least,
                below,
            } => TriggerDoc {
                option: Some(option.clone()),
                at_least: at_least.map(|v| v as i64),
                below: below.map(|v| v as i64),
                ..Default::default()
            },
            Trigger::Workload {
                field,
                at_least,
                below,
            } => TriggerDoc {
                workload: Some(field.clone()),
                at_least: at_least.map(|v| v as i64),
                below: below.map(|v| v as i64),
                ..Default::default()
            },
            Trigger::WorkloadPreset(p) => TriggerDoc {
                preset: Some(p.clone()),
                ..Default::default()
            },
        }
    }
}

/// Shipped redis model.
pub const REDIS_MODEL: &str = include_str!("../fixtures/models/redis.toml");
/// Shipped nginx model.
pub const NGINX_MODEL: &str = include_str!("../fixtures/models/nginx.toml");

pub fn redis_model() -> SyntheticContainerModel {
    SyntheticContainerModel::from_toml(REDIS_MODEL).expect("bundled redis model parses")
}

pub fn nginx_model() -> SyntheticContainerModel {
    SyntheticContainerModel::from_toml(NGINX_MODEL).expect("bundled nginx model parses")
}

/// Shipped static file server model.
pub const STATIC_MODEL: &str = include_str!("../fixtures/models/static.toml");

pub fn static_model() -> SyntheticContainerModel {
    SyntheticContainerModel::from_toml(STATIC_MODEL).expect("bundled static model parses")
}

/// Every shipped model.
pub fn fixture_models() -> Vec<SyntheticContainerModel> {
    vec![redis_model(), nginx_model(), static_model()]
}

/// First namespace id assigned by [`profile_environments`].
pub const FIRST_NAMESPACE_ID: u64 = 4_026_532_200;

/// Runs every environment through trace emission and the monitor, storing
/// the resulting observations. Environment `i` uses namespace
/// `FIRST_NAMESPACE_ID + i` and trace seed `seed + i`.
pub fn profile_environments(
    model: &SyntheticContainerModel,
    environments: &[Environment],
    seed: u64,
) -> Result<ObservationStore, TraceError> {
    let mut store = ObservationStore::new(&model.name);
    for (i, env) in environments.iter().enumerate() {
        let ns = FIRST_NAMESPACE_ID + i as u64;
        let text = model.emit_trace(env, ns, seed.wrapping_add(i as u64));
        let states = ingest_trace(&parse_trace(&text)?)?;
        store.record(&event_set_for(env.id(), &states, ns)?);
    }
    Ok(store)
}

/// Factors profiled for the shipped observation stores.
pub const FIXTURE_FACTORS: [&str; 14] = [
    "--init",
    "--network=host",
    "--publish=8080:80",
    "--read-only",
    "--cpu-shares=1024",
    "--memory=512m",
    "W1",
    "W2",
    "W3",
    "W4",
    "W5",
    "W6",
    "W7",
    "W8",
];

/// Trace seed used for the shipped observation stores.
pub const FIXTURE_TRACE_SEED: u64 = 7;

/// Plan over [`FIXTURE_FACTORS`] with the bundled catalog.
pub fn fixture_plan() -> EnvironmentPlan {
    let catalog = OptionCatalog::bundled();
    let factors = FIXTURE_FACTORS
        .iter()
        .map(|f| parse_factor(&catalog, f).expect("fixture factor parses"))
        .collect();
    plan_environments(factors).expect("fixture factors are single and distinct")
}

/// Observation store for `model` over the baseline and every executed
/// environment of [`fixture_plan`].
pub fn fixture_store(model: &SyntheticContainerModel) -> ObservationStore {
    let plan = fixture_plan();
    let mut envs = vec![plan.baseline.clone()];
    envs.extend(plan.singleton_environments.iter().cloned());
    profile_environments(model, &envs, FIXTURE_TRACE_SEED).expect("emitted traces ingest")
}

/// x86-64 syscall names used when generating random models.
pub const SYSCALL_VOCABULARY: &[&str] = &[
    "read", "write", "open", "close", "stat", "fstat", "lstat", "poll", "lseek", "mmap",
    "mprotect", "munmap", "brk", "rt_sigaction", "rt_sigprocmask", "rt_sigreturn", "ioctl",
    "pread64", "pwrite64", "readv", "writev", "access", "pipe", "select", "sched_yield",
    "mremap", "msync", "mincore", "madvise", "shmget", "shmat", "shmctl", "dup", "dup2",
    "pause", "nanosleep", "getitimer", "alarm", "setitimer", "getpid", "sendfile", "socket",
    "connect", "accept", "sendto", "recvfrom", "sendmsg", "recvmsg", "shutdown", "bind",
    "listen", "getsockname", "getpeername", "socketpair", "setsockopt", "getsockopt", "clone",
    "fork", "vfork", "execve", "exit", "wait4", "kill", "uname", "semget", "semop", "semctl",
    "shmdt", "msgget", "msgsnd", "msgrcv", "msgctl", "fcntl", "flock", "fsync", "fdatasync",
    "truncate", "ftruncate", "getdents", "getcwd", "chdir", "fchdir", "rename", "mkdir",
    "rmdir", "creat", "link", "unlink", "symlink", "readlink", "chmod", "fchmod", "chown",
    "fchown", "lchown", "umask", "gettimeofday", "getrlimit", "getrusage", "sysinfo", "times",
    "ptrace", "getuid", "syslog", "getgid", "setuid", "setgid", "geteuid", "getegid",
    "setpgid", "getppid", "getpgrp", "setsid", "setreuid", "setregid", "getgroups",
    "setgroups", "setresuid", "getresuid", "setresgid", "getresgid", "getpgid", "setfsuid",
    "setfsgid", "getsid", "capget", "rt_sigpending", "rt_sigtimedwait", "rt_sigqueueinfo",
    "rt_sigsuspend", "sigaltstack", "utime", "mknod", "personality", "ustat", "statfs",
    "fstatfs", "getpriority", "setpriority", "sched_setparam", "sched_getparam",
    "sched_setscheduler", "sched_getscheduler", "mlock", "munlock", "mlockall", "munlockall",
    "vhangup", "pivot_root", "arch_prctl", "adjtimex", "setrlimit", "chroot", "sync", "acct",
    "settimeofday", "mount", "umount2", "swapon", "swapoff", "reboot", "sethostname",
    "setdomainname", "iopl", "ioperm", "init_module", "delete_module", "quotactl", "gettid",
    "readahead", "setxattr", "getxattr", "listxattr", "removexattr", "tkill", "time", "futex",
    "sched_setaffinity", "sched_getaffinity", "io_setup", "io_destroy", "io_getevents",
    "io_submit", "io_cancel", "epoll_create", "getdents64", "set_tid_address",
    "restart_syscall", "semtimedop", "fadvise64", "timer_create", "timer_settime",
    "timer_gettime", "timer_delete", "clock_settime", "clock_gettime", "clock_getres",
    "clock_nanosleep", "exit_group", "epoll_wait", "epoll_ctl", "tgkill", "utimes", "mbind",
    "waitid", "add_key", "request_key", "keyctl", "ioprio_set", "ioprio_get", "inotify_init",
    "inotify_add_watch", "inotify_rm_watch", "openat", "mkdirat", "fchownat", "newfstatat",
    "unlinkat", "renameat", "linkat", "symlinkat", "readlinkat", "fchmodat", "faccessat",
    "pselect6", "ppoll", "set_robust_list", "get_robust_list", "splice", "tee",
    "sync_file_range", "vmsplice", "move_pages", "utimensat", "epoll_pwait", "signalfd",
    "timerfd_create", "eventfd", "fallocate", "timerfd_settime", "timerfd_gettime", "accept4",
    "signalfd4", "eventfd2", "epoll_create1", "dup3", "pipe2", "inotify_init1", "preadv",
    "pwritev", "rt_tgsigqueueinfo", "perf_event_open", "recvmmsg", "fanotify_init",
    "prlimit64", "name_to_handle_at", "open_by_handle_at", "syncfs", "sendmmsg", "setns",
    "getcpu", "process_vm_readv", "process_vm_writev", "kcmp", "finit_module",
    "sched_setattr", "sched_getattr", "renameat2", "getrandom", "memfd_create", "bpf",
    "execveat", "userfaultfd", "membarrier", "mlock2", "copy_file_range", "preadv2",
    "pwritev2", "statx",
];

/// Triggers that fire for exactly the factors bound in `factor`: one
/// `OptionEquals` per option binding and one `WorkloadPreset` per preset
/// workload.
pub fn triggers_for(factor: &Environment) -> Vec<Trigger> {
    let presets = workload_presets();
    let mut out: Vec<Trigger> = factor
        .options()
        .iter()
        .map(|o| match o.payload {
            Payload::Flag(true) => Trigger::OptionPresent(o.spec_name.clone()),
            _ => Trigger::OptionEquals {
                option: o.spec_name.clone(),
                value: o.value_text(),
            },
        })
        .collect();
    for w in factor.workloads() {
        if let Some(i) = presets.iter().position(|p| p == w) {
            out.push(Trigger::WorkloadPreset(format!("W{}", i + 1)));
        }
    }
    out
}

/// Random model with one rule per factor. Base sets draw 20 to 40 names from
/// [`SYSCALL_VOCABULARY`]; each rule adds 1 to 4 names outside the base.
/// Rule labels are `f0`, `f1`, ...; no interactions are generated.
pub fn generate_model(name: &str, factors: &[Environment], seed: u64) -> SyntheticContainerModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<&str> = SYSCALL_VOCABULARY.to_vec();
    pool.shuffle(&mut rng);
    let base_len = rng.random_range(20..=40);
    let base = EventSet::from_names(pool[..base_len].iter().copied());
    let rest = &pool[base_len..];
    let mut model = SyntheticContainerModel::new(name, base);
    for (i, f) in factors.iter().enumerate() {
        let n = rng.random_range(1..=4);
        let added = EventSet::from_names(rest.choose_multiple(&mut rng, n).copied());
        model.rules.push(Rule {
            label: format!("f{i}"),
            when: triggers_for(f),
            added,
        });
    }
    model
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::compose_environment;
    use crate::option_syntax::{parse_flag, OptionCatalog};

    fn env(flags: &[&str], workload: Option<&str>) -> Environment {
        let cat = OptionCatalog::bundled();
        let options = flags.iter().map(|f| parse_flag(&cat, f).unwrap()).collect();
        compose_environment(options, workload.map(|w| WorkloadSpec::preset(w).unwrap())).unwrap()
    }

    fn extra(model: &SyntheticContainerModel, e: &Environment) -> EventSet {
        model.evaluate(e).difference(&model.base)
    }

    #[test]
    fn redis_init() {
        let m = redis_model();
        assert_eq!(
            extra(&m, &env(&["--init"], None)),
            EventSet::from_names(["rt_sigtimedwait", "setpgid"])
        );
        assert_eq!(m.evaluate(&Environment::baseline()), m.base);
    }

    #[test]
    fn nginx_host_network() {
        let m = nginx_model();
        assert_eq!(
            extra(&m, &env(&["--network=host"], None)),
            EventSet::from_names(["CAP_NET_BIND_SERVICE"])
        );
        assert!(extra(&m, &env(&["--network=bridge"], None)).is_empty());
    }

    #[test]
    fn redis_workloads() {
        let m = redis_model();
        assert_eq!(
            extra(&m, &env(&[], Some("W1"))),
            EventSet::from_names(["fsync", "fdatasync", "fadvise64"])
        );
        assert_eq!(
            extra(&m, &env(&[], Some("W7"))),
            EventSet::from_names(["writev", "shutdown", "sync_file_range"])
        );
    }

    #[test]
    fn empty_model_trace_has_only_markers() {
        let m = SyntheticContainerModel::new("empty", EventSet::new());
        let text = m.emit_trace(&Environment::baseline(), 7, 1);
        assert_eq!(text.lines().count(), 4);
        let out = ingest_trace(&parse_trace(&text).unwrap()).unwrap();
        assert!(out[&7].events.is_empty());
    }

    #[test]
    fn trace_round_trip_and_determinism() {
        let m = redis_model();
        let e = env(&["--init"], Some("W7"));
        let a = m.emit_trace(&e, 4026532200, 9);
        assert_eq!(a, m.emit_trace(&e, 4026532200, 9));
        let out = ingest_trace(&parse_trace(&a).unwrap()).unwrap();
        assert_eq!(out[&4026532200].events, m.evaluate(&e));
    }

    #[test]
    fn toml_round_trip() {
        for m in [redis_model(), nginx_model()] {
            assert_eq!(SyntheticContainerModel::from_toml(&m.to_toml()).unwrap(), m);
        }
    }

    #[test]
    fn interaction_applies_last() {
        let doc = r#"
model_version = 1
name = "t"
base = ["read"]

[[rule]]
label = "a"
added = ["x"]
when = [{ option = "init" }]

[[rule]]
label = "b"
added = ["y"]
when = [{ option = "read-only" }]

[[interaction]]
between = ["a", "b"]
added = ["z"]
removed = ["x"]
"#;
        let m = SyntheticContainerModel::from_toml(doc).unwrap();
        assert_eq!(m.evaluate(&env(&["--init"], None)), EventSet::from_names(["read", "x"]));
        assert_eq!(
            m.evaluate(&env(&["--init", "--read-only"], None)),
            EventSet::from_names(["read", "y", "z"])
        );
    }

    #[test]
    fn bad_models() {
        assert!(matches!(
            SyntheticContainerModel::from_toml("model_version = 2\nname = \"x\"\n"),
            Err(ModelError::Version(2))
        ));
        let unknown = "model_version = 1\nname = \"x\"\n[[interaction]]\nbetween = [\"a\", \"b\"]\n";
        assert!(matches!(
            SyntheticContainerModel::from_toml(unknown),
            Err(ModelError::UnknownRule(_))
        ));
        let bad_field = "model_version = 1\nname = \"x\"\n[[rule]]\nlabel = \"a\"\nadded = []\nwhen = [{ workload = \"speed\", at_least = 1 }]\n";
        assert!(matches!(
            SyntheticContainerModel::from_toml(bad_field),
            Err(ModelError::Trigger { .. })
        ));
    }

    #[test]
    fn generated_models_obey_union_law() {
        let factors = vec![
            env(&["--init"], None),
            env(&["--cpu-shares=512"], None),
            env(&[], Some("W3")),
            env(&["--network=host"], None),
        ];
        let m = generate_model("g", &factors, 42);
        for i in 0..factors.len() {
            for j in i + 1..factors.len() {
                let combined = factors[i].merge(&factors[j]).unwrap();
                assert_eq!(
                    m.evaluate(&combined),
                    m.evaluate(&factors[i]).union(&m.evaluate(&factors[j]))
                );
            }
        }
    }
}
