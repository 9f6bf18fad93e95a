//! System events: the syscall and capability vocabulary policies are built from.

use std::collections::BTreeSet;
use std::fmt;

/// The 38 capabilities defined by Linux 5.4 (`CAP_CHOWN` = 0 through
/// `CAP_AUDIT_READ` = 37), in kernel numbering order.
pub const LINUX_CAPABILITIES: [&str; 38] = [
    "CAP_CHOWN",
    "CAP_DAC_OVERRIDE",
    "CAP_DAC_READ_SEARCH",
    "CAP_FOWNER",
    "CAP_FSETID",
    "CAP_KILL",
    "CAP_SETGID",
    "CAP_SETUID",
    "CAP_SETPCAP",
    "CAP_LINUX_IMMUTABLE",
    "CAP_NET_BIND_SERVICE",
    "CAP_NET_BROADCAST",
    "CAP_NET_ADMIN",
    "CAP_NET_RAW",
    "CAP_IPC_LOCK",
    "CAP_IPC_OWNER",
    "CAP_SYS_MODULE",
    "CAP_SYS_RAWIO",
    "CAP_SYS_CHROOT",
    "CAP_SYS_PTRACE",
    "CAP_SYS_PACCT",
    "CAP_SYS_ADMIN",
    "CAP_SYS_BOOT",
    "CAP_SYS_NICE",
    "CAP_SYS_RESOURCE",
    "CAP_SYS_TIME",
    "CAP_SYS_TTY_CONFIG",
    "CAP_MKNOD",
    "CAP_LEASE",
    "CAP_AUDIT_WRITE",
    "CAP_AUDIT_CONTROL",
    "CAP_SETFCAP",
    "CAP_MAC_OVERRIDE",
    "CAP_MAC_ADMIN",
    "CAP_SYSLOG",
    "CAP_WAKE_ALARM",
    "CAP_BLOCK_SUSPEND",
    "CAP_AUDIT_READ",
];

/// Returns true if `name` (canonical `CAP_*` form) is one of the 38 known capabilities.
pub fn is_known_capability(name: &str) -> bool {
    LINUX_CAPABILITIES.contains(&name)
}

/// Canonical capability spelling: upper case with a `CAP_` prefix.
pub fn canonical_capability(name: &str) -> String {
    let upper = name.trim().to_ascii_uppercase();
    if upper.starts_with("CAP_") {
        upper
    } else {
        format!("CAP_{upper}")
    }
}

/// Canonical syscall spelling: lower case.
pub fn canonical_syscall(name: &str) -> String {
    name.trim().to_ascii_lowercase()
}

/// A single system event.
///
/// Ordering puts every syscall before every capability, then sorts by name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Event {
    Syscall(String),
    Capability(String),
}

impl Event {
    pub fn syscall(name: &str) -> Self {
        Event::Syscall(canonical_syscall(name))
    }

    pub fn capability(name: &str) -> Self {
        Event::Capability(canonical_capability(name))
    }

    /// Classifies a bare event name: anything spelled `CAP_*` (any case) is a
    /// capability, everything else a syscall.
    pub fn parse(name: &str) -> Self {
        if name.trim().to_ascii_uppercase().starts_with("CAP_") {
            Event::capability(name)
        } else {
            Event::syscall(name)
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Event::Syscall(n) | Event::Capability(n) => n,
        }
    }

    pub fn is_capability(&self) -> bool {
        matches!(self, Event::Capability(_))
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A set of syscalls plus a set of capabilities.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventSet {
    pub syscalls: BTreeSet<String>,
    pub capabilities: BTreeSet<String>,
}

impl EventSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a set from bare names, classifying each with [`Event::parse`].
    pub fn from_names<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        names.into_iter().map(|n| Event::parse(n.as_ref())).collect()
    }

    pub fn insert(&mut self, event: Event) -> bool {
        match event {
            Event::Syscall(n) => self.syscalls.insert(n),
            Event::Capability(n) => self.capabilities.insert(n),
        }
    }

    pub fn remove(&mut self, event: &Event) -> bool {
        match event {
            Event::Syscall(n) => self.syscalls.remove(n),
            Event::Capability(n) => self.capabilities.remove(n),
        }
    }

    pub fn contains(&self, event: &Event) -> bool {
        match event {
            Event::Syscall(n) => self.syscalls.contains(n),
            Event::Capability(n) => self.capabilities.contains(n),
        }
    }

    pub fn len(&self) -> usize {
        self.syscalls.len() + self.capabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.syscalls.is_empty() && self.capabilities.is_empty()
    }

    /// Iterates syscalls first, then capabilities, each in name order.
    pub fn iter(&self) -> impl Iterator<Item = Event> + '_ {
        self.syscalls
            .iter()
            .map(|n| Event::Syscall(n.clone()))
            .chain(self.capabilities.iter().map(|n| Event::Capability(n.clone())))
    }

    pub fn union(&self, other: &EventSet) -> EventSet {
        EventSet {
            syscalls: self.syscalls.union(&other.syscalls).cloned().collect(),
            capabilities: self
                .capabilities
                .union(&other.capabilities)
                .cloned()
                .collect(),
        }
    }

    pub fn extend_from(&mut self, other: &EventSet) {
        self.syscalls.extend(other.syscalls.iter().cloned());
        self.capabilities.extend(other.capabilities.iter().cloned());
    }

    /// Events in `self` that are not in `other`.
    pub fn difference(&self, other: &EventSet) -> EventSet {
        EventSet {
            syscalls: self.syscalls.difference(&other.syscalls).cloned().collect(),
            capabilities: self
                .capabilities
                .difference(&other.capabilities)
                .cloned()
                .collect(),
        }
    }

    pub fn symmetric_difference_len(&self, other: &EventSet) -> usize {
        self.syscalls.symmetric_difference(&other.syscalls).count()
            + self
                .capabilities
                .symmetric_difference(&other.capabilities)
                .count()
    }

    /// Componentwise subset test.
    pub fn is_subset(&self, other: &EventSet) -> bool {
        self.syscalls.is_subset(&other.syscalls) && self.capabilities.is_subset(&other.capabilities)
    }

    /// Comma-separated names, syscalls first.
    pub fn to_list_string(&self) -> String {
        self.iter()
            .map(|e| e.name().to_owned())
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl FromIterator<Event> for EventSet {
    fn from_iter<T: IntoIterator<Item = Event>>(iter: T) -> Self {
        let mut set = EventSet::new();
        for e in iter {
            set.insert(e);
        }
        set
    }
}

impl Extend<Event> for EventSet {
    fn extend<T: IntoIterator<Item = Event>>(&mut self, iter: T) {
        for e in iter {
            self.insert(e);
        }
    }
}

impl fmt::Display for EventSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.to_list_string())
    }
}
