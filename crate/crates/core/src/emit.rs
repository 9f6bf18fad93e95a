//! Deployable artifacts: seccomp profiles and capability flags.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decision::Policy;
use crate::event::{canonical_capability, is_known_capability, EventSet};

pub const DEFAULT_ACTION: &str = "SCMP_ACT_ERRNO";
pub const ALLOW_ACTION: &str = "SCMP_ACT_ALLOW";
pub const DEFAULT_ARCHITECTURES: [&str; 3] = ["SCMP_ARCH_X86_64", "SCMP_ARCH_X86", "SCMP_ARCH_X32"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmitError {
    #[error("unknown capability `{0}`")]
    UnknownCapability(String),
    #[error("seccomp profile: {0}")]
    Profile(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyscallRule {
    pub names: Vec<String>,
    pub action: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SeccompProfile {
    pub default_action: String,
    pub architectures: Vec<String>,
    pub syscalls: Vec<SyscallRule>,
}

impl SeccompProfile {
    /// Allow-list profile for `syscalls`, denying everything else with errno.
    pub fn allow_list<'a, I>(syscalls: I, architectures: &[&str]) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut names: Vec<String> = syscalls.into_iter().map(str::to_owned).collect();
        names.sort();
        names.dedup();
        let syscalls = if names.is_empty() {
            Vec::new()
        } else {
            vec![SyscallRule {
                names,
                action: ALLOW_ACTION.to_owned(),
            }]
        };
        Self {
            default_action: DEFAULT_ACTION.to_owned(),
            architectures: architectures.iter().map(|a| a.to_string()).collect(),
            syscalls,
        }
    }

    /// Pretty-printed JSON with two-space indent and a trailing newline.
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("profile serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self, EmitError> {
        serde_json::from_str(text).map_err(|e| EmitError::Profile(e.to_string()))
    }

    /// Syscalls allowed by the profile.
    pub fn allowed_syscalls(&self) -> Result<EventSet, EmitError> {
        let mut out = EventSet::new();
        for rule in &self.syscalls {
            if rule.action != ALLOW_ACTION {
                return Err(EmitError::Profile(format!("unsupported action `{}`", rule.action)));
            }
            for n in &rule.names {
                out.insert(crate::event::Event::syscall(n));
            }
        }
        Ok(out)
    }
}

/// Profile allowing exactly the policy's syscalls on the default architectures.
pub fn emit_seccomp_profile(policy: &Policy) -> String {
    SeccompProfile::allow_list(policy.syscalls(), &DEFAULT_ARCHITECTURES).to_json()
}

/// `--cap-drop=ALL` then one sorted `--cap-add=NAME` per allowed capability.
pub fn capability_flags<'a, I>(capabilities: I) -> Result<Vec<String>, EmitError>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut names = Vec::new();
    for c in capabilities {
        let canonical = canonical_capability(c);
        if !is_known_capability(&canonical) {
            return Err(EmitError::UnknownCapability(c.to_owned()));
        }
        names.push(canonical.trim_start_matches("CAP_").to_owned());
    }
    names.sort();
    names.dedup();
    let mut out = vec!["--cap-drop=ALL".to_owned()];
    out.extend(names.into_iter().map(|n| format!("--cap-add={n}")));
    Ok(out)
}

pub fn emit_capability_flags(policy: &Policy) -> Result<Vec<String>, EmitError> {
    capability_flags(policy.capabilities())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn read_write_profile() {
        let p = SeccompProfile::allow_list(["write", "read", "read"], &DEFAULT_ARCHITECTURES);
        let json = p.to_json();
        let expected = "{\n  \"defaultAction\": \"SCMP_ACT_ERRNO\",\n  \"architectures\": [\n    \"SCMP_ARCH_X86_64\",\n    \"SCMP_ARCH_X86\",\n    \"SCMP_ARCH_X32\"\n  ],\n  \"syscalls\": [\n    {\n      \"names\": [\n        \"read\",\n        \"write\"\n      ],\n      \"action\": \"SCMP_ACT_ALLOW\"\n    }\n  ]\n}\n";
        assert_eq!(json, expected);
        assert_eq!(SeccompProfile::from_json(&json).unwrap(), p);
    }

    #[test]
    fn empty_profile_denies_all() {
        let json = SeccompProfile::allow_list([], &DEFAULT_ARCHITECTURES).to_json();
        assert!(json.contains("\"syscalls\": []"));
        assert!(SeccompProfile::from_json(&json).unwrap().allowed_syscalls().unwrap().is_empty());
    }

    #[test]
    fn capability_flag_examples() {
        assert_eq!(capability_flags([]).unwrap(), vec!["--cap-drop=ALL"]);
        assert_eq!(
            capability_flags(["CAP_NET_BIND_SERVICE"]).unwrap(),
            vec!["--cap-drop=ALL", "--cap-add=NET_BIND_SERVICE"]
        );
        assert_eq!(
            capability_flags(["CAP_SETUID", "CAP_CHOWN"]).unwrap(),
            vec!["--cap-drop=ALL", "--cap-add=CHOWN", "--cap-add=SETUID"]
        );
        assert_eq!(
            capability_flags(["CAP_BOGUS"]),
            Err(EmitError::UnknownCapability("CAP_BOGUS".into()))
        );
    }

    #[test]
    fn rejects_foreign_profiles() {
        assert!(SeccompProfile::from_json("{}").is_err());
        let kill = r#"{"defaultAction":"SCMP_ACT_ERRNO","architectures":[],"syscalls":[{"names":["read"],"action":"SCMP_ACT_KILL"}]}"#;
        assert!(SeccompProfile::from_json(kill).unwrap().allowed_syscalls().is_err());
    }
}
