//! Container environments: option bindings plus applied workloads.
//!
//! An [`Environment`] is identified by a digest of its canonical text form,
//! so the same bindings given in any order produce the same id. An
//! [`EnvironmentPlan`] lists the single-factor environments that must be
//! executed and the factor pairs whose event sets are inferred by union.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use xxhash_rust::xxh3::xxh3_128;

use crate::option_syntax::{parse_flag, render_flag, OptionCatalog, OptionError, OptionValue};

/// Largest operation count accepted for a workload.
pub const MAX_OPERATION_COUNT: u64 = 100_000;

pub const PLAN_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnvironmentError {
    #[error("option `{0}` is bound more than once")]
    DuplicateOption(String),
    #[error("invalid workload: {0}")]
    Workload(String),
    #[error("factor {index} must vary exactly one option or workload, found {found}")]
    NotSingleFactor { index: usize, found: usize },
    #[error("factor `{0}` is listed more than once")]
    DuplicateFactor(String),
    #[error("unknown workload preset `{0}`")]
    UnknownPreset(String),
    #[error(transparent)]
    Option(#[from] OptionError),
    #[error("plan file: {0}")]
    PlanFormat(String),
}

/// Operation mix and record shape for one benchmark client run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub read_ops: u64,
    pub update_ops: u64,
    pub scan_ops: u64,
    pub insert_ops: u64,
    pub delete_ops: u64,
    pub field_count: u64,
    pub field_length: u64,
    pub thread_count: u64,
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<(), EnvironmentError> {
        let ops = [
            self.read_ops,
            self.update_ops,
            self.scan_ops,
            self.insert_ops,
            self.delete_ops,
        ];
        if ops.iter().all(|&n| n == 0) {
            return Err(EnvironmentError::Workload(
                "at least one operation count must be positive".into(),
            ));
        }
        if let Some(n) = ops.iter().find(|&&n| n > MAX_OPERATION_COUNT) {
            return Err(EnvironmentError::Workload(format!(
                "operation count {n} exceeds {MAX_OPERATION_COUNT}"
            )));
        }
        if self.field_count == 0 || self.field_length == 0 || self.thread_count == 0 {
            return Err(EnvironmentError::Workload(
                "field_count, field_length and thread_count must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Looks up `W1`..`W8` (case-insensitive).
    pub fn preset(name: &str) -> Result<Self, EnvironmentError> {
        let idx = name
            .trim()
            .strip_prefix(['W', 'w'])
            .and_then(|d| d.parse::<usize>().ok())
            .filter(|i| (1..=8).contains(i))
            .ok_or_else(|| EnvironmentError::UnknownPreset(name.to_owned()))?;
        Ok(workload_presets()[idx - 1])
    }

    fn canonical(&self) -> String {
        format!(
            "read={} update={} scan={} insert={} delete={} field_count={} field_length={} threads={}",
            self.read_ops,
            self.update_ops,
            self.scan_ops,
            self.insert_ops,
            self.delete_ops,
            self.field_count,
            self.field_length,
            self.thread_count
        )
    }

    /// Value of a named field, for rule predicates.
    pub fn field(&self, name: &str) -> Option<u64> {
        Some(match name {
            "read_ops" => self.read_ops,
            "update_ops" => self.update_ops,
            "scan_ops" => self.scan_ops,
            "insert_ops" => self.insert_ops,
            "delete_ops" => self.delete_ops,
            "field_count" => self.field_count,
            "field_length" => self.field_length,
            "thread_count" => self.thread_count,
            _ => return None,
        })
    }
}

const fn workload(ops: [u64; 5], field_count: u64, field_length: u64, thread_count: u64) -> WorkloadSpec {
    WorkloadSpec {
        read_ops: ops[0],
        update_ops: ops[1],
        scan_ops: ops[2],
        insert_ops: ops[3],
        delete_ops: ops[4],
        field_count,
        field_length,
        thread_count,
    }
}

/// The eight reference workloads `W1`..`W8`.
pub fn workload_presets() -> [WorkloadSpec; 8] {
    const K: u64 = 1000;
    [
        workload([K, 0, 0, K, 0], 10, 100, 1),
        workload([0, K, 0, K, 0], 10, 100, 1),
        workload([0, 0, K, K, 0], 10, 100, 1),
        workload([0, 0, 0, K, 0], 10, 100, 1),
        workload([0, 0, 0, K, K], 10, 100, 1),
        workload([K, 0, 0, K, 0], 500, 100, 1),
        workload([K, 0, 0, K, 0], 10, 10_000, 1),
        workload([K, 0, 0, K, 0], 10, 100, 500),
    ]
}

/// A set of option bindings and applied workloads.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Environment {
    id: String,
    options: Vec<OptionValue>,
    workloads: Vec<WorkloadSpec>,
}

impl Environment {
    pub fn baseline() -> Self {
        compose_environment(Vec::new(), None).expect("empty environment is valid")
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Bindings sorted by option name.
    pub fn options(&self) -> &[OptionValue] {
        &self.options
    }

    pub fn workloads(&self) -> &[WorkloadSpec] {
        &self.workloads
    }

    pub fn option(&self, name: &str) -> Option<&OptionValue> {
        self.options.iter().find(|o| o.spec_name == name)
    }

    pub fn is_baseline(&self) -> bool {
        self.options.is_empty() && self.workloads.is_empty()
    }

    /// Number of varied factors relative to the baseline.
    pub fn factor_count(&self) -> usize {
        self.options.len() + self.workloads.len()
    }

    /// Text that the id digests.
    pub fn canonical_text(&self) -> String {
        canonical_text(&self.options, &self.workloads)
    }

    /// Returns the same bindings with `value` added, replacing any binding of
    /// the same option.
    pub fn with_option(&self, value: OptionValue) -> Environment {
        let mut options: Vec<OptionValue> = self
            .options
            .iter()
            .filter(|o| o.spec_name != value.spec_name)
            .cloned()
            .collect();
        options.push(value);
        compose_with_workloads(options, self.workloads.clone()).expect("names are unique")
    }

    /// The environment applying every factor of both inputs.
    pub fn merge(&self, other: &Environment) -> Result<Environment, EnvironmentError> {
        let mut options = self.options.clone();
        options.extend(other.options.iter().cloned());
        let mut workloads = self.workloads.clone();
        workloads.extend(other.workloads.iter().copied());
        compose_with_workloads(options, workloads)
    }
}

impl fmt::Display for Environment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_baseline() {
            return f.write_str("baseline");
        }
        let mut parts: Vec<String> = self.options.iter().map(render_flag).collect();
        for w in &self.workloads {
            match workload_presets().iter().position(|p| p == w) {
                Some(i) => parts.push(format!("W{}", i + 1)),
                None => parts.push(format!("workload({})", w.canonical())),
            }
        }
        f.write_str(&parts.join(" "))
    }
}

fn canonical_text(options: &[OptionValue], workloads: &[WorkloadSpec]) -> String {
    let mut out = String::from("environment v1\n");
    for o in options {
        let _ = writeln!(out, "option {}", render_flag(o));
    }
    for w in workloads {
        let _ = writeln!(out, "workload {}", w.canonical());
    }
    out
}

/// 128-bit XXH3 of the canonical text, as 32 lower-case hex digits.
pub fn environment_digest(canonical: &str) -> String {
    format!("{:032x}", xxh3_128(canonical.as_bytes()))
}

/// Builds the canonical environment for `options` plus an optional workload.
pub fn compose_environment(
    options: Vec<OptionValue>,
    workload: Option<WorkloadSpec>,
) -> Result<Environment, EnvironmentError> {
    compose_with_workloads(options, workload.into_iter().collect())
}

/// Like [`compose_environment`] but with any number of concurrent workloads.
pub fn compose_with_workloads(
    mut options: Vec<OptionValue>,
    mut workloads: Vec<WorkloadSpec>,
) -> Result<Environment, EnvironmentError> {
    options.sort_by(|a, b| a.spec_name.cmp(&b.spec_name));
    for pair in options.windows(2) {
        if pair[0].spec_name == pair[1].spec_name {
            return Err(EnvironmentError::DuplicateOption(pair[0].spec_name.clone()));
        }
    }
    for w in &workloads {
        w.validate()?;
    }
    workloads.sort();
    let id = environment_digest(&canonical_text(&options, &workloads));
    Ok(Environment {
        id,
        options,
        workloads,
    })
}

/// Parses a single factor: a `--option[=value]` fragment or a workload
/// preset name (`W1`..`W8`, optionally written `workload:W1`).
pub fn parse_factor(catalog: &OptionCatalog, text: &str) -> Result<Environment, EnvironmentError> {
    let text = text.trim();
    if text.starts_with("--") {
        let value = parse_flag(catalog, text)?;
        return compose_environment(vec![value], None);
    }
    let preset = text.strip_prefix("workload:").unwrap_or(text);
    compose_environment(Vec::new(), Some(WorkloadSpec::preset(preset)?))
}

/// Singletons to execute and factor pairs to infer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvironmentPlan {
    pub baseline: Environment,
    pub singleton_environments: Vec<Environment>,
    /// Index pairs into `singleton_environments`, `i < j`.
    pub composed_environments: Vec<(usize, usize)>,
}

impl EnvironmentPlan {
    /// Environments that must actually run: the baseline plus every singleton.
    pub fn executed_count(&self) -> usize {
        self.singleton_environments.len() + 1
    }

    /// The combined environment for an inferred pair.
    pub fn composed(&self, pair: (usize, usize)) -> Environment {
        self.singleton_environments[pair.0]
            .merge(&self.singleton_environments[pair.1])
            .expect("planned pairs are composable")
    }

    pub fn to_toml(&self) -> String {
        let doc = PlanDocument {
            plan_version: PLAN_VERSION,
            baseline: PlanBaseline {
                id: self.baseline.id().to_owned(),
            },
            singleton: self
                .singleton_environments
                .iter()
                .map(|e| PlanEnvironment {
                    id: e.id().to_owned(),
                    options: e.options().iter().map(render_flag).collect(),
                    workloads: e.workloads().to_vec(),
                })
                .collect(),
            inferred: self
                .composed_environments
                .iter()
                .map(|&(i, j)| PlanPair {
                    id: self.composed((i, j)).id().to_owned(),
                    factors: [
                        self.singleton_environments[i].id().to_owned(),
                        self.singleton_environments[j].id().to_owned(),
                    ],
                })
                .collect(),
        };
        toml::to_string(&doc).expect("plan serializes")
    }

    /// Reads a plan file, re-validating every option against `catalog` and
    /// checking that the recorded ids match the content.
    pub fn from_toml(text: &str, catalog: &OptionCatalog) -> Result<Self, EnvironmentError> {
        let doc: PlanDocument =
            toml::from_str(text).map_err(|e| EnvironmentError::PlanFormat(e.message().to_owned()))?;
        if doc.plan_version != PLAN_VERSION {
            return Err(EnvironmentError::PlanFormat(format!(
                "unsupported plan_version {}",
                doc.plan_version
            )));
        }
        let baseline = Environment::baseline();
        if doc.baseline.id != baseline.id() {
            return Err(EnvironmentError::PlanFormat("baseline id mismatch".into()));
        }
        let mut singletons = Vec::new();
        for s in &doc.singleton {
            let options = s
                .options
                .iter()
                .map(|f| parse_flag(catalog, f))
                .collect::<Result<Vec<_>, _>>()?;
            let env = compose_with_workloads(options, s.workloads.clone())?;
            if env.id() != s.id {
                return Err(EnvironmentError::PlanFormat(format!(
                    "singleton id {} does not match its content",
                    s.id
                )));
            }
            singletons.push(env);
        }
        let index_of = |id: &str| {
            singletons
                .iter()
                .position(|e| e.id() == id)
                .ok_or_else(|| EnvironmentError::PlanFormat(format!("unknown factor id {id}")))
        };
        let mut pairs = Vec::new();
        for p in &doc.inferred {
            let (i, j) = (index_of(&p.factors[0])?, index_of(&p.factors[1])?);
            if i == j {
                return Err(EnvironmentError::PlanFormat(
                    "inferred pair references one factor twice".into(),
                ));
            }
            pairs.push((i.min(j), i.max(j)));
        }
        Ok(Self {
            baseline,
            singleton_environments: singletons,
            composed_environments: pairs,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct PlanDocument {
    plan_version: u32,
    baseline: PlanBaseline,
    #[serde(default)]
    singleton: Vec<PlanEnvironment>,
    #[serde(default)]
    inferred: Vec<PlanPair>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PlanBaseline {
    id: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct PlanEnvironment {
    id: String,
    #[serde(default)]
    options: Vec<String>,
    #[serde(default)]
    workloads: Vec<WorkloadSpec>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PlanPair {
    id: String,
    factors: [String; 2],
}

/// Plans execution of `factors` (each a single-factor environment).
///
/// Every singleton is executed together with the baseline; every unordered
/// pair is recorded for union inference. Pairs that bind the same option
/// twice cannot be applied together and are left out.
pub fn plan_environments(factors: Vec<Environment>) -> Result<EnvironmentPlan, EnvironmentError> {
    let mut seen = BTreeSet::new();
    for (index, f) in factors.iter().enumerate() {
        if f.factor_count() != 1 {
            return Err(EnvironmentError::NotSingleFactor {
                index,
                found: f.factor_count(),
            });
        }
        if !seen.insert(f.id().to_owned()) {
            return Err(EnvironmentError::DuplicateFactor(f.to_string()));
        }
    }
    let mut pairs = Vec::new();
    for i in 0..factors.len() {
        for j in i + 1..factors.len() {
            if factors[i].merge(&factors[j]).is_ok() {
                pairs.push((i, j));
            }
        }
    }
    Ok(EnvironmentPlan {
        baseline: Environment::baseline(),
        singleton_environments: factors,
        composed_environments: pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn catalog() -> OptionCatalog {
        OptionCatalog::bundled()
    }

    fn flag(text: &str) -> OptionValue {
        parse_flag(&catalog(), text).unwrap()
    }

    #[test]
    fn presets_match_reference_table() {
        let w = workload_presets();
        assert_eq!(w[0], workload([1000, 0, 0, 1000, 0], 10, 100, 1));
        assert_eq!(w[6].field_length, 10_000);
        assert_eq!(w[7].thread_count, 500);
        assert_eq!(w[5].field_count, 500);
        for p in &w {
            p.validate().unwrap();
        }
        assert_eq!(WorkloadSpec::preset("w7").unwrap(), w[6]);
        assert!(WorkloadSpec::preset("W9").is_err());
    }

    #[test]
    fn workload_validation() {
        let mut w = workload_presets()[0];
        w.read_ops = 0;
        w.insert_ops = 0;
        assert!(w.validate().is_err());
        let mut w = workload_presets()[0];
        w.read_ops = MAX_OPERATION_COUNT + 1;
        assert!(w.validate().is_err());
        let mut w = workload_presets()[0];
        w.thread_count = 0;
        assert!(w.validate().is_err());
    }

    #[test]
    fn baseline_id_is_stable() {
        assert_eq!(Environment::baseline().id(), Environment::baseline().id());
        assert_eq!(Environment::baseline().id().len(), 32);
        assert!(Environment::baseline().is_baseline());
    }

    #[test]
    fn order_independent_ids() {
        let w1 = Some(workload_presets()[0]);
        let a = compose_environment(vec![flag("--init"), flag("--tty")], w1).unwrap();
        let b = compose_environment(vec![flag("--tty"), flag("--init")], w1).unwrap();
        assert_eq!(a.id(), b.id());
        let c = compose_environment(vec![flag("--init")], None).unwrap();
        assert_eq!(c.id(), compose_environment(vec![flag("--init")], None).unwrap().id());
        assert_ne!(a.id(), c.id());
    }

    #[test]
    fn duplicate_option_conflicts() {
        let err = compose_environment(vec![flag("--init"), flag("--init=false")], None).unwrap_err();
        assert_eq!(err, EnvironmentError::DuplicateOption("init".into()));
    }

    #[test]
    fn plan_counts() {
        let cat = catalog();
        let factors: Vec<_> = ["--init", "--tty", "W1", "W2"]
            .iter()
            .map(|f| parse_factor(&cat, f).unwrap())
            .collect();
        let plan = plan_environments(factors).unwrap();
        assert_eq!(plan.singleton_environments.len(), 4);
        assert_eq!(plan.executed_count(), 5);
        assert_eq!(plan.composed_environments.len(), 6);

        let one = plan_environments(vec![parse_factor(&cat, "--init").unwrap()]).unwrap();
        assert_eq!(one.composed_environments.len(), 0);
        assert_eq!(one.executed_count(), 2);
    }

    #[test]
    fn plan_rejects_multi_factor_inputs() {
        let env = compose_environment(vec![flag("--init"), flag("--tty")], None).unwrap();
        assert!(matches!(
            plan_environments(vec![env]),
            Err(EnvironmentError::NotSingleFactor { index: 0, found: 2 })
        ));
        assert!(plan_environments(vec![Environment::baseline()]).is_err());
    }

    #[test]
    fn conflicting_pairs_are_skipped() {
        let cat = catalog();
        let factors = vec![
            parse_factor(&cat, "--network=host").unwrap(),
            parse_factor(&cat, "--network=none").unwrap(),
            parse_factor(&cat, "--init").unwrap(),
        ];
        let plan = plan_environments(factors).unwrap();
        assert_eq!(plan.composed_environments, vec![(0, 2), (1, 2)]);
    }

    #[test]
    fn plan_file_round_trip() {
        let cat = catalog();
        let factors: Vec<_> = ["--init", "--memory=512m", "W1", "W7"]
            .iter()
            .map(|f| parse_factor(&cat, f).unwrap())
            .collect();
        let plan = plan_environments(factors).unwrap();
        let text = plan.to_toml();
        assert!(text.starts_with("plan_version = 1\n"));
        assert_eq!(EnvironmentPlan::from_toml(&text, &cat).unwrap(), plan);
    }

    #[test]
    fn plan_file_rejects_tampering() {
        let cat = catalog();
        let plan = plan_environments(vec![parse_factor(&cat, "--init").unwrap()]).unwrap();
        let text = plan.to_toml().replace("--init", "--tty");
        assert!(EnvironmentPlan::from_toml(&text, &cat).is_err());
        let text = plan.to_toml().replace("plan_version = 1", "plan_version = 2");
        assert!(EnvironmentPlan::from_toml(&text, &cat).is_err());
    }
}
