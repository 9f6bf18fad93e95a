//! Discovery of environment-dependent events.
//!
//! [`mutate_option_values`] walks an integer option's value range with an
//! adaptive step: the step grows while probes turn up few new events and
//! shrinks when they turn up many, with both thresholds decaying over the
//! session. [`infer_combined_events`] and [`validate_inference`] cover the
//! union shortcut for environments that combine two factors.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::environment::{workload_presets, Environment, EnvironmentError};
use crate::event::EventSet;
use crate::monitor::{ingest_trace, parse_trace};
use crate::option_syntax::OptionSpec;

pub const EXPLORE_HEADER: &str = "beacon-explore v1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("probe failed: {0}")]
pub struct ProbeError(pub String);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExploreError {
    #[error("invalid mutation config: {0}")]
    Config(String),
    #[error("{source} (after {} probes)", partial.steps.len())]
    Probe {
        source: ProbeError,
        partial: Box<ExplorationLog>,
    },
    #[error(transparent)]
    Environment(#[from] EnvironmentError),
}

/// Evaluates an environment with one integer option set to `value`.
pub trait EventProbe {
    fn probe(&mut self, env: &Environment, value: i128) -> Result<EventSet, ProbeError>;
}

/// Evaluates a whole environment.
pub trait EnvironmentProbe {
    fn observe(&mut self, env: &Environment) -> Result<EventSet, ProbeError>;
}

impl<P: EventProbe + ?Sized> EventProbe for &mut P {
    fn probe(&mut self, env: &Environment, value: i128) -> Result<EventSet, ProbeError> {
        (**self).probe(env, value)
    }
}

impl<P: EnvironmentProbe + ?Sized> EnvironmentProbe for &mut P {
    fn observe(&mut self, env: &Environment) -> Result<EventSet, ProbeError> {
        (**self).observe(env)
    }
}

impl<P: EnvironmentProbe + ?Sized> EnvironmentProbe for Box<P> {
    fn observe(&mut self, env: &Environment) -> Result<EventSet, ProbeError> {
        (**self).observe(env)
    }
}

/// Adapts a closure into an [`EventProbe`].
pub struct FnProbe<F>(pub F);

impl<F> EventProbe for FnProbe<F>
where
    F: FnMut(&Environment, i128) -> Result<EventSet, ProbeError>,
{
    fn probe(&mut self, env: &Environment, value: i128) -> Result<EventSet, ProbeError> {
        (self.0)(env, value)
    }
}

impl<F> EnvironmentProbe for FnProbe<F>
where
    F: FnMut(&Environment) -> Result<EventSet, ProbeError>,
{
    fn observe(&mut self, env: &Environment) -> Result<EventSet, ProbeError> {
        (self.0)(env)
    }
}

/// Turns an [`EnvironmentProbe`] into an [`EventProbe`] by binding the
/// probed value to one catalog option.
pub struct OptionProbe<P> {
    pub spec: OptionSpec,
    pub inner: P,
}

impl<P: EnvironmentProbe> EventProbe for OptionProbe<P> {
    fn probe(&mut self, env: &Environment, value: i128) -> Result<EventSet, ProbeError> {
        let bound = self
            .spec
            .value_from_integer(value)
            .map_err(|e| ProbeError(e.to_string()))?;
        self.inner.observe(&env.with_option(bound))
    }
}

/// Runs an external program once per environment. The program receives the
/// environment's factors as arguments (option flags, then `W<n>` workload
/// names) and must print a trace on standard output; the events of every
/// tracked namespace are merged.
pub struct CommandProbe {
    pub program: PathBuf,
    pub leading_args: Vec<String>,
}

impl CommandProbe {
    pub fn new(program: impl Into<PathBuf>) -> Self {
        Self {
            program: program.into(),
            leading_args: Vec::new(),
        }
    }

    fn arguments(env: &Environment) -> Vec<String> {
        let mut args: Vec<String> = env.options().iter().flat_map(|o| o.render_args()).collect();
        let presets = workload_presets();
        for w in env.workloads() {
            match presets.iter().position(|p| p == w) {
                Some(i) => args.push(format!("W{}", i + 1)),
                None => args.push(format!("workload:{}", serde_json::to_string(w).expect("workload serializes"))),
            }
        }
        args
    }
}

impl EnvironmentProbe for CommandProbe {
    fn observe(&mut self, env: &Environment) -> Result<EventSet, ProbeError> {
        let output = Command::new(&self.program)
            .args(&self.leading_args)
            .args(Self::arguments(env))
            .output()
            .map_err(|e| ProbeError(format!("{}: {e}", self.program.display())))?;
        if !output.status.success() {
            return Err(ProbeError(format!(
                "{} exited with {}",
                self.program.display(),
                output.status
            )));
        }
        let text = String::from_utf8(output.stdout)
            .map_err(|_| ProbeError("probe output is not UTF-8".into()))?;
        let records = parse_trace(&text).map_err(|e| ProbeError(e.to_string()))?;
        let states = ingest_trace(&records).map_err(|e| ProbeError(e.to_string()))?;
        let mut events = EventSet::new();
        for s in states.values() {
            events.extend_from(&s.events);
        }
        Ok(events)
    }
}

/// Caches results per `(environment, value)` and counts calls that reached
/// the wrapped probe.
pub struct MemoProbe<P> {
    inner: P,
    cache: HashMap<(String, i128), EventSet>,
    invocations: usize,
}

impl<P> MemoProbe<P> {
    pub fn new(inner: P) -> Self {
        Self {
            inner,
            cache: HashMap::new(),
            invocations: 0,
        }
    }

    /// Calls forwarded to the wrapped probe (cache misses).
    pub fn invocations(&self) -> usize {
        self.invocations
    }

    pub fn into_inner(self) -> P {
        self.inner
    }
}

impl<P: EventProbe> EventProbe for MemoProbe<P> {
    fn probe(&mut self, env: &Environment, value: i128) -> Result<EventSet, ProbeError> {
        let key = (env.id().to_owned(), value);
        if let Some(hit) = self.cache.get(&key) {
            return Ok(hit.clone());
        }
        self.invocations += 1;
        let out = self.inner.probe(env, value)?;
        self.cache.insert(key, out.clone());
        Ok(out)
    }
}

/// Parameters of one mutation session.
#[derive(Debug, Clone, PartialEq)]
pub struct MutationConfig {
    pub v_min: i128,
    pub v_max: i128,
    /// Step scaling factor, > 1.
    pub r: f64,
    pub step_init: f64,
    pub it_max: usize,
    /// Probability of a random reset after each step.
    pub p: f64,
    pub t_base_lower: f64,
    pub t_base_upper: f64,
    pub lambda: f64,
    pub mu: f64,
    pub sigma: f64,
    pub seed: u64,
}

/// Lower bound on the step growth factor `r * (1 + N(mu, sigma))`.
pub const MIN_GROWTH_FACTOR: f64 = 1.1;

impl MutationConfig {
    /// Defaults for the value range `[v_min, v_max]`.
    pub fn for_range(v_min: i128, v_max: i128) -> Self {
        Self {
            v_min,
            v_max,
            r: 2.0,
            step_init: (((v_max - v_min) / 64) as f64).max(1.0),
            it_max: 100,
            p: 0.05,
            t_base_lower: 5.0,
            t_base_upper: 10.0,
            lambda: 0.03,
            mu: 0.0,
            sigma: 0.1,
            seed: 0,
        }
    }

    /// Defaults taken from the option's integer bounds.
    pub fn for_option(spec: &OptionSpec) -> Result<Self, ExploreError> {
        let (lo, hi) = spec.syntax.integer_bounds().ok_or_else(|| {
            ExploreError::Config(format!("option `{}` is not integer-valued", spec.name))
        })?;
        Ok(Self::for_range(lo, hi))
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    // Negated comparisons so that NaN parameters are rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), ExploreError> {
        let fail = |m: &str| Err(ExploreError::Config(m.to_owned()));
        if self.v_min > self.v_max {
            return fail("v_min must not exceed v_max");
        }
        if !(self.r > 1.0) || !self.r.is_finite() {
            return fail("r must be a finite number greater than 1");
        }
        if !(self.step_init > 0.0) || !self.step_init.is_finite() {
            return fail("step_init must be positive");
        }
        if self.it_max == 0 {
            return fail("it_max must be positive");
        }
        if !(0.0..=1.0).contains(&self.p) {
            return fail("p must lie in [0, 1]");
        }
        if !(self.t_base_lower < self.t_base_upper) {
            return fail("t_base_lower must be below t_base_upper");
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() || !self.mu.is_finite() {
            return fail("sigma must be finite and non-negative, mu finite");
        }
        if !self.lambda.is_finite() {
            return fail("lambda must be finite");
        }
        Ok(())
    }

    /// Applies a `key=value` override (`v_min`, `r`, `it_max`, `seed`, ...).
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ExploreError> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ExploreError> {
            value
                .parse()
                .map_err(|_| ExploreError::Config(format!("bad value `{value}` for {key}")))
        }
        match key {
            "v_min" => self.v_min = num(key, value)?,
            "v_max" => self.v_max = num(key, value)?,
            "r" => self.r = num(key, value)?,
            "step_init" => self.step_init = num(key, value)?,
            "it_max" => self.it_max = num(key, value)?,
            "p" => self.p = num(key, value)?,
            "t_base_lower" => self.t_base_lower = num(key, value)?,
            "t_base_upper" => self.t_base_upper = num(key, value)?,
            "lambda" => self.lambda = num(key, value)?,
            "mu" => self.mu = num(key, value)?,
            "sigma" => self.sigma = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            other => return Err(ExploreError::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// `(t_lower, t_upper)` at iteration `it`.
    pub fn thresholds(&self, it: usize) -> (f64, f64) {
        let decay = (-self.lambda * it as f64).exp();
        (self.t_base_lower * decay, self.t_base_upper * decay)
    }

    fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("v_min", self.v_min.to_string()),
            ("v_max", self.v_max.to_string()),
            ("r", self.r.to_string()),
            ("step_init", self.step_init.to_string()),
            ("it_max", self.it_max.to_string()),
            ("p", self.p.to_string()),
            ("t_base_lower", self.t_base_lower.to_string()),
            ("t_base_upper", self.t_base_upper.to_string()),
            ("lambda", self.lambda.to_string()),
            ("mu", self.mu.to_string()),
            ("sigma", self.sigma.to_string()),
            ("seed", self.seed.to_string()),
        ]
    }
}

/// One probed value.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationStep {
    pub it: usize,
    /// The value that was probed.
    pub v: i128,
    /// Step size after this iteration's adjustment.
    pub step: f64,
    /// Events first seen at this iteration.
    pub new_events: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepClamp {
    pub it: usize,
    pub offending: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationLog {
    pub config: MutationConfig,
    pub steps: Vec<ExplorationStep>,
    pub warnings: Vec<StepClamp>,
}

impl ExplorationLog {
    /// Text form: header, `# key=value` config echo, then `it v step new_events`.
    pub fn to_text(&self) -> String {
        let mut out = String::from(EXPLORE_HEADER);
        out.push('\n');
        for (k, v) in self.config.entries() {
            let _ = writeln!(out, "# {k}={v}");
        }
        let mut warnings = self.warnings.iter().peekable();
        for s in &self.steps {
            let _ = writeln!(out, "{} {} {} {}", s.it, s.v, s.step, s.new_events);
            while let Some(w) = warnings.next_if(|w| w.it == s.it) {
                let _ = writeln!(out, "# warning it={} step {} clamped to 1", w.it, w.offending);
            }
        }
        out
    }
}

impl fmt::Display for ExplorationLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Runs one adaptive mutation session over `[config.v_min, config.v_max]`.
///
/// The loop continues while the current value is within range and fewer than
/// `it_max` iterations have run. Returns every event seen along the way and
/// the per-iteration log.
pub fn mutate_option_values<P: EventProbe>(
    env: &Environment,
    config: &MutationConfig,
    mut probe: P,
) -> Result<(EventSet, ExplorationLog), ExploreError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let gaussian = Normal::new(config.mu, config.sigma)
        .map_err(|e| ExploreError::Config(e.to_string()))?;
    let mut log = ExplorationLog {
        config: config.clone(),
        steps: Vec::new(),
        warnings: Vec::new(),
    };

    // v is probed at round(shadow); the shadow keeps fractional steps.
    let mut shadow = rng.random_range(config.v_min..=config.v_max) as f64;
    let mut step = config.step_init;
    let mut events = EventSet::new();
    let mut it = 0;

    while (shadow.round() as i128) <= config.v_max && it < config.it_max {
        let v = shadow.round() as i128;
        let observed = match probe.probe(env, v) {
            Ok(e) => e,
            Err(source) => {
                return Err(ExploreError::Probe {
                    source,
                    partial: Box::new(log),
                })
            }
        };
        let (t_lower, t_upper) = config.thresholds(it);
        let new_events = observed.difference(&events).len();
        if (new_events as f64) < t_lower {
            let noise = gaussian.sample(&mut rng);
            step *= (config.r * (1.0 + noise)).max(MIN_GROWTH_FACTOR);
        } else if (new_events as f64) >= t_upper {
            step /= config.r;
        }
        if !step.is_finite() || step <= 0.0 {
            log.warnings.push(StepClamp { it, offending: step });
            step = 1.0;
        }
        shadow += step;
        if rng.random::<f64>() < config.p {
            shadow = rng.random_range(config.v_min..=config.v_max) as f64;
        }
        events.extend_from(&observed);
        log.steps.push(ExplorationStep {
            it,
            v,
            step,
            new_events,
        });
        it += 1;
    }
    Ok((events, log))
}

/// Event set estimate for an environment combining two profiled factors.
pub fn infer_combined_events(first: &EventSet, second: &EventSet) -> EventSet {
    first.union(second)
}

/// Comparison of inferred and observed events for one factor pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InferenceReport {
    pub inferred: EventSet,
    pub observed: EventSet,
    pub exact: bool,
    /// Size of the symmetric difference.
    pub delta: usize,
    /// `|inferred| - |observed|`.
    pub size_difference: i64,
}

/// Probes both singletons and their combination and compares the union
/// estimate with the combined observation.
pub fn validate_inference<P: EnvironmentProbe>(
    mut probe: P,
    baseline: &Environment,
    first: &Environment,
    second: &Environment,
) -> Result<InferenceReport, ExploreError> {
    let probe_err = |source: ProbeError| ExploreError::Probe {
        source,
        partial: Box::new(ExplorationLog {
            config: MutationConfig::for_range(0, 0),
            steps: Vec::new(),
            warnings: Vec::new(),
        }),
    };
    let e1 = probe.observe(&baseline.merge(first)?).map_err(probe_err)?;
    let e2 = probe.observe(&baseline.merge(second)?).map_err(probe_err)?;
    let combined_env = baseline.merge(first)?.merge(second)?;
    let observed = probe.observe(&combined_env).map_err(probe_err)?;
    let inferred = infer_combined_events(&e1, &e2);
    let delta = inferred.symmetric_difference_len(&observed);
    Ok(InferenceReport {
        exact: delta == 0,
        delta,
        size_difference: inferred.len() as i64 - observed.len() as i64,
        inferred,
        observed,
    })
}

/// Aggregate over many [`InferenceReport`]s.
#[derive(Debug, Clone, PartialEq)]
pub struct InferenceSummary {
    pub total: usize,
    pub exact: usize,
    /// Symmetric-difference size to number of pairs.
    pub delta_histogram: BTreeMap<usize, usize>,
    /// Signed set-size difference to number of pairs.
    pub size_difference_histogram: BTreeMap<i64, usize>,
}

impl InferenceSummary {
    pub fn from_reports<'a, I: IntoIterator<Item = &'a InferenceReport>>(reports: I) -> Self {
        let mut s = InferenceSummary {
            total: 0,
            exact: 0,
            delta_histogram: BTreeMap::new(),
            size_difference_histogram: BTreeMap::new(),
        };
        for r in reports {
            s.total += 1;
            s.exact += usize::from(r.exact);
            *s.delta_histogram.entry(r.delta).or_default() += 1;
            *s.size_difference_histogram
                .entry(r.size_difference)
                .or_default() += 1;
        }
        s
    }

    pub fn exact_rate(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.exact as f64 / self.total as f64
        }
    }
}
