use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use beacon::decision::{
    check_mitigation, format_score, functionality_score, security_score, sweep, synthesize_policy, CveDb,
    Infeasible, ObservationStore, Policy, ScoreTargets, Synthesis,
};
use beacon::emit::{emit_capability_flags, emit_seccomp_profile};
use beacon::environment::{parse_factor, Environment, EnvironmentPlan};
use beacon::event::EventSet;
use beacon::explorer::{
    mutate_option_values, validate_inference, CommandProbe, EnvironmentProbe, InferenceSummary,
    MemoProbe, MutationConfig, OptionProbe,
};
use beacon::monitor::{event_set_for, ingest_trace, parse_trace};
use beacon::option_syntax::{OptionCatalog, DEFAULT_CATALOG};
use beacon::simharness::SyntheticContainerModel;
use beacon::Error;

#[derive(Parser)]
#[command(name = "beacon", version, about = "Least-privilege seccomp and capability policies from emulated environments")]
struct Cli {
    /// Report style.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Tsv,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a trace and append its events to an observation store.
    Ingest {
        trace: PathBuf,
        /// Observation store to create or extend.
        #[arg(long)]
        store: PathBuf,
        /// Container name; required when the store does not exist yet.
        #[arg(long)]
        container: Option<String>,
        /// Environment id (`baseline` or a 32-digit hex id).
        #[arg(long, conflicts_with = "factor")]
        env: Option<String>,
        /// Environment factor such as `--init` or `W3`; repeatable.
        #[arg(long, allow_hyphen_values = true)]
        factor: Vec<String>,
        /// Namespace to read; defaults to the only tracked one.
        #[arg(long)]
        namespace: Option<u64>,
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
    /// Write the environment plan for a list of single factors.
    Plan {
        #[arg(long)]
        out: Option<PathBuf>,
        catalog: PathBuf,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, required = true)]
        factors: Vec<String>,
    },
    /// Mutate one integer option and report every event seen.
    Explore {
        /// A model file (`.toml`) or a probe program.
        probe: PathBuf,
        option: String,
        /// Mutation config override `key=value`; repeatable.
        #[arg(long = "config")]
        config: Vec<String>,
        /// Write the exploration log here instead of standard output.
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
    /// Compare union-inferred and observed events for every planned pair.
    ValidateInference {
        model: PathBuf,
        plan: PathBuf,
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
    /// Print both scores of an event set.
    Score {
        observations: PathBuf,
        cvedb: PathBuf,
        /// Comma-separated event names.
        #[arg(long, conflicts_with = "policy_file")]
        policy: Option<String>,
        #[arg(long)]
        policy_file: Option<PathBuf>,
    },
    /// Build a policy for the given targets.
    Synthesize {
        observations: PathBuf,
        cvedb: PathBuf,
        #[arg(long)]
        security_min: f64,
        #[arg(long)]
        functionality_min: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthesize for several targets and tabulate the results.
    Sweep {
        observations: PathBuf,
        cvedb: PathBuf,
        /// Comma-separated `security:functionality` pairs.
        #[arg(long)]
        targets: String,
    },
    /// Write the seccomp profile and capability flags of a policy.
    Emit {
        policy: PathBuf,
        #[arg(long)]
        seccomp: Option<PathBuf>,
        #[arg(long)]
        caps: Option<PathBuf>,
    },
    /// Report which CVEs a policy blocks.
    Check { policy: PathBuf, cvedb: PathBuf },
}

/// Exit code for infeasible targets.
const INFEASIBLE: u8 = 2;

enum Outcome {
    Done(String),
    Infeasible { report: String, reason: String },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let head = msg.split("\n\nUsage").next().unwrap_or("invalid arguments");
            eprintln!("error: usage: {}", one_line(head.trim_start_matches("error: ")));
            return ExitCode::from(1);
        }
    };
    match run(&cli) {
        Ok(Outcome::Done(out)) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Ok(Outcome::Infeasible { report, reason }) => {
            print!("{report}");
            eprintln!("error: infeasible: {}", one_line(&reason));
            ExitCode::from(INFEASIBLE)
        }
        Err(e) => {
            eprintln!("error: {}: {}", e.kind(), one_line(&e.to_string()));
            ExitCode::from(1)
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn catalog(path: Option<&Path>) -> Result<OptionCatalog, Error> {
    let text = match path {
        Some(p) => read(p)?,
        None => DEFAULT_CATALOG.to_owned(),
    };
    Ok(OptionCatalog::load(&text)?)
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    let tsv = cli.format == Format::Tsv;
    match &cli.command {
        Command::Ingest {
            trace,
            store,
            container,
            env,
            factor,
            namespace,
            catalog: cat,
        } => {
            let env_id = match (env, factor.is_empty()) {
                (Some(id), _) => environment_id(id)?,
                (None, false) => {
                    let cat = catalog(cat.as_deref())?;
                    let mut e = Environment::baseline();
                    for f in factor {
                        e = e.merge(&parse_factor(&cat, f)?)?;
                    }
                    e.id().to_owned()
                }
                (None, true) => return Err(Error::Usage("give --env or at least one --factor".into())),
            };
            let states = ingest_trace(&parse_trace(&read(trace)?)?)?;
            let ns = match namespace {
                Some(ns) => *ns,
                None => match states.keys().collect::<Vec<_>>()[..] {
                    [only] => *only,
                    [] => return Err(Error::Usage("trace has no tracked namespace".into())),
                    _ => return Err(Error::Usage("trace has several namespaces; pass --namespace".into())),
                },
            };
            let observation = event_set_for(&env_id, &states, ns)?;
            let mut obs = if store.exists() {
                let s = ObservationStore::parse(&read(store)?)?;
                if let Some(c) = container {
                    if c != s.container() {
                        return Err(Error::Usage(format!(
                            "store belongs to container `{}`, not `{c}`",
                            s.container()
                        )));
                    }
                }
                s
            } else {
                let c = container
                    .as_deref()
                    .ok_or_else(|| Error::Usage("--container is required for a new store".into()))?;
                ObservationStore::new(c)
            };
            obs.record(&observation);
            write(store, &obs.to_text())?;
            Ok(Outcome::Done(kv(
                tsv,
                &[
                    ("environment", env_id),
                    ("namespace", ns.to_string()),
                    ("events", observation.events.len().to_string()),
                ],
            )))
        }
        Command::Plan { out, catalog: cat, factors } => {
            let cat = catalog(Some(cat))?;
            let envs = factors
                .iter()
                .map(|f| parse_factor(&cat, f))
                .collect::<Result<Vec<_>, _>>()?;
            let plan = beacon::environment::plan_environments(envs)?;
            let text = plan.to_toml();
            match out {
                Some(p) => {
                    write(p, &text)?;
                    Ok(Outcome::Done(kv(
                        tsv,
                        &[
                            ("executed", plan.executed_count().to_string()),
                            ("inferred", plan.composed_environments.len().to_string()),
                        ],
                    )))
                }
                None => Ok(Outcome::Done(text)),
            }
        }
        Command::Explore {
            probe,
            option,
            config,
            log,
            catalog: cat,
        } => {
            let cat = catalog(cat.as_deref())?;
            let spec = cat.require(option)?.clone();
            let mut cfg = MutationConfig::for_option(&spec)?;
            for item in config {
                let (k, v) = item
                    .split_once('=')
                    .ok_or_else(|| Error::Usage(format!("config override `{item}` is not key=value")))?;
                cfg.set(k.trim(), v.trim())?;
            }
            let inner: Box<dyn EnvironmentProbe> = if probe.extension().is_some_and(|e| e == "toml") {
                Box::new(SyntheticContainerModel::from_toml(&read(probe)?)?)
            } else {
                Box::new(CommandProbe::new(probe))
            };
            let probe = MemoProbe::new(OptionProbe { spec, inner });
            let (events, exploration) = mutate_option_values(&Environment::baseline(), &cfg, probe)?;
            let mut out = String::new();
            match log {
                Some(p) => write(p, &exploration.to_text())?,
                None => out.push_str(&exploration.to_text()),
            }
            out.push_str(&kv(
                tsv,
                &[
                    ("probes", exploration.steps.len().to_string()),
                    ("events", events.to_list_string()),
                ],
            ));
            Ok(Outcome::Done(out))
        }
        Command::ValidateInference {
            model,
            plan,
            catalog: cat,
        } => {
            let cat = catalog(cat.as_deref())?;
            let model = SyntheticContainerModel::from_toml(&read(model)?)?;
            let plan = EnvironmentPlan::from_toml(&read(plan)?, &cat)?;
            let mut reports = Vec::new();
            for &(i, j) in &plan.composed_environments {
                reports.push(validate_inference(
                    &model,
                    &plan.baseline,
                    &plan.singleton_environments[i],
                    &plan.singleton_environments[j],
                )?);
            }
            let s = InferenceSummary::from_reports(&reports);
            let mut rows = vec![
                ("pairs", s.total.to_string()),
                ("exact", s.exact.to_string()),
                ("exact_rate", s.exact_rate().to_string()),
            ];
            for (d, n) in &s.delta_histogram {
                rows.push(("delta", format!("{d}{}{n}", sep(tsv))));
            }
            for (d, n) in &s.size_difference_histogram {
                rows.push(("size_difference", format!("{d}{}{n}", sep(tsv))));
            }
            Ok(Outcome::Done(kv(tsv, &rows)))
        }
        Command::Score {
            observations,
            cvedb,
            policy,
            policy_file,
        } => {
            let obs = ObservationStore::parse(&read(observations)?)?;
            let db = CveDb::parse(&read(cvedb)?)?;
            let allowed = match (policy, policy_file) {
                (Some(list), _) => EventSet::from_names(list.split(',').map(str::trim).filter(|s| !s.is_empty())),
                (None, Some(p)) => Policy::parse(&read(p)?)?.allowed,
                (None, None) => return Err(Error::Usage("give --policy or --policy-file".into())),
            };
            Ok(Outcome::Done(kv(
                tsv,
                &[
                    ("security", format_score(security_score(&allowed, &db))),
                    ("functionality", format_score(functionality_score(&allowed, &obs))),
                ],
            )))
        }
        Command::Synthesize {
            observations,
            cvedb,
            security_min,
            functionality_min,
            out,
        } => {
            let obs = ObservationStore::parse(&read(observations)?)?;
            let db = CveDb::parse(&read(cvedb)?)?;
            let targets = ScoreTargets::new(*security_min, *functionality_min)?;
            match synthesize_policy(&obs, &db, targets)? {
                Synthesis::Policy(p) => match out {
                    Some(path) => {
                        write(path, &p.to_text())?;
                        Ok(Outcome::Done(kv(
                            tsv,
                            &[
                                ("allowed", p.allowed.len().to_string()),
                                ("security", format_score(p.achieved_security)),
                                ("functionality", format_score(p.achieved_functionality)),
                            ],
                        )))
                    }
                    None => Ok(Outcome::Done(p.to_text())),
                },
                Synthesis::Infeasible(inf) => Ok(Outcome::Infeasible {
                    report: infeasible_report(tsv, &inf),
                    reason: inf.to_string(),
                }),
            }
        }
        Command::Sweep {
            observations,
            cvedb,
            targets,
        } => {
            let obs = ObservationStore::parse(&read(observations)?)?;
            let db = CveDb::parse(&read(cvedb)?)?;
            let targets = parse_targets(targets)?;
            let rows = sweep(&obs, &db, &targets)?;
            let mut table = vec![[
                "security_min",
                "functionality_min",
                "status",
                "size",
                "security",
                "functionality",
            ]
            .map(String::from)
            .to_vec()];
            for r in &rows {
                let (status, size, s, f) = match &r.outcome {
                    Synthesis::Policy(p) => (
                        "feasible",
                        p.allowed.len().to_string(),
                        format_score(p.achieved_security),
                        format_score(p.achieved_functionality),
                    ),
                    Synthesis::Infeasible(Infeasible::FunctionalityUnreachable {
                        best_security,
                        best_functionality,
                        ..
                    }) => (
                        "infeasible",
                        "-".into(),
                        format_score(*best_security),
                        format_score(*best_functionality),
                    ),
                    Synthesis::Infeasible(Infeasible::AlwaysEventTooSevere { .. }) => {
                        ("infeasible", "-".into(), "-".into(), "-".into())
                    }
                };
                table.push(vec![
                    r.targets.security_min.to_string(),
                    r.targets.functionality_min.to_string(),
                    status.into(),
                    size,
                    s,
                    f,
                ]);
            }
            Ok(Outcome::Done(render_table(tsv, &table)))
        }
        Command::Emit { policy, seccomp, caps } => {
            let p = Policy::parse(&read(policy)?)?;
            let profile = emit_seccomp_profile(&p);
            let flags = emit_capability_flags(&p)?.join("\n") + "\n";
            let mut out = String::new();
            match seccomp {
                Some(path) => write(path, &profile)?,
                None => out.push_str(&profile),
            }
            match caps {
                Some(path) => write(path, &flags)?,
                None => out.push_str(&flags),
            }
            Ok(Outcome::Done(out))
        }
        Command::Check { policy, cvedb } => {
            let p = Policy::parse(&read(policy)?)?;
            let db = CveDb::parse(&read(cvedb)?)?;
            let rows = check_mitigation(&p.allowed, &db);
            let mut table = vec![["cve", "cvss", "status", "missing"].map(String::from).to_vec()];
            for r in &rows {
                let missing: Vec<String> = r
                    .missing
                    .iter()
                    .filter(|m| !m.is_empty())
                    .map(|m| m.to_list_string())
                    .collect();
                table.push(vec![
                    r.cve_id.clone(),
                    r.cvss.to_string(),
                    if r.blocked { "blocked" } else { "allowed" }.into(),
                    if missing.is_empty() { "-".into() } else { missing.join(";") },
                ]);
            }
            let blocked = rows.iter().filter(|r| r.blocked).count();
            let mut out = render_table(tsv, &table);
            out.push_str(&kv(tsv, &[("blocked", format!("{blocked}/{}", rows.len()))]));
            Ok(Outcome::Done(out))
        }
    }
}

fn environment_id(text: &str) -> Result<String, Error> {
    if text == "baseline" {
        return Ok(Environment::baseline().id().to_owned());
    }
    let ok = text.len() == 32 && text.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b));
    if ok {
        Ok(text.to_owned())
    } else {
        Err(Error::Usage(format!("`{text}` is not an environment id")))
    }
}

fn parse_targets(text: &str) -> Result<Vec<ScoreTargets>, Error> {
    text.split(',')
        .map(|pair| {
            let (s, f) = pair
                .split_once(':')
                .ok_or_else(|| Error::Usage(format!("target `{pair}` is not security:functionality")))?;
            let num = |v: &str| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Usage(format!("target `{pair}` is not numeric")))
            };
            Ok(ScoreTargets::new(num(s)?, num(f)?)?)
        })
        .collect()
}

fn infeasible_report(tsv: bool, inf: &Infeasible) -> String {
    match inf {
        Infeasible::AlwaysEventTooSevere { event, cvss, ceiling } => kv(
            tsv,
            &[
                ("status", "infeasible".into()),
                ("reason", "always-event-too-severe".into()),
                ("event", event.to_string()),
                ("cvss", format_score(*cvss)),
                ("ceiling", format_score(*ceiling)),
            ],
        ),
        Infeasible::FunctionalityUnreachable {
            ceiling,
            blocking,
            best_security,
            best_functionality,
        } => {
            let names: Vec<String> = blocking.iter().map(|(e, _)| e.to_string()).collect();
            kv(
                tsv,
                &[
                    ("status", "infeasible".into()),
                    ("reason", "functionality-unreachable".into()),
                    ("ceiling", format_score(*ceiling)),
                    ("blocking", names.join(",")),
                    ("best_security", format_score(*best_security)),
                    ("best_functionality", format_score(*best_functionality)),
                ],
            )
        }
    }
}

fn sep(tsv: bool) -> &'static str {
    if tsv {
        "\t"
    } else {
        " "
    }
}

fn kv(tsv: bool, rows: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (k, v) in rows {
        if tsv {
            let _ = writeln!(out, "{k}\t{v}");
        } else {
            let _ = writeln!(out, "{k}: {v}");
        }
    }
    out
}

fn render_table(tsv: bool, rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    if tsv {
        for r in rows {
            let _ = writeln!(out, "{}", r.join("\t"));
        }
        return out;
    }
    let mut widths: BTreeMap<usize, usize> = BTreeMap::new();
    for r in rows {
        for (i, c) in r.iter().enumerate() {
            let w = widths.entry(i).or_default();
            *w = (*w).max(c.len());
        }
    }
    for r in rows {
        let cells: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{c:<w$}", w = widths[&i]))
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    out
}
