//! End-to-end runs of the `beacon` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use beacon::decision::ObservationStore;
use beacon::environment::{parse_factor, EnvironmentPlan};
use beacon::option_syntax::OptionCatalog;
use beacon::simharness::redis_model;

fn fixture(rel: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel).display().to_string()
}

fn beacon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beacon")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn synthesize_redis(dir: &Path) -> PathBuf {
    let policy = dir.join("redis.policy");
    let o = beacon(&[
        "synthesize",
        &fixture("stores/redis.obs"),
        &fixture("cvedb.tsv"),
        "--security-min",
        "0",
        "--functionality-min",
        "1",
        "--out",
        policy.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    policy
}

#[test]
fn synthesize_then_check_reports_dirty_cow_blocked() {
    let dir = tempfile::tempdir().unwrap();
    let policy = synthesize_redis(dir.path());
    let o = beacon(&["--format", "tsv", "check", policy.to_str().unwrap(), &fixture("cvedb.tsv")]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let row = out.lines().find(|l| l.starts_with("CVE-2016-5195\t")).unwrap();
    assert_eq!(row.split('\t').collect::<Vec<_>>(), ["CVE-2016-5195", "7.8", "blocked", "madvise"]);
}

#[test]
fn sweep_prints_one_row_per_target() {
    let o = beacon(&[
        "--format",
        "tsv",
        "sweep",
        &fixture("stores/static.obs"),
        &fixture("cvedb.tsv"),
        "--targets",
        "0:1,0.5:0.5,0.7:0.25",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let rows: Vec<Vec<&str>> = out.lines().skip(1).map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 3);
    let sizes: Vec<usize> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(sizes.windows(2).all(|w| w[1] <= w[0]), "{sizes:?}");
}

#[test]
fn infeasible_targets_exit_with_two() {
    let o = beacon(&[
        "synthesize",
        &fixture("stores/redis.obs"),
        &fixture("cvedb.tsv"),
        "--security-min",
        "0.7",
        "--functionality-min",
        "0.25",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("status: infeasible"));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error: infeasible: event clone"), "{err}");
}

#[test]
fn malformed_inputs_exit_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.policy");
    std::fs::write(&bad, "not a policy\n").unwrap();
    let cases: Vec<(Vec<String>, &str)> = vec![
        (vec!["check".into(), bad.display().to_string(), fixture("cvedb.tsv")], "error: decision: "),
        (vec!["emit".into(), dir.path().join("missing").display().to_string()], "error: io: "),
        (vec!["frobnicate".into()], "error: usage: "),
        (
            vec![
                "synthesize".into(),
                fixture("stores/redis.obs"),
                fixture("cvedb.tsv"),
                "--security-min".into(),
                "1.5".into(),
                "--functionality-min".into(),
                "0".into(),
            ],
            "error: decision: ",
        ),
    ];
    for (args, prefix) in cases {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let o = beacon(&args);
        let err = stderr(&o);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {err}");
        assert_eq!(err.lines().count(), 1, "{args:?}: {err}");
        assert!(err.starts_with(prefix), "{args:?}: {err}");
    }
}

#[test]
fn synthesis_and_emission_are_byte_stable() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let pa = synthesize_redis(a.path());
    let pb = synthesize_redis(b.path());
    assert_eq!(std::fs::read(&pa).unwrap(), std::fs::read(&pb).unwrap());

    let json = a.path().join("profile.json");
    let caps = a.path().join("caps");
    let o = beacon(&[
        "emit",
        pa.to_str().unwrap(),
        "--seccomp",
        json.to_str().unwrap(),
        "--caps",
        caps.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    assert_eq!(
        std::fs::read_to_string(json).unwrap(),
        std::fs::read_to_string(golden.join("redis-functional.json")).unwrap()
    );
    assert_eq!(
        std::fs::read_to_string(caps).unwrap(),
        std::fs::read_to_string(golden.join("redis-functional.caps")).unwrap()
    );
}

#[test]
fn ingest_records_a_trace_under_its_environment() {
    let dir = tempfile::tempdir().unwrap();
    let env = parse_factor(&OptionCatalog::bundled(), "--init").unwrap();
    let trace = dir.path().join("init.trace");
    std::fs::write(&trace, redis_model().emit_trace(&env, 4_026_532_201, 1)).unwrap();
    let store = dir.path().join("redis.obs");
    let o = beacon(&[
        "ingest",
        trace.to_str().unwrap(),
        "--store",
        store.to_str().unwrap(),
        "--container",
        "redis",
        "--factor=--init",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let parsed = ObservationStore::parse(&std::fs::read_to_string(&store).unwrap()).unwrap();
    assert_eq!(parsed.get(env.id()).unwrap().events, redis_model().evaluate(&env));
}

#[test]
fn plan_writes_a_loadable_plan() {
    let o = beacon(&["plan", &fixture("catalog.tsv"), "--init", "--read-only", "W3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let plan = EnvironmentPlan::from_toml(&stdout(&o), &OptionCatalog::bundled()).unwrap();
    assert_eq!(plan.singleton_environments.len(), 3);
    assert_eq!(plan.composed_environments.len(), 3);
}

#[test]
fn explore_logs_every_probe() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("explore.log");
    let o = beacon(&[
        "explore",
        &fixture("models/static.toml"),
        "cpu-shares",
        "--config",
        "seed=3",
        "--config",
        "it_max=20",
        "--log",
        log.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(log).unwrap();
    assert_eq!(text.lines().next(), Some("beacon-explore v1"));
    assert!(text.contains("# seed=3"));
}
