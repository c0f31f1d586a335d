//! Config resolution, thread pool, output files and exit codes.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use carnot_core::CarnotGroup;
use serde_json::{json, Map, Value};

use crate::catalog;
use crate::error::KitError;
use crate::formats::GroupFile;
use crate::params::Params;
use crate::report::SuiteReport;
use crate::suites;

pub const THREADS_ENV: &str = "CARNOT_KIT_THREADS";

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentConfig {
    pub group: Option<String>,
    pub spec: Option<PathBuf>,
    pub suite: String,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub depth: Option<u32>,
    pub samples: Option<usize>,
    pub params: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn new(suite: &str, group: &str, seed: u64) -> Self {
        ExperimentConfig { suite: suite.into(), group: Some(group.into()), seed, ..Default::default() }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.into(), value.to_string());
        self
    }
}

/// Everything a suite reads.
pub struct Context {
    pub group_file: GroupFile,
    pub group: CarnotGroup,
    pub seed: u64,
    pub depth: Option<u32>,
    pub samples: Option<usize>,
    pub params: Params,
}

pub struct RunOutcome {
    pub report: SuiteReport,
    /// Config fields stamped into every output file.
    pub header: Map<String, Value>,
    pub group_file: GroupFile,
    pub threads: usize,
}

pub fn threads_from_env() -> Result<Option<usize>, KitError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(KitError::bad_param(THREADS_ENV, format!("expected a positive integer, got `{v}`"))),
        },
    }
}

/// Resolves the config and runs the suite on a dedicated thread pool.
pub fn run_suite(config: &ExperimentConfig) -> Result<RunOutcome, KitError> {
    if !suites::SUITES.contains(&config.suite.as_str()) {
        return Err(KitError::UnknownSuite(config.suite.clone()));
    }
    let (group_file, group) = catalog::resolve(
        config.group.as_deref(),
        config.spec.as_deref(),
        suites::default_group(&config.suite),
    )?;
    let threads = threads_from_env()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| KitError::Suite(e.to_string()))?;
    let ctx = Context {
        group_file: group_file.clone(),
        group,
        seed: config.seed,
        depth: config.depth,
        samples: config.samples,
        params: Params::new(config.params.clone()),
    };
    let report = pool.install(|| suites::run(&config.suite, &ctx))?;
    if let Some(k) = ctx.params.unused().first() {
        return Err(KitError::bad_param(k, format!("not used by suite `{}`", config.suite)));
    }
    let mut header = Map::new();
    header.insert("suite".into(), json!(config.suite));
    header.insert("group".into(), json!(group_file.name));
    header.insert("seed".into(), json!(config.seed));
    if let Some(d) = config.depth {
        header.insert("depth".into(), json!(d));
    }
    if let Some(s) = config.samples {
        header.insert("samples".into(), json!(s));
    }
    if !config.params.is_empty() {
        header.insert("params".into(), json!(config.params));
    }
    Ok(RunOutcome { report, header, group_file, threads: pool.current_num_threads() })
}

fn unix_seconds() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Writes the report files plus `meta.json`, which holds everything that
/// varies between identical runs.
pub fn write_outputs(outcome: &RunOutcome, dir: &std::path::Path, started: f64, elapsed: f64) -> Result<(), KitError> {
    let mut header = outcome.header.clone();
    outcome.report.write(dir, &header)?;
    let group_doc = dir.join("group.json");
    header.insert("content".into(), serde_json::to_value(&outcome.group_file)?);
    fs::write(group_doc, serde_json::to_string_pretty(&Value::Object(header))? + "\n")?;
    let meta = json!({
        "seed": outcome.header.get("seed"),
        "started_unix": started,
        "finished_unix": unix_seconds(),
        "elapsed_seconds": elapsed,
        "threads": outcome.threads,
        "version": env!("CARGO_PKG_VERSION"),
    });
    fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

/// Runs a config end to end and returns the process exit status:
/// 0 when every check passes, 1 on a failed check or runtime error,
/// 2 on usage errors.
pub fn execute(config: &ExperimentConfig) -> i32 {
    let started = unix_seconds();
    let clock = Instant::now();
    let outcome = match run_suite(config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let elapsed = clock.elapsed().as_secs_f64();
    for c in &outcome.report.checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if let Some(dir) = &config.out {
        if let Err(e) = write_outputs(&outcome, dir, started, elapsed) {
            eprintln!("error: {e}");
            return 1;
        }
    }
    match outcome.report.first_failure() {
        None => 0,
        Some(c) => {
            eprintln!("check failed: {} ({})", c.name, c.detail);
            1
        }
    }
}
