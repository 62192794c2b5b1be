//! Experiment runner, summaries and JSON-lines persistence.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::{generate_adversarial_keys, AdversarialSpec};
use crate::allocator::{default_keys, place_all, AllocationConfig, BallRecord, RunTrace, Scheme};
use crate::error::{Error, Result};
use crate::hashgraph::{build_graph, verify_structural_dichotomy, ComponentIndex};
use crate::seed;
use crate::tabulation::Key;

/// Which key stream each trial places.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum KeySource {
    /// `0, 1, …, m − 1`.
    Sequential,
    /// The adversarial product set, in lexicographic order.
    Adversarial(AdversarialSpec),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checks {
    /// Load-graph arboricity bound on the max-load bin.
    pub lemma32: bool,
    /// Excess component or binomial tree, plus the inductive witness on acyclic runs.
    pub obs41: bool,
}

impl Checks {
    pub fn all() -> Self {
        Checks {
            lemma32: true,
            obs41: true,
        }
    }

    pub fn any(&self) -> bool {
        self.lemma32 || self.obs41
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub trials: u32,
    /// Template for every trial; its seed is replaced by the trial seed.
    pub base: AllocationConfig,
    pub keys: KeySource,
    pub checks: Checks,
    /// JSON-lines destination for trial records.
    pub output: Option<PathBuf>,
    pub master_seed: u64,
    /// Upper bound on concurrent trials; `None` uses the rayon default.
    pub threads: Option<usize>,
    /// Record wall-clock time per trial. Off gives byte-identical output across runs.
    pub timing: bool,
    /// Tag written into each record's `rigged` field.
    pub rigged_tag: Option<bool>,
}

impl ExperimentConfig {
    pub fn new(trials: u32, base: AllocationConfig, master_seed: u64) -> Self {
        ExperimentConfig {
            trials,
            base,
            keys: KeySource::Sequential,
            checks: Checks::default(),
            output: None,
            master_seed,
            threads: None,
            timing: false,
            rigged_tag: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        self.base.validate()?;
        if let KeySource::Adversarial(a) = &self.keys {
            a.validate()?;
            if a.n != self.base.m as u64 {
                return Err(Error::Config(format!(
                    "adversarial key count {} differs from m = {}",
                    a.n, self.base.m
                )));
            }
        }
        Ok(())
    }

    /// Seed of trial `i`.
    pub fn trial_seed(&self, i: u32) -> u64 {
        seed::derive(self.master_seed, i as u64)
    }

    pub fn trial_config(&self, i: u32) -> AllocationConfig {
        AllocationConfig {
            seed: self.trial_seed(i),
            ..self.base
        }
    }

    pub fn keys(&self) -> Result<Vec<Key>> {
        match &self.keys {
            KeySource::Sequential => Ok(default_keys(self.base.m)),
            KeySource::Adversarial(a) => generate_adversarial_keys(a),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckFlags {
    /// `None` when the check was not run.
    pub lemma32: Option<bool>,
    pub obs41: Option<bool>,
}

impl CheckFlags {
    pub fn failures(&self) -> usize {
        [self.lemma32, self.obs41]
            .iter()
            .filter(|f| **f == Some(false))
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u32,
    pub seed: u64,
    pub scheme: Scheme,
    pub n: u32,
    pub m: u32,
    pub max_load: u32,
    pub components: usize,
    pub largest_component: usize,
    pub largest_excess: i64,
    pub double_cycle: bool,
    pub checks: CheckFlags,
    pub ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rigged: Option<bool>,
}

/// Runs one trial and returns its record along with the trace.
pub fn run_trial(
    config: &ExperimentConfig,
    keys: &[Key],
    i: u32,
) -> Result<(TrialRecord, RunTrace)> {
    let start = Instant::now();
    let cfg = config.trial_config(i);
    let trace = place_all(keys, cfg)?;
    let mut record = record_for(&trace, config.checks);
    record.trial = i;
    record.rigged = config.rigged_tag;
    if config.timing {
        record.ms = start.elapsed().as_millis() as u64;
    }
    Ok((record, trace))
}

/// A record of `trace` with the given checks run; trial index 0, no timing.
pub fn record_for(trace: &RunTrace, checks: Checks) -> TrialRecord {
    let cfg = trace.config();
    let (components, largest_component, largest_excess, flags) = if checks.any() {
        let report = verify_structural_dichotomy(trace);
        let flags = CheckFlags {
            lemma32: checks.lemma32.then(|| report.lemma32_holds()),
            obs41: checks
                .obs41
                .then(|| report.obs41_holds() && report.inductive_holds()),
        };
        (
            report.components,
            report.largest_component,
            report.largest_excess,
            flags,
        )
    } else {
        let index = ComponentIndex::new(&build_graph(trace));
        (
            index.len(),
            index.largest_component(),
            index.largest_excess(),
            CheckFlags::default(),
        )
    };
    TrialRecord {
        trial: 0,
        seed: cfg.seed,
        scheme: cfg.scheme,
        n: cfg.n,
        m: trace.m(),
        max_load: trace.max_load(),
        components,
        largest_component,
        largest_excess,
        double_cycle: largest_excess >= 1,
        checks: flags,
        ms: 0,
        rigged: None,
    }
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs every trial, in parallel, and returns the records sorted by trial index.
pub fn run_trials(config: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    let keys = config.keys()?;
    let mut records = with_pool(config.threads, || {
        (0..config.trials)
            .into_par_iter()
            .map(|i| run_trial(config, &keys, i).map(|(r, _)| r))
            .collect::<Result<Vec<_>>>()
    })??;
    records.sort_by_key(|r| r.trial);
    Ok(records)
}

/// Runs the experiment, appends its records to the configured output, and
/// summarizes them.
pub fn run_experiment(config: &ExperimentConfig) -> Result<SummaryReport> {
    let records = run_trials(config)?;
    if let Some(path) = &config.output {
        append_records(path, &records)?;
    }
    summarize(&records)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeSummary {
    pub scheme: Scheme,
    pub n: u32,
    pub m: u32,
    pub trials: usize,
    pub histogram: BTreeMap<u32, usize>,
    pub mean: f64,
    pub median: f64,
    pub min: u32,
    pub max: u32,
    pub double_cycle_fraction: f64,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryReport {
    pub schemes: Vec<SchemeSummary>,
    pub violations: usize,
}

impl SummaryReport {
    pub fn scheme(&self, scheme: Scheme) -> Option<&SchemeSummary> {
        self.schemes.iter().find(|s| s.scheme == scheme)
    }
}

fn summarize_group(records: &[&TrialRecord]) -> SchemeSummary {
    let mut loads: Vec<u32> = records.iter().map(|r| r.max_load).collect();
    loads.sort_unstable();
    let len = loads.len();
    let median = if len % 2 == 1 {
        loads[len / 2] as f64
    } else {
        (loads[len / 2 - 1] + loads[len / 2]) as f64 / 2.0
    };
    let mut histogram = BTreeMap::new();
    for &l in &loads {
        *histogram.entry(l).or_insert(0) += 1;
    }
    let first = records[0];
    SchemeSummary {
        scheme: first.scheme,
        n: first.n,
        m: first.m,
        trials: len,
        histogram,
        mean: loads.iter().map(|&l| l as f64).sum::<f64>() / len as f64,
        median,
        min: loads[0],
        max: loads[len - 1],
        double_cycle_fraction: records.iter().filter(|r| r.double_cycle).count() as f64
            / len as f64,
        violations: records.iter().map(|r| r.checks.failures()).sum(),
    }
}

/// Aggregates records per `(scheme, n, m)`.
pub fn summarize(records: &[TrialRecord]) -> Result<SummaryReport> {
    if records.is_empty() {
        return Err(Error::Domain("cannot summarize zero records".into()));
    }
    let mut groups: BTreeMap<(Scheme, u32, u32), Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.scheme, r.n, r.m)).or_default().push(r);
    }
    let schemes: Vec<SchemeSummary> = groups.values().map(|g| summarize_group(g)).collect();
    let violations = schemes.iter().map(|s| s.violations).sum();
    Ok(SummaryReport {
        schemes,
        violations,
    })
}

#[derive(Serialize)]
struct CsvRow {
    scheme: Scheme,
    n: u32,
    m: u32,
    trials: usize,
    mean_max: f64,
    median_max: f64,
    min_max: u32,
    max_max: u32,
    double_cycle_frac: f64,
    violations: usize,
}

/// Writes the flat summary CSV.
pub fn write_summary_csv(path: &Path, report: &SummaryReport) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_summary_csv_to(file, report).map_err(|e| Error::io(path, e))
}

pub fn write_summary_csv_to<W: Write>(writer: W, report: &SummaryReport) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for s in &report.schemes {
        w.serialize(CsvRow {
            scheme: s.scheme,
            n: s.n,
            m: s.m,
            trials: s.trials,
            mean_max: s.mean,
            median_max: s.median,
            min_max: s.min,
            max_max: s.max,
            double_cycle_frac: s.double_cycle_fraction,
            violations: s.violations,
        })
        .map_err(std::io::Error::other)?;
    }
    w.flush()
}

pub fn write_records<W: Write>(mut w: W, records: &[TrialRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// Appends records to a JSON-lines file, creating it if needed.
pub fn append_records(path: &Path, records: &[TrialRecord]) -> Result<()> {
    let file = File::options()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    write_records(BufWriter::new(file), records).map_err(|e| Error::io(path, e))
}

pub fn read_records(path: &Path) -> Result<Vec<TrialRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    BufReader::new(file)
        .lines()
        .enumerate()
        .filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
        .map(|(i, line)| {
            let line = line.map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&line).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                msg: format!("line {}: {e}", i + 1),
            })
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct TraceHeader {
    config: AllocationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    trial: Option<u32>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TraceLine {
    Header(TraceHeader),
    Ball(BallRecord),
}

/// Writes traces as JSON lines: a `{"config": …}` header per trace followed
/// by one line per ball.
pub fn write_traces<W: Write>(
    mut w: W,
    traces: &[(Option<u32>, &RunTrace)],
) -> std::io::Result<()> {
    for (trial, t) in traces {
        serde_json::to_writer(
            &mut w,
            &TraceHeader {
                config: *t.config(),
                trial: *trial,
            },
        )?;
        w.write_all(b"\n")?;
        for r in t.records() {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
    }
    w.flush()
}

pub fn save_traces(path: &Path, traces: &[(Option<u32>, &RunTrace)]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_traces(BufWriter::new(file), traces).map_err(|e| Error::io(path, e))
}

/// Reads every trace in a JSON-lines file, replaying each to rebuild loads.
pub fn load_traces(path: &Path) -> Result<Vec<(Option<u32>, RunTrace)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        msg: format!("line {line}: {msg}"),
    };
    let mut out = Vec::new();
    let mut current: Option<(TraceHeader, Vec<BallRecord>)> = None;
    let finish = |cur: Option<(TraceHeader, Vec<BallRecord>)>, out: &mut Vec<_>| -> Result<()> {
        if let Some((h, recs)) = cur {
            let trace = RunTrace::from_records(h.config, recs).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                msg: e.to_string(),
            })?;
            out.push((h.trial, trace));
        }
        Ok(())
    };
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line).map_err(|e| parse_err(i + 1, e.to_string()))? {
            TraceLine::Header(h) => {
                finish(current.take(), &mut out)?;
                current = Some((h, Vec::new()));
            }
            TraceLine::Ball(b) => match current.as_mut() {
                Some((_, recs)) => recs.push(b),
                None => return Err(parse_err(i + 1, "ball record before any header".into())),
            },
        }
    }
    finish(current, &mut out)?;
    Ok(out)
}
