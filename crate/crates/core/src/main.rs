use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tabchoice::adversary::AdversarialSpec;
use tabchoice::allocator::{AllocationConfig, Scheme};
use tabchoice::dependency::{
    count_dependent_tuples, count_zero_sum_tuples, dependent_tuple_bound, zero_sum_bound,
    MAX_ENUMERATION,
};
use tabchoice::harness::{
    load_traces, run_trial, save_traces, summarize, write_records, write_summary_csv, Checks,
    ExperimentConfig, KeySource, SummaryReport, TrialRecord,
};
use tabchoice::hashgraph::{build_graph, components, verify_structural_dichotomy};
use tabchoice::tabulation::{CharSpec, Key, TabulationTables};
use tabchoice::Error;

const EXIT_VIOLATION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "tabchoice",
    version,
    about = "Simple tabulation hashing and two-choice load balancing"
)]
struct Cli {
    /// Master seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Upper bound on concurrent trials.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output path for JSON-lines trial records (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Hash keys with simple tabulation; prints `key,hash` in hex.
    Hash {
        #[arg(long, default_value_t = 2)]
        c: u32,
        #[arg(long, default_value_t = 8)]
        q: u32,
        #[arg(long, default_value_t = 16)]
        r: u32,
        /// A file of keys, or an inline comma/space separated list.
        #[arg(long)]
        keys: String,
    },
    /// Run two-choice trials and emit one JSON record per trial.
    Simulate(SimulateArgs),
    /// Structural analysis of traces written by `simulate --trace-out`.
    Analyze {
        #[arg(long)]
        trace: PathBuf,
        /// Check the structural invariants and exit nonzero on a violation.
        #[arg(long)]
        check_lemmas: bool,
        /// Print every nontrivial component rather than the largest 20.
        #[arg(long)]
        all_components: bool,
    },
    /// Exact tuple counts over a small universe against their bounds.
    Oracle(OracleArgs),
    /// Place the adversarial key set, optionally with rigged tables.
    Adversary(AdversaryArgs),
}

#[derive(Args)]
struct RunFlags {
    #[arg(long, default_value_t = 1)]
    trials: u32,
    /// Run the structural checks on every trial.
    #[arg(long)]
    checks: bool,
    /// Write a CSV summary here.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write every trial's full trace as JSON lines here.
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Record wall-clock milliseconds per trial (otherwise 0).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Bins per table (power of two).
    #[arg(long)]
    n: u32,
    /// Balls; defaults to n.
    #[arg(long)]
    m: Option<u32>,
    #[arg(long, default_value = "tabulation")]
    scheme: String,
    #[arg(long, default_value_t = 2)]
    c: u32,
    /// Bits per character; defaults to the smallest value >= 8 whose universe holds m keys.
    #[arg(long)]
    q: Option<u32>,
    /// Rigging width for rigged-tabulation.
    #[arg(long, default_value_t = 2)]
    k: u32,
    #[command(flatten)]
    run: RunFlags,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, global = true, default_value_t = 2)]
    c: u32,
    #[arg(long, global = true, default_value_t = 2)]
    q: u32,
    /// `all` for the full universe, or a file of keys.
    #[arg(long, global = true, default_value = "all")]
    universe: String,
    #[command(subcommand)]
    kind: OracleKind,
}

#[derive(Subcommand)]
enum OracleKind {
    /// 2t-tuples whose position characters cancel.
    ZeroSum {
        #[arg(long)]
        t: u32,
    },
    /// s-tuples with a dependent extension in the universe.
    Dependent {
        #[arg(long)]
        s: u32,
    },
}

#[derive(Args)]
struct AdversaryArgs {
    #[arg(long)]
    n_bins: u32,
    #[arg(long, default_value_t = 2)]
    k: u32,
    #[arg(long, default_value_t = 2)]
    c: u32,
    /// Bits per character; defaults to lg n_bins.
    #[arg(long)]
    q: Option<u32>,
    #[arg(long)]
    rigged: bool,
    #[command(flatten)]
    run: RunFlags,
}

enum Failure {
    Violation(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn io_err(path: &str, e: io::Error) -> Failure {
    Failure::Lib(Error::Io {
        path: path.into(),
        source: e,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violation(msg)) => {
            eprintln!("violation: {msg}");
            ExitCode::from(EXIT_VIOLATION)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Io { .. } | Error::Parse { .. } => EXIT_IO,
                _ => EXIT_CONFIG,
            })
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Hash { c, q, r, keys } => hash(c, q, r, cli.seed, &keys),
        Command::Simulate(args) => simulate(args, cli.seed, cli.threads, cli.out),
        Command::Analyze {
            trace,
            check_lemmas,
            all_components,
        } => analyze(&trace, check_lemmas, all_components),
        Command::Oracle(args) => oracle(args),
        Command::Adversary(args) => adversary(args, cli.seed, cli.threads, cli.out),
    }
}

fn parse_key(tok: &str) -> Result<u64, Error> {
    let parsed = match tok.strip_prefix("0x").or_else(|| tok.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => tok.parse(),
    };
    parsed.map_err(|_| Error::Config(format!("cannot parse key {tok:?}")))
}

fn parse_key_list(text: &str) -> Result<Vec<Key>, Error> {
    text.split(|ch: char| ch == ',' || ch.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| parse_key(t).map(Key))
        .collect()
}

/// Keys from a file if `arg` names one, else from the inline list.
fn read_keys(arg: &str) -> Result<Vec<Key>, Error> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.into(),
            source: e,
        })?;
        parse_key_list(&text)
    } else {
        parse_key_list(arg)
    }
}

fn hash(c: u32, q: u32, r: u32, seed: u64, keys: &str) -> Result<(), Failure> {
    let spec = CharSpec::new(c, q, r)?;
    let tables = TabulationTables::build(spec, seed);
    let keys = read_keys(keys)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for k in keys {
        let h = tables.hash(k)?;
        writeln!(out, "{:#x},{:#x}", k.0, h).map_err(|e| io_err("<stdout>", e))?;
    }
    Ok(())
}

fn default_q(c: u32, m: u32) -> u32 {
    let need = 32 - m.saturating_sub(1).leading_zeros();
    need.div_ceil(c).clamp(8, 16)
}

fn experiment(
    base: AllocationConfig,
    run: &RunFlags,
    seed: u64,
    threads: Option<usize>,
) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(run.trials, base, seed);
    cfg.threads = threads;
    cfg.timing = run.timing;
    if run.checks {
        cfg.checks = Checks::all();
    }
    cfg
}

fn simulate(
    args: SimulateArgs,
    seed: u64,
    threads: Option<usize>,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let m = args.m.unwrap_or(args.n);
    let scheme: Scheme = args.scheme.parse()?;
    let q = args.q.unwrap_or_else(|| default_q(args.c, m));
    let base = AllocationConfig::new(args.n, m, scheme, args.c, q, 0)?.with_rig_k(args.k);
    let cfg = experiment(base, &args.run, seed, threads);
    execute(cfg, &args.run, out)
}

fn adversary(
    args: AdversaryArgs,
    seed: u64,
    threads: Option<usize>,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    if !args.n_bins.is_power_of_two() || args.n_bins < 2 {
        return Err(Error::Config(format!(
            "n_bins = {} must be a power of two >= 2",
            args.n_bins
        ))
        .into());
    }
    let r = args.n_bins.trailing_zeros();
    let spec = CharSpec::new(args.c, args.q.unwrap_or(r.clamp(1, 16)), r)?;
    let aspec = AdversarialSpec::new(args.n_bins as u64, args.k, spec)?;
    let scheme = if args.rigged {
        Scheme::RiggedTabulation
    } else {
        Scheme::Tabulation
    };
    let base = AllocationConfig::new(args.n_bins, args.n_bins, scheme, spec.c, spec.q, 0)?
        .with_rig_k(args.k);
    let mut cfg = experiment(base, &args.run, seed, threads);
    cfg.keys = KeySource::Adversarial(aspec);
    cfg.rigged_tag = Some(args.rigged);
    execute(cfg, &args.run, out)
}

fn execute(cfg: ExperimentConfig, run: &RunFlags, out: Option<PathBuf>) -> Result<(), Failure> {
    cfg.validate()?;
    let keys = cfg.keys()?;
    let want_traces = run.trace_out.is_some();
    let pool = match cfg.threads {
        Some(t) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?,
        ),
        None => None,
    };
    let work = || {
        use rayon::prelude::*;
        (0..cfg.trials)
            .into_par_iter()
            .map(|i| run_trial(&cfg, &keys, i).map(|(r, t)| (r, want_traces.then_some(t))))
            .collect::<Result<Vec<_>, Error>>()
    };
    let results = match &pool {
        Some(p) => p.install(work),
        None => work(),
    }?;
    let records: Vec<TrialRecord> = results.iter().map(|(r, _)| r.clone()).collect();

    match &out {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            write_records(io::BufWriter::new(file), &records).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
        }
        None => write_records(io::stdout().lock(), &records).map_err(|e| io_err("<stdout>", e))?,
    }
    if let Some(path) = &run.trace_out {
        let traces: Vec<(Option<u32>, &_)> = results
            .iter()
            .filter_map(|(r, t)| t.as_ref().map(|t| (Some(r.trial), t)))
            .collect();
        save_traces(path, &traces)?;
    }
    let summary = summarize(&records)?;
    if let Some(path) = &run.csv {
        write_summary_csv(path, &summary)?;
    }
    print_summary(&summary);
    if summary.violations > 0 {
        return Err(Failure::Violation(format!(
            "{} structural check(s) failed",
            summary.violations
        )));
    }
    Ok(())
}

fn print_summary(s: &SummaryReport) {
    for g in &s.schemes {
        eprintln!(
            "{} n={} m={} trials={} mean={:.3} median={} min={} max={} double_cycle={:.3} violations={}",
            g.scheme, g.n, g.m, g.trials, g.mean, g.median, g.min, g.max, g.double_cycle_fraction, g.violations
        );
        let hist: Vec<String> = g
            .histogram
            .iter()
            .map(|(l, c)| format!("{l}:{c}"))
            .collect();
        eprintln!("  histogram {}", hist.join(" "));
    }
}

fn analyze(path: &Path, check: bool, all_components: bool) -> Result<(), Failure> {
    let traces = load_traces(path)?;
    if traces.is_empty() {
        return Err(Error::Parse {
            path: path.into(),
            msg: "no traces found".into(),
        }
        .into());
    }
    let mut violations = 0;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let w = |e| io_err("<stdout>", e);
    for (trial, trace) in &traces {
        let graph = build_graph(trace);
        let mut comps: Vec<_> = components(&graph)
            .into_iter()
            .filter(|c| c.edge_count() > 0)
            .collect();
        comps.sort_by(|a, b| {
            b.vertex_count()
                .cmp(&a.vertex_count())
                .then(b.excess().cmp(&a.excess()))
        });
        let report = verify_structural_dichotomy(trace);
        let cfg = trace.config();
        writeln!(
            out,
            "trace{} scheme={} n={} m={} max_load={} bin=({},{})",
            trial.map(|t| format!(" {t}")).unwrap_or_default(),
            cfg.scheme,
            cfg.n,
            trace.m(),
            report.max_load,
            report.max_load_bin.side,
            report.max_load_bin.bin
        )
        .map_err(w)?;
        writeln!(
            out,
            "components nontrivial={} total={}",
            comps.len(),
            report.components
        )
        .map_err(w)?;
        let shown = if all_components {
            comps.len()
        } else {
            comps.len().min(20)
        };
        for c in &comps[..shown] {
            writeln!(
                out,
                "  size={} edges={} excess={}",
                c.vertex_count(),
                c.edge_count(),
                c.excess()
            )
            .map_err(w)?;
        }
        writeln!(out, "load graph (level |V_l| |E_l| a_l):").map_err(w)?;
        for p in &report.profile {
            let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
            writeln!(
                out,
                "  {} {} {} {}",
                p.level,
                p.vertices,
                opt(p.edges.map(|e| e.to_string())),
                opt(p.arboricity_bound.map(|a| a.to_string()))
            )
            .map_err(w)?;
        }
        if let Some(edges) = report.double_cycle_edges {
            writeln!(
                out,
                "double cycle in load graph: {} edges ({:?}), target {}{}",
                edges,
                report.double_cycle_shape.expect("set with edges"),
                report.double_cycle_target,
                if report.double_cycle_oversize {
                    " OVERSIZE"
                } else {
                    ""
                }
            )
            .map_err(w)?;
        }
        if check {
            let pf = |b: bool| if b { "pass" } else { "FAIL" };
            writeln!(out, "lemma32 {}", pf(report.lemma32_holds())).map_err(w)?;
            writeln!(out, "obs41 {}", pf(report.obs41_holds())).map_err(w)?;
            match report.inductive_witness {
                Some(ok) => writeln!(out, "inductive {}", pf(ok)).map_err(w)?,
                None => writeln!(out, "inductive skipped (graph has cycles)").map_err(w)?,
            }
            violations += report.violations().len();
        }
    }
    if violations > 0 {
        return Err(Failure::Violation(format!(
            "{violations} structural check(s) failed"
        )));
    }
    Ok(())
}

fn oracle(args: OracleArgs) -> Result<(), Failure> {
    let spec = CharSpec::new(args.c, args.q, 1)?;
    let keys: Vec<Key> = if args.universe == "all" {
        let size = 1u128 << spec.key_bits();
        if size > MAX_ENUMERATION {
            return Err(Error::Capacity(format!(
                "universe of 2^{} keys is too large",
                spec.key_bits()
            ))
            .into());
        }
        (0..size as u64).map(Key).collect()
    } else {
        read_keys(&args.universe)?
    };
    let n = keys.len();
    let (label, count, bound) = match args.kind {
        OracleKind::ZeroSum { t } => (
            format!("zero-sum t={t}"),
            count_zero_sum_tuples(&keys, t, &spec)?,
            zero_sum_bound(spec.c, t, n),
        ),
        OracleKind::Dependent { s } => (
            format!("dependent s={s}"),
            count_dependent_tuples(&keys, s, &spec)?,
            dependent_tuple_bound(spec.c, s, n),
        ),
    };
    println!(
        "{label} c={} q={} n={n} count={count} bound={bound}",
        spec.c, spec.q
    );
    if count as f64 > bound {
        return Err(Failure::Violation(format!(
            "count {count} exceeds bound {bound}"
        )));
    }
    Ok(())
}
