use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use samplopt::bounds::{BoundInputs, BoundReport};
use samplopt::gmm_data::{
    capped_size, gen_adversarial_dataset, gen_sparse_dataset, validate_dataset, Dataset,
    DEFAULT_N_MAX,
};
use samplopt::harness::{
    emit_plot, oracle_suite, read_csv, run_single, summarize, sweep, write_csv, Algo,
    ObjectiveKind, OracleScale, RunAlgo, RunSpec, Summary, SweepConfig, QUERY_ACCOUNTING,
};
use samplopt::samplers::write_samples_csv;
use samplopt::RngStream;

/// Langevin sampling versus optimization on locally nonconvex objectives.
#[derive(Parser, Debug)]
#[command(name = "samplopt", version, propagate_version = true)]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate the closed-form complexity bounds.
    Bounds(BoundsArgs),
    /// Generate a dataset and write it as JSON.
    GenData(GenDataArgs),
    /// Run one sampler or optimizer for a fixed number of iterations.
    Run(RunArgs),
    /// Sweep dimensions comparing EM and Langevin query counts.
    Sweep(SweepArgs),
    /// Run the correctness checks and print pass/fail per property.
    Validate(ValidateArgs),
    /// Draw median queries against dimension from a summary or run table.
    Plot(PlotArgs),
}

#[derive(Args, Debug)]
struct BoundsArgs {
    /// Smoothness constant.
    #[arg(long = "L", value_name = "L")]
    l: f64,
    /// Strong-convexity constant outside the ball.
    #[arg(long = "m")]
    m: f64,
    /// Radius of the nonconvex region.
    #[arg(long = "R", value_name = "R")]
    r: f64,
    /// Accuracy.
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    dim: usize,
    /// Success probability used by the optimization and tempering bounds.
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long, default_value_t = 1.0)]
    prefactor_ula: f64,
    #[arg(long, default_value_t = 1.0)]
    prefactor_mala: f64,
    /// Print only the JSON report.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct GenDataArgs {
    /// `sparse` or `adversarial`.
    #[arg(long, default_value = "sparse")]
    kind: String,
    #[arg(long)]
    dim: usize,
    /// Number of points; defaults to min(2^d, 4096) for sparse data.
    #[arg(long)]
    n: Option<usize>,
    /// Cluster count of adversarial data.
    #[arg(long = "mixtures", default_value_t = 4)]
    mixtures: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// ula, mala, gd or em.
    #[arg(long)]
    algo: String,
    /// quadratic, packed_well or gmm.
    #[arg(long)]
    objective: String,
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    steps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Step size; defaults to 0.5 / L.
    #[arg(long)]
    h: Option<f64>,
    /// Record CSV output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write sampler iterates to this CSV.
    #[arg(long)]
    samples: Option<PathBuf>,
    /// Keep every n-th iterate in the samples file.
    #[arg(long, default_value_t = 1)]
    thin: u64,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// JSON file with SweepConfig fields; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dimensions, e.g. `2,3,4` or `2-16`.
    #[arg(long)]
    dims: Option<String>,
    /// Algorithms, e.g. `em,ula`.
    #[arg(long)]
    algos: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    /// Gradient-query budget per run.
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Skip EM cells above this dimension.
    #[arg(long)]
    em_max_dim: Option<usize>,
    /// Run table CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Summary JSON.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// SVG plot.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Reference cache JSON.
    #[arg(long)]
    references: Option<PathBuf>,
    /// Worker threads (overrides SAMPLOPT_WORKERS).
    #[arg(long)]
    workers: Option<usize>,
    /// Record wall-clock milliseconds per run.
    #[arg(long)]
    timing: bool,
    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    /// Shorter chains and fewer repetitions.
    #[arg(long)]
    quick: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the results as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// Summary JSON written by `sweep`.
    #[arg(long, conflicts_with = "csv", required_unless_present = "csv")]
    summary: Option<PathBuf>,
    /// Run table CSV written by `sweep`.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Output SVG.
    #[arg(long)]
    out: PathBuf,
}

/// Exit status of a command that ran to completion.
enum Status {
    Ok,
    /// Some cells or checks failed.
    Partial,
    /// Every cell failed.
    Failed,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli.command) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Partial) => ExitCode::from(3),
        Ok(Status::Failed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Raised for bad input detected by the front end itself.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return 1;
        }
        if let Some(err) = cause.downcast_ref::<samplopt::Error>() {
            return match err {
                // unreadable or malformed input files
                samplopt::Error::Io(_) | samplopt::Error::Format(_) => 1,
                e if e.is_user_error() => 1,
                _ => 2,
            };
        }
    }
    2
}

fn dispatch(cmd: Command) -> Result<Status> {
    match cmd {
        Command::Bounds(a) => bounds(a),
        Command::GenData(a) => gen_data(a),
        Command::Run(a) => run(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Validate(a) => validate(a),
        Command::Plot(a) => plot(a),
    }
}

fn write_out(path: Option<&PathBuf>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes)
            .map_err(samplopt::Error::from)
            .with_context(|| format!("writing {}", p.display())),
        None => {
            io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

fn read_in(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path)
        .map_err(samplopt::Error::from)
        .with_context(|| format!("reading {}", path.display()))
}

fn bounds(a: BoundsArgs) -> Result<Status> {
    let report = BoundReport::compute(BoundInputs {
        l: a.l,
        m: a.m,
        r: a.r,
        eps: a.eps,
        d: a.dim,
        p: a.p,
        prefactor_ula: a.prefactor_ula,
        prefactor_mala: a.prefactor_mala,
    })?;
    let json = serde_json::to_string_pretty(&report)?;
    if a.json {
        println!("{json}");
    } else {
        println!("{report}");
        println!("{json}");
    }
    Ok(Status::Ok)
}

fn gen_data(a: GenDataArgs) -> Result<Status> {
    let mut rng = RngStream::new(a.seed, 0);
    let ds: Dataset = match a.kind.as_str() {
        "sparse" => {
            let (n, requested) = capped_size(a.dim, DEFAULT_N_MAX);
            let mut ds = gen_sparse_dataset(a.dim, a.n.unwrap_or(n), &mut rng)?;
            if a.n.is_none() && requested != n {
                ds.n_requested = Some(requested);
            }
            ds
        }
        "adversarial" => gen_adversarial_dataset(a.dim, a.mixtures, a.n.unwrap_or(64), &mut rng)?,
        other => {
            return Err(usage(format!(
                "unknown dataset kind {other:?} (expected sparse or adversarial)"
            )))
        }
    };
    let violations = validate_dataset(&ds);
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        bail!("generated dataset is invalid: {}", list.join("; "));
    }
    let mut json = ds.to_json()?;
    json.push('\n');
    write_out(a.out.as_ref(), json.as_bytes())?;
    Ok(Status::Ok)
}

fn run(a: RunArgs) -> Result<Status> {
    let algo: RunAlgo = a.algo.parse()?;
    let objective: ObjectiveKind = a.objective.parse()?;
    let mut spec = RunSpec::new(algo, objective, a.dim, a.steps, a.seed);
    spec.step_size = a.h;
    spec.thin = if a.samples.is_some() {
        a.thin.max(1)
    } else {
        0
    };
    let out = run_single(&spec)?;
    eprintln!("{QUERY_ACCOUNTING}");
    let mut buf = Vec::new();
    write_csv(&mut buf, std::slice::from_ref(&out.record))?;
    write_out(a.out.as_ref(), &buf)?;
    if let Some(p) = &a.samples {
        let mut buf = Vec::new();
        write_samples_csv(&mut buf, &out.samples)?;
        write_out(Some(p), &buf)?;
    }
    Ok(Status::Ok)
}

fn parse_dims(s: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| usage(format!("bad dimension {t:?} in --dims")))
        };
        match part.split_once('-') {
            Some((lo, hi)) => {
                let (lo, hi) = (num(lo)?, num(hi)?);
                if lo > hi {
                    return Err(usage(format!("empty range {part:?} in --dims")));
                }
                out.extend(lo..=hi);
            }
            None => out.push(num(part)?),
        }
    }
    if out.is_empty() {
        return Err(usage("--dims is empty"));
    }
    Ok(out)
}

fn parse_algos(s: &str) -> Result<Vec<Algo>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<Algo>().map_err(anyhow::Error::from))
        .collect()
}

fn sweep_config(a: &SweepArgs) -> Result<SweepConfig> {
    let mut cfg = match &a.config {
        Some(p) => SweepConfig::from_json(&read_in(p)?)
            .with_context(|| format!("config {}", p.display()))?,
        None => SweepConfig::default(),
    };
    if let Some(d) = &a.dims {
        cfg.dims = parse_dims(d)?;
    }
    if let Some(al) = &a.algos {
        cfg.algos = parse_algos(al)?;
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(b) = a.budget {
        cfg.budget = b;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(e) = a.em_max_dim {
        cfg.em_max_dim = e;
    }
    if let Some(w) = a.workers {
        cfg.workers = w;
    }
    if a.timing {
        cfg.record_wall_time = true;
    }
    for (slot, flag) in [
        (&mut cfg.output.csv, &a.out),
        (&mut cfg.output.summary, &a.summary),
        (&mut cfg.output.plot, &a.plot),
        (&mut cfg.output.references, &a.references),
    ] {
        if flag.is_some() {
            slot.clone_from(flag);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_summary(summary: &Summary) {
    println!("{QUERY_ACCOUNTING}");
    println!(
        "{:<6}{:>4}{:>8}{:>11}{:>11}{:>8}{:>16}{:>16}",
        "algo", "d", "trials", "converged", "exhausted", "errors", "median queries", "mean queries"
    );
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:.1}")).unwrap_or_else(|| "-".into());
    for c in &summary.cells {
        println!(
            "{:<6}{:>4}{:>8}{:>11}{:>11}{:>8}{:>16}{:>16}",
            c.algo,
            c.dim,
            c.trials,
            c.converged,
            c.exhausted,
            c.errors,
            fmt(c.median_queries),
            fmt(c.mean_queries)
        );
    }
    for (algo, s) in &summary.slopes {
        println!("log-log slope of median queries vs d, {algo}: {s:.3}");
    }
    for e in &summary.errors {
        println!(
            "error: {} d={} trial {}: {}",
            e.algo, e.dim, e.trial, e.message
        );
    }
}

fn run_sweep(a: SweepArgs) -> Result<Status> {
    let cfg = sweep_config(&a)?;
    if a.print_config {
        println!("{}", cfg.to_json()?);
        return Ok(Status::Ok);
    }
    info!("{} cells", cfg.cells().len());
    let out = sweep(&cfg)?;
    print_summary(&out.summary);
    if cfg.output.csv.is_none() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &out.records)?;
        io::stdout().write_all(&buf)?;
    }
    let errors = out.summary.errors.len();
    Ok(if errors == 0 {
        Status::Ok
    } else if errors == out.records.len() {
        Status::Failed
    } else {
        Status::Partial
    })
}

fn validate(a: ValidateArgs) -> Result<Status> {
    let scale = if a.quick {
        OracleScale::quick()
    } else {
        OracleScale::full()
    };
    let checks = oracle_suite(&scale, a.seed);
    for c in &checks {
        println!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!(
        "{} of {} checks passed",
        checks.len() - failed,
        checks.len()
    );
    if let Some(p) = &a.json {
        write_out(
            Some(p),
            (serde_json::to_string_pretty(&checks)? + "\n").as_bytes(),
        )?;
    }
    Ok(if failed == 0 {
        Status::Ok
    } else {
        Status::Partial
    })
}

fn plot(a: PlotArgs) -> Result<Status> {
    let summary = match (&a.summary, &a.csv) {
        (Some(p), _) => {
            Summary::from_json(&read_in(p)?).with_context(|| format!("summary {}", p.display()))?
        }
        (None, Some(p)) => {
            let file = fs::File::open(p)
                .map_err(samplopt::Error::from)
                .with_context(|| format!("reading {}", p.display()))?;
            summarize(&read_csv(file)?, None)
        }
        (None, None) => return Err(usage("need --summary or --csv")),
    };
    emit_plot(&summary, &a.out)?;
    Ok(Status::Ok)
}
