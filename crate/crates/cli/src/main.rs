use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use tvdens::approx::{
    approx_convex_concave, approx_convex_monotone, approx_logconcave, approx_monotone_pc, guerin_interpolation,
    Curve, GuerinCase,
};
use tvdens::builders::{build_candidates, BuilderSpec};
use tvdens::checks::{run_suite, SuiteSpec};
use tvdens::density::spec::DensitySpec;
use tvdens::estimator::{select, CandidateMeta, Diagnostic, EstimatorConfig};
use tvdens::sim::{run_sweep, BenchSpec, RiskReport};
use tvdens::Sample;

#[derive(Parser)]
#[command(name = "tvdens", version, about = "Total-variation density estimation under shape constraints")]
struct Cli {
    /// JSON configuration for the subcommand
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output path; stdout when absent
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed, overriding the one in the configuration
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; TVDENS_THREADS takes precedence
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = LogLevel::Warn)]
    log_level: LogLevel,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LogLevel {
    Error,
    Warn,
    Info,
    Debug,
    Trace,
}

impl LogLevel {
    fn filter(self) -> log::LevelFilter {
        match self {
            LogLevel::Error => log::LevelFilter::Error,
            LogLevel::Warn => log::LevelFilter::Warn,
            LogLevel::Info => log::LevelFilter::Info,
            LogLevel::Debug => log::LevelFilter::Debug,
            LogLevel::Trace => log::LevelFilter::Trace,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Select a density from data-driven candidates
    Estimate {
        /// One observation per line, optional header "x"
        sample: PathBuf,
        /// Builder specification (model, k, D_grid, ...)
        #[arg(long)]
        spec: PathBuf,
    },
    /// Build a certified approximation of a density
    Approx,
    /// Monte Carlo risk over an n-grid with declared bounds
    Bench {
        /// Per-replicate errors; defaults to the output path with a .csv extension
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run invariant suites
    Check,
}

/// Failures of a run that completed (bounds or checks), as opposed to input
/// errors.
const EXIT_FAILED: u8 = 1;
const EXIT_INPUT: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().filter_level(cli.log_level.filter()).init();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode> {
    configure_threads(cli.threads)?;
    match &cli.command {
        Command::Estimate { sample, spec } => estimate(cli, sample, spec),
        Command::Approx => approx(cli),
        Command::Bench { csv } => bench(cli, csv.as_deref()),
        Command::Check => check(cli),
    }
}

fn configure_threads(flag: Option<usize>) -> Result<()> {
    let threads = match std::env::var("TVDENS_THREADS") {
        Ok(v) => Some(v.trim().parse::<usize>().with_context(|| format!("TVDENS_THREADS={v:?} is not a count"))?),
        Err(_) => flag,
    };
    if let Some(t) = threads {
        log::debug!("using {t} worker threads");
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().context("configuring the thread pool")?;
    }
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn emit<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

/// One observation per line; the first line may be the header `x`. Blank
/// lines are skipped.
fn read_sample(path: &Path) -> Result<Sample> {
    let file = fs::File::open(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(file);
    let mut values = vec![];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: malformed row", path.display()))?;
        let line = rec.position().map_or(i as u64 + 1, |p| p.line());
        if rec.len() != 1 {
            bail!("{}:{line}: expected one column, found {}", path.display(), rec.len());
        }
        let field = rec[0].trim();
        if field.is_empty() {
            continue;
        }
        if values.is_empty() && i == 0 && field == "x" {
            continue;
        }
        let v: f64 = field.parse().map_err(|_| anyhow!("{}:{line}: not a number: {field:?}", path.display()))?;
        if !v.is_finite() {
            bail!("{}:{line}: non-finite observation {field:?}", path.display());
        }
        values.push(v);
    }
    if values.is_empty() {
        bail!("{}: no observations", path.display());
    }
    Ok(Sample::new(values)?)
}

#[derive(Serialize)]
struct EstimateOutput {
    index: usize,
    density: DensitySpec,
    meta: CandidateMeta,
    min_sup: f64,
    n: usize,
    candidates: usize,
    diagnostics: Vec<Diagnostic>,
}

fn estimate(cli: &Cli, sample: &Path, spec: &Path) -> Result<ExitCode> {
    let sample = read_sample(sample)?;
    let spec: BuilderSpec = read_json(spec)?;
    let config: EstimatorConfig = match &cli.config {
        Some(p) => read_json(p)?,
        None => EstimatorConfig::default(),
    };
    if cli.seed.is_some() {
        log::info!("estimate is deterministic; --seed is ignored");
    }
    let candidates = build_candidates(&sample, &spec)?;
    log::info!("{} candidates from {} observations", candidates.len(), sample.len());
    let sel = select(&sample, &candidates, &config)?;
    let out = EstimateOutput {
        index: sel.index,
        density: sel.density.to_spec()?,
        meta: candidates.meta(sel.index).clone(),
        min_sup: sel.min_sup,
        n: sample.len(),
        candidates: candidates.len(),
        diagnostics: sel.diagnostics,
    };
    emit(cli.out.as_deref(), &out)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Method {
    Monotone,
    ConvexConcave,
    ConvexMonotone,
    LogConcave,
    Guerin,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ApproxConfig {
    density: DensitySpec,
    method: Method,
    #[serde(rename = "D")]
    d: usize,
    /// Defaults to the support of the density.
    #[serde(default)]
    interval: Option<[f64; 2]>,
    #[serde(default)]
    case: Option<GuerinCase>,
}

fn approx(cli: &Cli) -> Result<ExitCode> {
    let path = cli.config.as_deref().ok_or_else(|| anyhow!("approx needs --config"))?;
    let cfg: ApproxConfig = read_json(path)?;
    let p = cfg.density.build()?;
    let (lo, hi) = match cfg.interval {
        Some([a, b]) => (a, b),
        None => p.support(),
    };
    let curve = || Curve::from_density(&p, lo, hi);
    let value = match cfg.method {
        Method::Monotone => serde_json::to_value(approx_monotone_pc(&p, lo, hi, cfg.d)?.report("monotone"))?,
        Method::ConvexMonotone => {
            serde_json::to_value(approx_convex_monotone(&curve()?, cfg.d)?.report("convex_monotone"))?
        }
        Method::ConvexConcave => {
            let r = approx_convex_concave(&curve()?, cfg.d)?;
            let mut v = serde_json::to_value(r.density.report("convex_concave"))?;
            v["gamma"] = r.gamma.into();
            v["split"] = r.split.into();
            v["certificate"] = r.certificate.into();
            v["interpolant"] = serde_json::to_value(r.interpolant.report("interpolant"))?;
            v
        }
        Method::LogConcave => serde_json::to_value(approx_logconcave(&p, cfg.d)?.report("log_concave"))?,
        Method::Guerin => {
            let case = cfg.case.ok_or_else(|| anyhow!("method guerin needs a case (\"i\" or \"ii\")"))?;
            serde_json::to_value(guerin_interpolation(&curve()?, cfg.d, case)?.report("guerin"))?
        }
    };
    emit(cli.out.as_deref(), &value)?;
    Ok(ExitCode::SUCCESS)
}

fn write_csv(path: &Path, report: &RiskReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["n", "replicate", "seed", "error_base", "error_star", "selected"])?;
    for (n, r, seed, eb, es, sel) in report.rows() {
        w.write_record([n.to_string(), r.to_string(), seed.to_string(), eb.to_string(), es.to_string(), sel.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn bench(cli: &Cli, csv: Option<&Path>) -> Result<ExitCode> {
    let path = cli.config.as_deref().ok_or_else(|| anyhow!("bench needs --config"))?;
    let mut spec: BenchSpec = read_json(path)?;
    if let Some(s) = cli.seed {
        spec.scenario.seed = s;
    }
    let report = run_sweep(&spec)?;
    emit(cli.out.as_deref(), &report)?;
    let csv_path = csv.map(Path::to_path_buf).or_else(|| cli.out.as_ref().map(|o| o.with_extension("csv")));
    if let Some(p) = csv_path {
        write_csv(&p, &report)?;
    }
    for c in report.checks.iter().filter(|c| !c.holds) {
        log::warn!("bound {:?} violated at n = {:?}: {} > {}", c.bound, c.n, c.observed, c.target);
    }
    Ok(if report.all_hold() { ExitCode::SUCCESS } else { ExitCode::from(EXIT_FAILED) })
}

fn check(cli: &Cli) -> Result<ExitCode> {
    let spec: SuiteSpec = match &cli.config {
        Some(p) => read_json(p)?,
        None => SuiteSpec::default(),
    };
    let report = run_suite(&spec)?;
    emit(cli.out.as_deref(), &report)?;
    Ok(if report.all_passed() { ExitCode::SUCCESS } else { ExitCode::from(EXIT_FAILED) })
}
