//! Command-line front end. Every flag can also be set through an
//! environment variable `FMCMSN_<FLAG>`, e.g. `FMCMSN_SEED=3`; a flag given
//! on the command line wins.
//!
//! Exit codes: 0 success, 1 runtime error, 2 usage error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::fit::{fit, impute, FitConfig, DEFAULT_BETA_FLOOR, DEFAULT_MAX_ITER, DEFAULT_STARTS, DEFAULT_TOL};
use crate::io::csv::{read_csv, read_labels, read_labels_from, write_csv_to, write_truth, LabelTable};
use crate::io::gridspec::{read_grid_spec, write_cells_to, write_runs_to};
use crate::io::result::{data_digest, read_result, sha256_hex, ResultDocument, RunManifest};
use crate::sim::{ari, confusion_rates, data_seed, inject_mar, mask_seed, run_grid, Case, Part, Proximity, ScenarioSpec};

#[derive(Debug, Parser)]
#[command(name = "fmcmsn", version, about = "Clustering, outlier detection and imputation with contaminated skew-normal mixtures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a mixture to a CSV file and write a JSON result document.
    Fit(FitArgs),
    /// Draw a simulated dataset and its ground truth.
    Simulate(SimulateArgs),
    /// Fill missing cells with their conditional means under a fitted model.
    Impute(ImputeArgs),
    /// Compare predicted labels and outlier flags with the truth.
    Evaluate(EvaluateArgs),
    /// Run a simulation grid described by a key=value spec file.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Args)]
struct NaArgs {
    /// Cell values read as missing.
    #[arg(long = "na", env = "FMCMSN_NA", value_delimiter = ',', default_values_t = ["".to_string(), "NA".to_string(), "NaN".to_string()])]
    na: Vec<String>,
}

impl NaArgs {
    fn tokens(&self) -> Vec<&str> {
        self.na.iter().map(String::as_str).collect()
    }
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long, env = "FMCMSN_DATA")]
    data: PathBuf,
    #[arg(long, env = "FMCMSN_CLUSTERS")]
    clusters: usize,
    #[arg(long, env = "FMCMSN_TOL", default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, env = "FMCMSN_MAX_ITER", default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
    #[arg(long, env = "FMCMSN_STARTS", default_value_t = DEFAULT_STARTS)]
    starts: usize,
    #[arg(long, env = "FMCMSN_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "FMCMSN_BETA_FLOOR", default_value_t = DEFAULT_BETA_FLOOR)]
    beta_floor: f64,
    /// Fix every skewness vector at zero.
    #[arg(long, env = "FMCMSN_NO_SKEW")]
    no_skew: bool,
    /// Fix every good-point proportion at one.
    #[arg(long, env = "FMCMSN_NO_CONTAMINATION")]
    no_contamination: bool,
    /// Lower bound on the good-point proportions.
    #[arg(long, env = "FMCMSN_ALPHA_MIN")]
    alpha_min: Option<f64>,
    /// Result document path; standard output when omitted.
    #[arg(long, env = "FMCMSN_OUT")]
    out: Option<PathBuf>,
    /// Also write a run manifest with timestamps and the command line.
    #[arg(long, env = "FMCMSN_MANIFEST")]
    manifest: Option<PathBuf>,
    #[arg(long, env = "FMCMSN_WORKERS")]
    workers: Option<usize>,
    #[command(flatten)]
    na: NaArgs,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, env = "FMCMSN_PART")]
    part: Part,
    #[arg(long, env = "FMCMSN_CASE")]
    case: Case,
    #[arg(long, env = "FMCMSN_N")]
    n: usize,
    #[arg(long, env = "FMCMSN_PROXIMITY", default_value = "far")]
    proximity: Proximity,
    /// Fraction of rows that receive missing cells.
    #[arg(long, env = "FMCMSN_MISSING_FRAC", default_value_t = 0.0)]
    missing_frac: f64,
    #[arg(long, env = "FMCMSN_SEED", default_value_t = 0)]
    seed: u64,
    /// Data CSV path.
    #[arg(long, env = "FMCMSN_OUT")]
    out: PathBuf,
    /// Truth sidecar path; defaults to the data path with `.truth.csv`
    /// replacing its extension.
    #[arg(long, env = "FMCMSN_TRUTH_OUT")]
    truth_out: Option<PathBuf>,
    #[arg(long, env = "FMCMSN_MANIFEST")]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ImputeArgs {
    /// Result document written by `fit`.
    #[arg(long, env = "FMCMSN_MODEL")]
    model: PathBuf,
    #[arg(long, env = "FMCMSN_DATA")]
    data: PathBuf,
    /// Completed CSV path; standard output when omitted.
    #[arg(long, env = "FMCMSN_OUT")]
    out: Option<PathBuf>,
    #[arg(long, env = "FMCMSN_WORKERS")]
    workers: Option<usize>,
    #[command(flatten)]
    na: NaArgs,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// A result document, or a CSV with a `label` column and optionally an
    /// `outlier` column.
    #[arg(long, env = "FMCMSN_PRED")]
    pred: PathBuf,
    /// A CSV with a `label` column and optionally a `good` or `outlier`
    /// column, such as the sidecar written by `simulate`.
    #[arg(long, env = "FMCMSN_TRUTH")]
    truth: PathBuf,
}

#[derive(Debug, Args)]
struct BenchmarkArgs {
    #[arg(long, env = "FMCMSN_GRID")]
    grid: PathBuf,
    /// Per-run table.
    #[arg(long, env = "FMCMSN_OUT")]
    out: PathBuf,
    /// Per-cell means; printed to standard output either way.
    #[arg(long, env = "FMCMSN_SUMMARY")]
    summary: Option<PathBuf>,
    #[arg(long, env = "FMCMSN_WORKERS")]
    workers: Option<usize>,
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let argv: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match dispatch(cli.command, &argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(command: Command, argv: &[String]) -> Result<()> {
    let workers = match &command {
        Command::Fit(a) => a.workers,
        Command::Impute(a) => a.workers,
        Command::Benchmark(a) => a.workers,
        Command::Simulate(_) | Command::Evaluate(_) => None,
    };
    match workers {
        None => execute(command, argv),
        Some(0) => Err(Error::InvalidParameter("--workers must be >= 1".into())),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Other(e.to_string()))?
            .install(|| execute(command, argv)),
    }
}

fn execute(command: Command, argv: &[String]) -> Result<()> {
    match command {
        Command::Fit(a) => cmd_fit(a, argv),
        Command::Simulate(a) => cmd_simulate(a, argv),
        Command::Impute(a) => cmd_impute(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Benchmark(a) => cmd_benchmark(a),
    }
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

/// Writes to `path`, or to standard output when it is `None`.
fn with_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut file = io::BufWriter::new(File::create(p)?);
            f(&mut file)?;
            file.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn write_manifest(path: &Path, mut manifest: RunManifest, argv: &[String], started: f64) -> Result<()> {
    manifest.argv = Some(argv.to_vec());
    manifest.started_at = Some(started);
    manifest.finished_at = Some(now());
    let mut s = serde_json::to_string_pretty(&manifest)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

fn cmd_fit(a: FitArgs, argv: &[String]) -> Result<()> {
    let started = now();
    let bytes = std::fs::read(&a.data)?;
    let data = crate::io::csv::read_csv_from(bytes.as_slice(), &a.na.tokens())?;
    let config = FitConfig {
        clusters: a.clusters,
        tol: a.tol,
        max_iter: a.max_iter,
        n_starts: a.starts,
        seed: a.seed,
        beta_floor: a.beta_floor,
        no_skew: a.no_skew,
        no_contamination: a.no_contamination,
        alpha_min: a.alpha_min,
        workers: None,
    };
    let result = fit(&data, &config)?;
    let manifest = RunManifest::new("fit", config.seed, &config, sha256_hex(&bytes))?;
    let doc = ResultDocument::from_fit(&result, manifest.clone());
    with_output(a.out.as_deref(), |w| Ok(w.write_all(doc.to_json()?.as_bytes())?))?;
    if let Some(p) = &a.manifest {
        write_manifest(p, manifest, argv, started)?;
    }
    if !result.converged {
        eprintln!("warning: no convergence after {} iterations", result.n_iters);
    }
    Ok(())
}

/// `data.csv` -> `data.truth.csv`.
fn default_truth_path(out: &Path) -> PathBuf {
    out.with_extension("truth.csv")
}

fn cmd_simulate(a: SimulateArgs, argv: &[String]) -> Result<()> {
    let started = now();
    let spec = ScenarioSpec {
        part: a.part,
        case: a.case,
        n: a.n,
        proximity: a.proximity,
        missing_fractions: vec![a.missing_frac],
        replicates: 1,
        seed: a.seed,
    };
    spec.validate()?;
    let (complete, mut truth) = spec.generate(data_seed(a.seed, 0))?;
    let data = if a.missing_frac > 0.0 {
        let (masked, mask) = inject_mar(&complete, a.missing_frac, mask_seed(a.seed, 0, 0))?;
        truth.mask = mask;
        masked
    } else {
        complete
    };
    let truth_path = a.truth_out.clone().unwrap_or_else(|| default_truth_path(&a.out));
    if truth_path == a.out {
        return Err(Error::InvalidParameter("truth sidecar path equals the data path".into()));
    }
    with_output(Some(&a.out), |w| write_csv_to(w, &data))?;
    write_truth(&truth_path, &truth, data.p())?;
    if let Some(p) = &a.manifest {
        let manifest = RunManifest::new("simulate", a.seed, &spec, data_digest(&data))?;
        write_manifest(p, manifest, argv, started)?;
    }
    Ok(())
}

fn cmd_impute(a: ImputeArgs) -> Result<()> {
    let model = read_result(&a.model)?.to_model()?;
    let data = read_csv(&a.data, &a.na.tokens())?;
    let filled = impute(&model, &data)?;
    let mut out = DataMatrix::complete(&filled)?;
    if let Some(names) = data.column_names() {
        out = out.with_column_names(names.to_vec())?;
    }
    with_output(a.out.as_deref(), |w| write_csv_to(w, &out))
}

fn read_predictions(path: &Path) -> Result<LabelTable> {
    let text = std::fs::read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        let doc = ResultDocument::from_json(&text)?;
        return Ok(LabelTable { labels: doc.labels, bad: Some(doc.outliers) });
    }
    read_labels_from(text.as_bytes())
}

fn fmt_metric(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), |v| format!("{v:.6}"))
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let pred = read_predictions(&a.pred)?;
    let truth = read_labels(&a.truth)?;
    if pred.labels.len() != truth.labels.len() {
        return Err(Error::Dimension(format!("{} predictions for {} truth rows", pred.labels.len(), truth.labels.len())));
    }
    let ari = ari(&pred.labels, &truth.labels)?;
    let rates = match (&pred.bad, &truth.bad) {
        (Some(p), Some(t)) => Some(confusion_rates(p, t)?),
        _ => None,
    };
    println!("ARI {}", fmt_metric(Some(ari)));
    println!("accuracy {}", fmt_metric(rates.map(|r| r.accuracy)));
    println!("TPR {}", fmt_metric(rates.and_then(|r| r.tpr)));
    println!("FPR {}", fmt_metric(rates.and_then(|r| r.fpr)));
    Ok(())
}

fn cmd_benchmark(a: BenchmarkArgs) -> Result<()> {
    let spec = read_grid_spec(&a.grid)?;
    let results = run_grid(&spec.scenario, &spec.configs)?;
    with_output(Some(&a.out), |w| write_runs_to(w, &results.runs))?;
    if let Some(p) = &a.summary {
        with_output(Some(p), |w| write_cells_to(w, &results.cells))?;
    }
    with_output(None, |w| write_cells_to(w, &results.cells))
}
