//! `forest-error`: fit forests, predict with uncertainty, run experiments.

mod model;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use forest_error::sim::{self, BenchConfig, ExperimentConfig, ExperimentReport};
use forest_error::{ErrorEstimator, ErrorModel, ForestParams};

use model::ModelFile;
use output::{write_atomic, Staged};

#[derive(Parser)]
#[command(name = "forest-error", version, about = "Random forest prediction-error estimation")]
struct Cli {
    /// Worker threads for fitting and estimation (default: all cores).
    #[arg(long, global = true, env = "FOREST_ERROR_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a forest on a CSV table and save it with its training data.
    Fit(FitArgs),
    /// Per-row predictions and uncertainty estimates from a saved model.
    Predict(PredictArgs),
    /// Run a synthetic experiment described by a JSON config.
    Simulate(SimulateArgs),
    /// Run a repeated train/test experiment on a CSV table.
    Bench(BenchArgs),
}

/// Forest hyperparameter overrides.
#[derive(Args, Clone, Default)]
struct ForestFlags {
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of trees.
    #[arg(long = "trees")]
    trees: Option<usize>,
    /// Candidate features per split (default: max(floor(p/3), 1)).
    #[arg(long)]
    mtry: Option<usize>,
    /// Nodes with fewer than twice this many in-bag rows are not split.
    #[arg(long = "min-node-size")]
    min_node_size: Option<usize>,
}

impl ForestFlags {
    fn apply(&self, params: &mut ForestParams) {
        if let Some(s) = self.seed {
            params.seed = s;
        }
        if let Some(b) = self.trees {
            params.n_trees = b;
        }
        if let Some(m) = self.mtry {
            params.mtry = Some(m);
        }
        if let Some(k) = self.min_node_size {
            params.min_node_size = k;
        }
    }
}

#[derive(Args)]
struct FitArgs {
    /// Training table with a header row.
    data: PathBuf,
    /// Name of the response column.
    #[arg(long)]
    response: String,
    /// Columns to one-hot encode (repeatable).
    #[arg(long)]
    categorical: Vec<String>,
    /// Output model file.
    #[arg(long, short)]
    out: PathBuf,
    #[command(flatten)]
    forest: ForestFlags,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Every estimate in one wide table.
    All,
    Interval,
    Quantile,
    Mspe,
    Bias,
    Bc,
}

#[derive(Args)]
struct PredictArgs {
    /// Model file written by `fit`.
    #[arg(long)]
    model: PathBuf,
    /// Table of query rows with the training covariate columns.
    data: PathBuf,
    /// Interval miscoverage level.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = Mode::All)]
    mode: Mode,
    /// Response quantile level for `--mode quantile`.
    #[arg(long, default_value_t = 0.5)]
    level: f64,
    /// Output CSV (default: standard output).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment config (JSON).
    config: PathBuf,
    /// Directory for report.csv, summary.csv and the curve table.
    out_dir: PathBuf,
    /// Full-scale run: 1000 repetitions and a 2000-point evaluation grid.
    #[arg(long)]
    full: bool,
    /// Override the number of repetitions.
    #[arg(long)]
    reps: Option<usize>,
    /// Override the interval miscoverage level.
    #[arg(long)]
    alpha: Option<f64>,
    #[command(flatten)]
    forest: ForestFlags,
}

#[derive(Args)]
struct BenchArgs {
    /// Benchmark table with a header row.
    data: PathBuf,
    /// Benchmark config (JSON).
    config: PathBuf,
    /// Directory for report.csv and summary.csv.
    out_dir: PathBuf,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[command(flatten)]
    forest: ForestFlags,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    configure_threads(cli.threads)?;
    match cli.command {
        Command::Fit(a) => fit(a),
        Command::Predict(a) => predict(a),
        Command::Simulate(a) => simulate(a),
        Command::Bench(a) => bench(a),
    }
}

#[cfg(feature = "parallel")]
fn configure_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        if n == 0 {
            bail!("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure the thread pool")?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(threads: Option<usize>) -> Result<()> {
    if threads == Some(0) {
        bail!("--threads must be positive");
    }
    Ok(())
}

fn require_file(path: &Path) -> Result<()> {
    if !path.is_file() {
        bail!("input file {} does not exist", path.display());
    }
    Ok(())
}

fn require_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(d) if !d.as_os_str().is_empty() && !d.is_dir() => {
            bail!("output directory {} does not exist", d.display())
        }
        _ if path.is_dir() => bail!("output path {} is a directory", path.display()),
        _ => Ok(()),
    }
}

fn prepare_dir(dir: &Path) -> Result<()> {
    if dir.exists() && !dir.is_dir() {
        bail!("output path {} is not a directory", dir.display());
    }
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn fit(a: FitArgs) -> Result<()> {
    require_file(&a.data)?;
    require_parent(&a.out)?;
    let loaded = sim::load_csv(&a.data, &a.response, &a.categorical)
        .with_context(|| format!("cannot load {}", a.data.display()))?;
    let mut params = ForestParams::default();
    a.forest.apply(&mut params);
    let forest = forest_error::Forest::fit(&loaded.dataset, &params)?;
    let file = ModelFile {
        schema: loaded.schema,
        data: loaded.dataset,
        forest,
    };
    write_atomic(&a.out, &file.to_bytes()?)
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn predict(a: PredictArgs) -> Result<()> {
    require_file(&a.model)?;
    require_file(&a.data)?;
    if let Some(out) = &a.out {
        require_parent(out)?;
    }
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        bail!("--alpha must be in (0, 1)");
    }
    if a.mode == Mode::Quantile && !(a.level > 0.0 && a.level < 1.0) {
        bail!("--level must be in (0, 1)");
    }
    let bytes = std::fs::read(&a.model).with_context(|| format!("cannot read {}", a.model.display()))?;
    let ModelFile { schema, data, forest } = ModelFile::from_bytes(&bytes)?;
    let (rows, _) = schema
        .encode_file(&a.data)
        .with_context(|| format!("cannot load {}", a.data.display()))?;
    let model = ErrorModel::new(forest, data)?;
    let estimates = model.estimate_many(&rows, a.alpha)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    let header: &[&str] = match a.mode {
        Mode::All => &[
            "row",
            "prediction",
            "bc_prediction",
            "mspe",
            "bias",
            "lower",
            "upper",
            "fallback_flag",
        ],
        Mode::Interval => &["row", "lower", "center", "upper"],
        Mode::Quantile => &["row", "prediction", "level", "quantile"],
        Mode::Mspe => &["row", "prediction", "mspe"],
        Mode::Bias => &["row", "prediction", "bias"],
        Mode::Bc => &["row", "prediction", "bc_prediction"],
    };
    w.write_record(header)?;
    for (i, (e, x)) in estimates.iter().zip(&rows).enumerate() {
        let record = match a.mode {
            Mode::All => vec![
                i.to_string(),
                fmt(e.prediction),
                fmt(e.bc_prediction),
                fmt(e.mspe),
                fmt(e.bias),
                fmt(e.interval.lower),
                fmt(e.interval.upper),
                u8::from(e.fallback_used).to_string(),
            ],
            Mode::Interval => vec![
                i.to_string(),
                fmt(e.interval.lower),
                fmt(e.prediction),
                fmt(e.interval.upper),
            ],
            Mode::Quantile => vec![
                i.to_string(),
                fmt(e.prediction),
                fmt(a.level),
                fmt(model.response_quantile(x, a.level)?),
            ],
            Mode::Mspe => vec![i.to_string(), fmt(e.prediction), fmt(e.mspe)],
            Mode::Bias => vec![i.to_string(), fmt(e.prediction), fmt(e.bias)],
            Mode::Bc => vec![i.to_string(), fmt(e.prediction), fmt(e.bc_prediction)],
        };
        w.write_record(&record)?;
    }
    let bytes = w.into_inner().context("cannot render the prediction table")?;
    match &a.out {
        Some(out) => write_atomic(out, &bytes),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&bytes)?;
            Ok(())
        }
    }
}

fn render<F>(report: &ExperimentReport, write: F) -> Result<Vec<u8>>
where
    F: Fn(&ExperimentReport, &mut Vec<u8>) -> forest_error::Result<()>,
{
    let mut buf = Vec::new();
    write(report, &mut buf)?;
    Ok(buf)
}

fn write_report(report: &ExperimentReport, dir: &Path, resolved_config: &[u8]) -> Result<()> {
    let mut staged = Staged::default();
    staged.add(&dir.join("report.csv"), &render(report, |r, b| r.write_rows(b))?)?;
    staged.add(&dir.join("summary.csv"), &render(report, |r, b| r.write_summary(b))?)?;
    if !report.curves.is_empty() {
        staged.add(&dir.join("curves.csv"), &render(report, |r, b| r.write_curves(b))?)?;
    }
    if !report.bias_curves.is_empty() {
        staged.add(
            &dir.join("bias_curves.csv"),
            &render(report, |r, b| r.write_bias_curves(b))?,
        )?;
    }
    staged.add(&dir.join("config.json"), resolved_config)?;
    staged.commit()
}

fn simulate(a: SimulateArgs) -> Result<()> {
    require_file(&a.config)?;
    let text = std::fs::read_to_string(&a.config).with_context(|| format!("cannot read {}", a.config.display()))?;
    let mut cfg: ExperimentConfig =
        serde_json::from_str(&text).with_context(|| format!("invalid config {}", a.config.display()))?;
    if a.full {
        cfg.reps = 1000;
        cfg.grid_size = 2000;
    }
    if let Some(r) = a.reps {
        cfg.reps = r;
    }
    if let Some(alpha) = a.alpha {
        cfg.alpha = alpha;
    }
    if let Some(s) = a.forest.seed {
        cfg.seed = s;
    }
    a.forest.apply(&mut cfg.forest);
    cfg.validate()?;
    prepare_dir(&a.out_dir)?;
    let report = sim::run_experiment(&cfg)?;
    write_report(&report, &a.out_dir, &serde_json::to_vec_pretty(&cfg)?)
}

fn bench(a: BenchArgs) -> Result<()> {
    require_file(&a.data)?;
    require_file(&a.config)?;
    let text = std::fs::read_to_string(&a.config).with_context(|| format!("cannot read {}", a.config.display()))?;
    let mut cfg: BenchConfig =
        serde_json::from_str(&text).with_context(|| format!("invalid config {}", a.config.display()))?;
    if let Some(r) = a.reps {
        cfg.reps = r;
    }
    if let Some(alpha) = a.alpha {
        cfg.alpha = alpha;
    }
    if let Some(s) = a.forest.seed {
        cfg.seed = s;
    }
    a.forest.apply(&mut cfg.forest);
    cfg.validate()?;
    prepare_dir(&a.out_dir)?;
    let loaded = sim::load_csv(&a.data, &cfg.response, &cfg.categorical)
        .with_context(|| format!("cannot load {}", a.data.display()))?;
    cfg.forest.validate(loaded.dataset.p())?;
    let label = a
        .data
        .file_stem()
        .map_or_else(|| "table".to_string(), |s| s.to_string_lossy().into_owned());
    let report = sim::run_benchmark(&label, &loaded.dataset, &cfg)?;
    write_report(&report, &a.out_dir, &serde_json::to_vec_pretty(&cfg)?)
}
