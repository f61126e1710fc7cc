//! Repetition runners for the bias and interval protocols.

use rand::seq::SliceRandom;

use super::config::{BenchConfig, ExperimentConfig, ExperimentKind, Method};
use super::datagen::DatasetName;
use super::report::{BiasCurveRow, CurveRow, ExperimentReport, MethodSummary, RepRow};
use crate::baselines::{BoostCorrector, QuantileForest, UnweightedOob};
use crate::dataset::Dataset;
use crate::error::Result;
use crate::estimate::{ErrorEstimator, ErrorModel, PredictionInterval, StringentModel};
use crate::forest::ForestParams;
use crate::par;
use crate::rng::{derive_rng, derive_seed, stream};

/// Interval estimators fitted on one training set.
pub struct IntervalSuite {
    alpha: f64,
    model: Option<ErrorModel>,
    qrf: Option<QuantileForest>,
    unweighted: Option<UnweightedOob>,
    stringent: Option<StringentModel>,
}

impl IntervalSuite {
    pub fn fit(
        train: &Dataset,
        params: &ForestParams,
        methods: &[Method],
        alpha: f64,
        partition_seed: u64,
    ) -> Result<Self> {
        let needs_forest = methods
            .iter()
            .any(|m| matches!(m, Method::PiHat | Method::Qrf | Method::UnweightedOOB));
        let model = if needs_forest {
            Some(ErrorModel::fit(train.clone(), params)?)
        } else {
            None
        };
        let qrf = match (&model, methods.contains(&Method::Qrf)) {
            (Some(m), true) => Some(QuantileForest::new(m.forest(), m.data())?),
            _ => None,
        };
        let unweighted = match (&model, methods.contains(&Method::UnweightedOOB)) {
            (Some(m), true) => Some(UnweightedOob::new(m.data(), m.oob(), alpha)?),
            _ => None,
        };
        let stringent = if methods.contains(&Method::Stringent) {
            Some(StringentModel::fit(train, params, partition_seed)?)
        } else {
            None
        };
        Ok(Self {
            alpha,
            model,
            qrf,
            unweighted,
            stringent,
        })
    }

    pub fn model(&self) -> Option<&ErrorModel> {
        self.model.as_ref()
    }

    pub fn stringent(&self) -> Option<&StringentModel> {
        self.stringent.as_ref()
    }

    /// Intervals of `method` at every point. Panics if `method` was not fitted.
    pub fn intervals(&self, method: Method, points: &[Vec<f64>]) -> Result<Vec<PredictionInterval>> {
        let alpha = self.alpha;
        let results: Vec<Result<PredictionInterval>> = match method {
            Method::PiHat => {
                let m = self.model.as_ref().expect("PI_hat not fitted");
                par::map_slice(points, |x| m.interval(x, alpha))
            }
            Method::Stringent => {
                let s = self.stringent.as_ref().expect("stringent not fitted");
                par::map_slice(points, |x| s.interval(x, alpha))
            }
            Method::Qrf => {
                let m = self.model.as_ref().expect("forest not fitted");
                let q = self.qrf.as_ref().expect("QRF not fitted");
                par::map_slice(points, |x| q.interval(m.forest(), x, alpha))
            }
            Method::UnweightedOOB => {
                let m = self.model.as_ref().expect("forest not fitted");
                let u = self.unweighted.as_ref().expect("unweighted OOB not fitted");
                par::map_slice(points, |x| Ok(u.interval_at(m.forest().predict(x))))
            }
            other => panic!("{} is not an interval method", other.label()),
        };
        results.into_iter().collect()
    }
}

/// Point predictors (raw and bias-corrected) fitted on one training set.
pub struct BiasSuite {
    model: ErrorModel,
    boost: Option<BoostCorrector>,
    stringent: Option<StringentModel>,
}

impl BiasSuite {
    pub fn fit(train: &Dataset, params: &ForestParams, methods: &[Method], partition_seed: u64) -> Result<Self> {
        let model = ErrorModel::fit(train.clone(), params)?;
        let boost = if methods.contains(&Method::BoostBC) {
            Some(BoostCorrector::fit(model.data(), model.oob(), params)?)
        } else {
            None
        };
        let stringent = if methods.contains(&Method::Stringent) {
            Some(StringentModel::fit(train, params, partition_seed)?)
        } else {
            None
        };
        Ok(Self {
            model,
            boost,
            stringent,
        })
    }

    pub fn model(&self) -> &ErrorModel {
        &self.model
    }

    pub fn predictions(&self, method: Method, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        let results: Vec<Result<f64>> = match method {
            Method::RawRF => par::map_slice(points, |x| Ok(self.model.forest().predict(x))),
            Method::PiHat => par::map_slice(points, |x| self.model.bias_corrected(x)),
            Method::BoostBC => {
                let b = self.boost.as_ref().expect("boosting not fitted");
                par::map_slice(points, |x| Ok(b.correct(self.model.forest().predict(x), x)))
            }
            Method::Stringent => {
                let s = self.stringent.as_ref().expect("stringent not fitted");
                par::map_slice(points, |x| s.bias_corrected(x))
            }
            other => panic!("{} is not a point predictor", other.label()),
        };
        results.into_iter().collect()
    }
}

fn rows_of(data: &Dataset) -> Vec<Vec<f64>> {
    data.rows().map(<[f64]>::to_vec).collect()
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut n = 0usize;
    let mut s = 0.0;
    for v in values {
        s += v;
        n += 1;
    }
    s / n as f64
}

fn coverage_and_width(intervals: &[PredictionInterval], y: &[f64]) -> (f64, f64) {
    let covered = intervals.iter().zip(y).filter(|(pi, &y)| pi.contains(y)).count();
    (
        covered as f64 / y.len() as f64,
        mean(intervals.iter().map(PredictionInterval::width)),
    )
}

fn mspe(pred: &[f64], y: &[f64]) -> f64 {
    mean(pred.iter().zip(y).map(|(p, y)| (y - p).powi(2)))
}

struct RepDraw {
    train: Dataset,
    test: Dataset,
    params: ForestParams,
    partition_seed: u64,
}

fn synthetic_draw(cfg: &ExperimentConfig, rep: usize) -> Result<RepDraw> {
    let rep = rep as u64;
    Ok(RepDraw {
        train: cfg
            .dataset
            .sample(cfg.n_train, &mut derive_rng(cfg.seed, stream::TRAIN, rep))?,
        test: cfg
            .dataset
            .sample(cfg.n_test.max(2), &mut derive_rng(cfg.seed, stream::TEST, rep))?,
        params: cfg.forest.with_seed(derive_seed(cfg.seed, stream::FOREST, rep)),
        partition_seed: derive_seed(cfg.seed, stream::PARTITION, rep),
    })
}

fn table_draw(data: &Dataset, cfg: &BenchConfig, rep: usize) -> Result<RepDraw> {
    let rep = rep as u64;
    let mut order: Vec<usize> = (0..data.n()).collect();
    order.shuffle(&mut derive_rng(cfg.seed, stream::REPETITION, rep));
    let n_train = ((data.n() as f64 * cfg.train_fraction).round() as usize).clamp(2, data.n() - 2);
    let test_rows = order.split_off(n_train);
    Ok(RepDraw {
        train: data.subset(&order)?,
        test: data.subset(&test_rows)?,
        params: cfg.forest.with_seed(derive_seed(cfg.seed, stream::FOREST, rep)),
        partition_seed: derive_seed(cfg.seed, stream::PARTITION, rep),
    })
}

/// Fixed evaluation points for MSB and curves.
pub fn evaluation_grid(cfg: &ExperimentConfig) -> Vec<Vec<f64>> {
    let seed = cfg.grid_seed.unwrap_or_else(|| derive_seed(cfg.seed, stream::GRID, 0));
    cfg.dataset
        .sample_covariates(cfg.grid_size, &mut crate::rng::rng_from(seed))
}

struct IntervalRep {
    metrics: Vec<(f64, f64)>,
    grid: Vec<Vec<PredictionInterval>>,
}

fn interval_rep(draw: &RepDraw, methods: &[Method], alpha: f64, grid: &[Vec<f64>]) -> Result<IntervalRep> {
    let suite = IntervalSuite::fit(&draw.train, &draw.params, methods, alpha, draw.partition_seed)?;
    let test_points = rows_of(&draw.test);
    let mut metrics = Vec::with_capacity(methods.len());
    let mut grid_out = Vec::with_capacity(methods.len());
    for &m in methods {
        let intervals = suite.intervals(m, &test_points)?;
        metrics.push(coverage_and_width(&intervals, draw.test.y()));
        grid_out.push(if grid.is_empty() {
            Vec::new()
        } else {
            suite.intervals(m, grid)?
        });
    }
    Ok(IntervalRep {
        metrics,
        grid: grid_out,
    })
}

struct BiasRep {
    mspe: Vec<f64>,
    grid: Vec<Vec<f64>>,
}

fn bias_rep(draw: &RepDraw, methods: &[Method], grid: &[Vec<f64>]) -> Result<BiasRep> {
    let suite = BiasSuite::fit(&draw.train, &draw.params, methods, draw.partition_seed)?;
    let test_points = rows_of(&draw.test);
    let mut errs = Vec::with_capacity(methods.len());
    let mut grid_out = Vec::with_capacity(methods.len());
    for &m in methods {
        errs.push(mspe(&suite.predictions(m, &test_points)?, draw.test.y()));
        grid_out.push(if grid.is_empty() {
            Vec::new()
        } else {
            suite.predictions(m, grid)?
        });
    }
    Ok(BiasRep {
        mspe: errs,
        grid: grid_out,
    })
}

fn summarize(kind: ExperimentKind, methods: &[Method], rows: &[RepRow], msb: Option<&[f64]>) -> Vec<MethodSummary> {
    methods
        .iter()
        .enumerate()
        .map(|(k, &method)| {
            let mine: Vec<&RepRow> = rows.iter().filter(|r| r.method == method).collect();
            let avg = |f: fn(&RepRow) -> Option<f64>| -> Option<f64> {
                let v: Option<Vec<f64>> = mine.iter().map(|r| f(r)).collect();
                v.map(mean)
            };
            MethodSummary {
                method,
                reps: mine.len(),
                mean_coverage: if kind == ExperimentKind::Interval {
                    avg(|r| r.coverage)
                } else {
                    None
                },
                mean_width: if kind == ExperimentKind::Interval {
                    avg(|r| r.width)
                } else {
                    None
                },
                msb: msb.map(|m| m[k]),
                mspe: if kind == ExperimentKind::Bias {
                    avg(|r| r.mspe)
                } else {
                    None
                },
            }
        })
        .collect()
}

fn interval_report(
    label: String,
    methods: &[Method],
    alpha: f64,
    outcomes: Vec<IntervalRep>,
    grid: &[Vec<f64>],
    truth: Option<DatasetName>,
) -> ExperimentReport {
    let mut rows = Vec::new();
    for (rep, out) in outcomes.iter().enumerate() {
        for (&method, &(coverage, width)) in methods.iter().zip(&out.metrics) {
            rows.push(RepRow {
                rep,
                method,
                coverage: Some(coverage),
                width: Some(width),
                mspe: None,
            });
        }
    }
    let mut curves = Vec::new();
    if let Some(name) = truth {
        let axis = name.signal_covariate();
        let reps = outcomes.len() as f64;
        for (k, &method) in methods.iter().enumerate() {
            for (g, x) in grid.iter().enumerate() {
                let (mut lo, mut hi) = (0.0, 0.0);
                for out in &outcomes {
                    lo += out.grid[k][g].lower;
                    hi += out.grid[k][g].upper;
                }
                curves.push(CurveRow {
                    grid_x: x[axis],
                    method,
                    mean_lower: lo / reps,
                    mean_upper: hi / reps,
                    true_lower: name.quantile(x, alpha / 2.0),
                    true_upper: name.quantile(x, 1.0 - alpha / 2.0),
                });
            }
        }
    }
    let summary = summarize(ExperimentKind::Interval, methods, &rows, None);
    ExperimentReport {
        kind: ExperimentKind::Interval,
        dataset: label,
        alpha,
        reps: outcomes.len(),
        rows,
        summary,
        curves,
        bias_curves: Vec::new(),
    }
}

fn bias_report(
    label: String,
    methods: &[Method],
    alpha: f64,
    outcomes: Vec<BiasRep>,
    grid: &[Vec<f64>],
    truth: Option<DatasetName>,
) -> ExperimentReport {
    let mut rows = Vec::new();
    for (rep, out) in outcomes.iter().enumerate() {
        for (&method, &m) in methods.iter().zip(&out.mspe) {
            rows.push(RepRow {
                rep,
                method,
                coverage: None,
                width: None,
                mspe: Some(m),
            });
        }
    }
    let mut bias_curves = Vec::new();
    let msb: Option<Vec<f64>> = truth.map(|name| {
        let axis = name.signal_covariate();
        let reps = outcomes.len() as f64;
        methods
            .iter()
            .enumerate()
            .map(|(k, &method)| {
                let mut sq = 0.0;
                for (g, x) in grid.iter().enumerate() {
                    let avg = outcomes.iter().map(|o| o.grid[k][g]).sum::<f64>() / reps;
                    let truth = name.mean(x);
                    sq += (avg - truth).powi(2);
                    bias_curves.push(BiasCurveRow {
                        grid_x: x[axis],
                        method,
                        mean_prediction: avg,
                        true_mean: truth,
                    });
                }
                sq / grid.len() as f64
            })
            .collect()
    });
    let summary = summarize(ExperimentKind::Bias, methods, &rows, msb.as_deref());
    ExperimentReport {
        kind: ExperimentKind::Bias,
        dataset: label,
        alpha,
        reps: outcomes.len(),
        rows,
        summary,
        curves: Vec::new(),
        bias_curves,
    }
}

/// Bias protocol on a synthetic law: per repetition a fresh train/test draw
/// gives test MSPE; predictions on the fixed grid, averaged over repetitions
/// and compared with the true conditional mean, give MSB.
pub fn run_bias_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    if cfg.kind != ExperimentKind::Bias {
        return Err(crate::Error::Config("run_bias_experiment needs kind = bias".into()));
    }
    let grid = evaluation_grid(cfg);
    let outcomes = par::map_indices(cfg.reps, |rep| {
        bias_rep(&synthetic_draw(cfg, rep)?, &cfg.methods, &grid)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(bias_report(
        cfg.dataset.to_string(),
        &cfg.methods,
        cfg.alpha,
        outcomes,
        &grid,
        Some(cfg.dataset),
    ))
}

/// Interval protocol on a synthetic law: per repetition, coverage and mean
/// width on fresh test draws, plus interval bounds on the fixed grid.
pub fn run_interval_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    if cfg.kind != ExperimentKind::Interval {
        return Err(crate::Error::Config(
            "run_interval_experiment needs kind = interval".into(),
        ));
    }
    let grid = evaluation_grid(cfg);
    let outcomes = par::map_indices(cfg.reps, |rep| {
        interval_rep(&synthetic_draw(cfg, rep)?, &cfg.methods, cfg.alpha, &grid)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(interval_report(
        cfg.dataset.to_string(),
        &cfg.methods,
        cfg.alpha,
        outcomes,
        &grid,
        Some(cfg.dataset),
    ))
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    match cfg.kind {
        ExperimentKind::Bias => run_bias_experiment(cfg),
        ExperimentKind::Interval => run_interval_experiment(cfg),
    }
}

/// Either protocol on a user table, with random train/test splits per
/// repetition. Only MSPE (bias) or coverage/width (interval) are reported.
pub fn run_benchmark(label: &str, data: &Dataset, cfg: &BenchConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    if data.n() < 4 {
        return Err(crate::Error::Config("benchmark table needs at least 4 rows".into()));
    }
    cfg.forest
        .validate(data.p())
        .map_err(|e| crate::Error::Config(e.to_string()))?;
    let no_grid: Vec<Vec<f64>> = Vec::new();
    match cfg.kind {
        ExperimentKind::Bias => {
            let outcomes = par::map_indices(cfg.reps, |rep| {
                bias_rep(&table_draw(data, cfg, rep)?, &cfg.methods, &no_grid)
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
            Ok(bias_report(
                label.to_string(),
                &cfg.methods,
                cfg.alpha,
                outcomes,
                &no_grid,
                None,
            ))
        }
        ExperimentKind::Interval => {
            let outcomes = par::map_indices(cfg.reps, |rep| {
                interval_rep(&table_draw(data, cfg, rep)?, &cfg.methods, cfg.alpha, &no_grid)
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
            Ok(interval_report(
                label.to_string(),
                &cfg.methods,
                cfg.alpha,
                outcomes,
                &no_grid,
                None,
            ))
        }
    }
}
