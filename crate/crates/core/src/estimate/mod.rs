//! Conditional prediction-error distributions and their plug-in estimators.
//!
//! For a query point `x`, the out-of-bag errors `Y_i - oob_i` of the training
//! rows are weighted by how often each row was an out-of-bag cohabitant of `x`.
//! Conditional MSPE, bias, response quantiles and prediction intervals are all
//! read off that one weighted distribution.

mod distribution;
mod stringent;
mod weights;

pub use distribution::ErrorDistribution;
pub use stringent::{partition_three, StringentModel, MIN_ROWS as STRINGENT_MIN_ROWS};
pub use weights::{cohab_weights, CohabWeights, LeafIndex};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::forest::{Forest, OobPredictions, TrainingLeaves};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionInterval {
    pub lower: f64,
    pub upper: f64,
    pub center: f64,
    pub alpha: f64,
}

impl PredictionInterval {
    /// `[center + Q(alpha/2), center + Q(1 - alpha/2)]` of `dist`.
    pub fn from_distribution(center: f64, dist: &ErrorDistribution, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            lower: center + dist.quantile(alpha / 2.0)?,
            upper: center + dist.quantile(1.0 - alpha / 2.0)?,
            center,
            alpha,
        })
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, y: f64) -> bool {
        self.lower <= y && y <= self.upper
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("alpha = {alpha} is not in (0, 1)")))
    }
}

/// Every per-point quantity the error distribution yields, in one pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointEstimate {
    pub prediction: f64,
    pub bc_prediction: f64,
    pub mspe: f64,
    pub bias: f64,
    pub interval: PredictionInterval,
    pub fallback_used: bool,
}

/// A point predictor paired with a conditional error distribution.
pub trait ErrorEstimator: Sync {
    /// Point prediction at `x`, the center that errors are added to.
    fn center(&self, x: &[f64]) -> f64;

    /// Weighted error distribution at `x`, plus whether the uniform fallback fired.
    fn distribution(&self, x: &[f64]) -> Result<(ErrorDistribution, bool)>;

    fn mspe(&self, x: &[f64]) -> Result<f64> {
        Ok(self.distribution(x)?.0.mspe())
    }

    fn bias(&self, x: &[f64]) -> Result<f64> {
        Ok(self.distribution(x)?.0.bias())
    }

    fn bias_corrected(&self, x: &[f64]) -> Result<f64> {
        Ok(self.center(x) - self.bias(x)?)
    }

    fn interval(&self, x: &[f64], alpha: f64) -> Result<PredictionInterval> {
        PredictionInterval::from_distribution(self.center(x), &self.distribution(x)?.0, alpha)
    }

    /// Conditional response quantile `center(x) + Q_E(level | x)`.
    fn response_quantile(&self, x: &[f64], level: f64) -> Result<f64> {
        Ok(self.center(x) + self.distribution(x)?.0.quantile(level)?)
    }

    fn estimate(&self, x: &[f64], alpha: f64) -> Result<PointEstimate> {
        let center = self.center(x);
        let (dist, fallback_used) = self.distribution(x)?;
        let bias = dist.bias();
        Ok(PointEstimate {
            prediction: center,
            bc_prediction: center - bias,
            mspe: dist.mspe(),
            bias,
            interval: PredictionInterval::from_distribution(center, &dist, alpha)?,
            fallback_used,
        })
    }

    /// `estimate` for every row of `points`, in row order.
    fn estimate_many(&self, points: &[Vec<f64>], alpha: f64) -> Result<Vec<PointEstimate>> {
        check_alpha(alpha)?;
        par::map_slice(points, |x| self.estimate(x, alpha))
            .into_iter()
            .collect()
    }
}

/// A fitted forest plus the out-of-bag state needed for conditional estimates.
#[derive(Debug, Clone)]
pub struct ErrorModel {
    forest: Forest,
    data: Dataset,
    oob: OobPredictions,
    errors: Vec<f64>,
    index: LeafIndex,
}

impl ErrorModel {
    /// Computes OOB predictions and the leaf-to-OOB-rows index for `forest`,
    /// which must have been fit on `data`.
    pub fn new(forest: Forest, data: Dataset) -> Result<Self> {
        let leaves = TrainingLeaves::compute(&forest, &data)?;
        let oob = OobPredictions::from_leaves(&forest, &leaves);
        if oob.n_valid() == 0 {
            return Err(Error::Estimation("no training row is out of bag in any tree".into()));
        }
        let errors = oob.errors(&data);
        let index = LeafIndex::out_of_bag(&forest, &leaves);
        Ok(Self {
            forest,
            data,
            oob,
            errors,
            index,
        })
    }

    pub fn fit(data: Dataset, params: &crate::forest::ForestParams) -> Result<Self> {
        let forest = Forest::fit(&data, params)?;
        Self::new(forest, data)
    }

    pub fn forest(&self) -> &Forest {
        &self.forest
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn oob(&self) -> &OobPredictions {
        &self.oob
    }

    /// `Y_i - oob_i`, NaN for never-out-of-bag rows.
    pub fn oob_errors(&self) -> &[f64] {
        &self.errors
    }

    pub fn cohab_weights(&self, x: &[f64]) -> Result<CohabWeights> {
        self.index.weights(&self.forest, x)
    }
}

impl ErrorEstimator for ErrorModel {
    fn center(&self, x: &[f64]) -> f64 {
        self.forest.predict(x)
    }

    fn distribution(&self, x: &[f64]) -> Result<(ErrorDistribution, bool)> {
        let w = self.cohab_weights(x)?;
        Ok((assemble(&self.errors, &self.oob.valid, &w)?, w.fallback_used))
    }
}

fn assemble(errors: &[f64], valid: &[bool], w: &CohabWeights) -> Result<ErrorDistribution> {
    let (e, wt): (Vec<f64>, Vec<f64>) = errors
        .iter()
        .zip(valid)
        .zip(&w.mass())
        .filter(|((_, &ok), &wt)| ok && wt > 0.0)
        .map(|((&e, _), &wt)| (e, wt))
        .unzip();
    ErrorDistribution::from_weighted(&e, &wt)
}

/// Weighted OOB error distribution at `x`, computed from scratch.
pub fn error_distribution(
    forest: &Forest,
    data: &Dataset,
    oob: &OobPredictions,
    x: &[f64],
) -> Result<ErrorDistribution> {
    let w = cohab_weights(forest, data, x)?;
    assemble(&oob.errors(data), &oob.valid, &w)
}

pub fn bias_corrected_predict(forest: &Forest, data: &Dataset, oob: &OobPredictions, x: &[f64]) -> Result<f64> {
    Ok(forest.predict(x) - error_distribution(forest, data, oob, x)?.bias())
}

pub fn prediction_interval(
    forest: &Forest,
    data: &Dataset,
    oob: &OobPredictions,
    x: &[f64],
    alpha: f64,
) -> Result<PredictionInterval> {
    check_alpha(alpha)?;
    let dist = error_distribution(forest, data, oob, x)?;
    PredictionInterval::from_distribution(forest.predict(x), &dist, alpha)
}
