//! Comparison methods: quantile-regression-forest intervals, unweighted
//! out-of-bag intervals, and residual-forest ("boosting") bias correction.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::estimate::{check_alpha, ErrorDistribution, LeafIndex, PredictionInterval};
use crate::forest::{Forest, ForestParams, OobPredictions, TrainingLeaves};
use crate::rng::{derive_seed, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaselineKind {
    #[serde(rename = "QRF")]
    Qrf,
    UnweightedOOB,
    BoostBC,
}

/// Response distribution weighted by in-bag leaf shares averaged over trees.
#[derive(Debug, Clone)]
pub struct QuantileForest {
    index: LeafIndex,
    y: Vec<f64>,
}

impl QuantileForest {
    pub fn new(forest: &Forest, data: &Dataset) -> Result<Self> {
        let leaves = TrainingLeaves::compute(forest, data)?;
        Ok(Self {
            index: LeafIndex::in_bag(forest, &leaves),
            y: data.y().to_vec(),
        })
    }

    /// `(1/B) sum_b w_i(x, b)` for every training row.
    pub fn weights(&self, forest: &Forest, x: &[f64]) -> Result<Vec<f64>> {
        forest.check_query(x)?;
        let mut w = vec![0.0; self.y.len()];
        let b_inv = 1.0 / forest.n_trees() as f64;
        for (b, tree) in forest.trees().iter().enumerate() {
            let members = self.index.members(b, tree.terminal_node_of(x));
            let counts = tree.inbag_counts();
            let total: u32 = members.iter().map(|&i| counts[i as usize]).sum();
            let scale = b_inv / f64::from(total);
            for &i in members {
                w[i as usize] += f64::from(counts[i as usize]) * scale;
            }
        }
        Ok(w)
    }

    pub fn response_distribution(&self, forest: &Forest, x: &[f64]) -> Result<ErrorDistribution> {
        ErrorDistribution::from_weighted(&self.y, &self.weights(forest, x)?)
    }

    pub fn interval(&self, forest: &Forest, x: &[f64], alpha: f64) -> Result<PredictionInterval> {
        check_alpha(alpha)?;
        let dist = self.response_distribution(forest, x)?;
        Ok(PredictionInterval {
            lower: dist.quantile(alpha / 2.0)?,
            upper: dist.quantile(1.0 - alpha / 2.0)?,
            center: forest.predict(x),
            alpha,
        })
    }
}

pub fn qrf_interval(forest: &Forest, data: &Dataset, x: &[f64], alpha: f64) -> Result<PredictionInterval> {
    QuantileForest::new(forest, data)?.interval(forest, x, alpha)
}

/// Equal-weight quantiles of all valid OOB errors; the width is the same at every `x`.
#[derive(Debug, Clone)]
pub struct UnweightedOob {
    lower_offset: f64,
    upper_offset: f64,
    alpha: f64,
}

impl UnweightedOob {
    pub fn new(data: &Dataset, oob: &OobPredictions, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let dist = ErrorDistribution::unweighted(&oob.errors(data))?;
        Ok(Self {
            lower_offset: dist.quantile(alpha / 2.0)?,
            upper_offset: dist.quantile(1.0 - alpha / 2.0)?,
            alpha,
        })
    }

    pub fn interval_at(&self, center: f64) -> PredictionInterval {
        PredictionInterval {
            lower: center + self.lower_offset,
            upper: center + self.upper_offset,
            center,
            alpha: self.alpha,
        }
    }
}

pub fn unweighted_oob_interval(
    forest: &Forest,
    data: &Dataset,
    oob: &OobPredictions,
    x: &[f64],
    alpha: f64,
) -> Result<PredictionInterval> {
    forest.check_query(x)?;
    Ok(UnweightedOob::new(data, oob, alpha)?.interval_at(forest.predict(x)))
}

/// Second forest fit on `oob_i - Y_i`; predictions subtract it.
#[derive(Debug, Clone)]
pub struct BoostCorrector {
    residual_forest: Forest,
}

impl BoostCorrector {
    /// `params` are those of the primary forest; the residual forest reuses
    /// them with a derived seed.
    pub fn fit(data: &Dataset, oob: &OobPredictions, params: &ForestParams) -> Result<Self> {
        let rows: Vec<usize> = (0..data.n()).filter(|&i| oob.valid[i]).collect();
        if rows.len() < 2 {
            return Err(Error::Estimation(
                "fewer than two out-of-bag rows to fit residuals on".into(),
            ));
        }
        let subset = data.subset(&rows)?;
        let residuals = rows.iter().map(|&i| oob.values[i] - data.y()[i]).collect();
        let residual_data = subset.with_response(residuals)?;
        let params = params.with_seed(derive_seed(params.seed, stream::BOOST, 0));
        Ok(Self {
            residual_forest: Forest::fit(&residual_data, &params)?,
        })
    }

    pub fn residual_forest(&self) -> &Forest {
        &self.residual_forest
    }

    pub fn correct(&self, prediction: f64, x: &[f64]) -> f64 {
        prediction - self.residual_forest.predict(x)
    }
}

pub fn boost_bias_correct(
    forest: &Forest,
    data: &Dataset,
    oob: &OobPredictions,
    params: &ForestParams,
    x: &[f64],
) -> Result<f64> {
    forest.check_query(x)?;
    Ok(BoostCorrector::fit(data, oob, params)?.correct(forest.predict(x), x))
}
