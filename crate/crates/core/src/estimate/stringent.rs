//! Sample-split estimator: one forest supplies errors, a second supplies weights.
//!
//! The training rows are split into three near-equal parts I, J, K. The first
//! forest is fit on I and its errors on K form the support. The second forest
//! is fit on J alone, so every K row is out of sample for it and the weight of
//! a K row is its share of all (tree, K row) cohabitations with the query.

use rand::seq::SliceRandom;

use super::weights::{CohabWeights, LeafIndex};
use super::{ErrorDistribution, ErrorEstimator};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::forest::{Forest, ForestParams, TrainingLeaves};
use crate::rng::{derive_seed, rng_from, stream};

/// Minimum training size accepted by `StringentModel::fit`.
pub const MIN_ROWS: usize = 30;

/// Random partition of `0..n` into three parts whose sizes differ by at most
/// one; leftover rows go to the first part, then the second.
pub fn partition_three(n: usize, seed: u64) -> [Vec<usize>; 3] {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from(derive_seed(seed, stream::PARTITION, 0)));
    let base = n / 3;
    let extra = n % 3;
    let size_i = base + usize::from(extra >= 1);
    let size_j = base + usize::from(extra >= 2);
    let k = order.split_off(size_i + size_j);
    let j = order.split_off(size_i);
    [order, j, k]
}

#[derive(Debug, Clone)]
pub struct StringentModel {
    forest_one: Forest,
    forest_two: Forest,
    k_errors: Vec<f64>,
    k_covariates: Dataset,
    partition: [Vec<usize>; 3],
    partition_seed: u64,
    index: LeafIndex,
}

impl StringentModel {
    pub fn fit(data: &Dataset, params: &ForestParams, partition_seed: u64) -> Result<Self> {
        if data.n() < MIN_ROWS {
            return Err(Error::InvalidParameter(format!(
                "stringent estimation needs at least {MIN_ROWS} rows, got {}",
                data.n()
            )));
        }
        params.validate(data.p())?;
        let partition = partition_three(data.n(), partition_seed);
        let data_i = data.subset(&partition[0])?;
        let data_j = data.subset(&partition[1])?;
        let params_one = params.with_seed(derive_seed(params.seed, stream::STRINGENT_ONE, 0));
        let params_two = params.with_seed(derive_seed(params.seed, stream::STRINGENT_TWO, 0));
        let forest_one = Forest::fit(&data_i, &params_one)?;
        let forest_two = Forest::fit(&data_j, &params_two)?;
        Self::from_forests(data, partition, partition_seed, forest_one, forest_two)
    }

    /// Assembles a model from an explicit partition of `data` and two forests
    /// already fit on its first and second parts. No minimum size applies, so
    /// this also serves tiny hand-built instances.
    pub fn from_forests(
        data: &Dataset,
        partition: [Vec<usize>; 3],
        partition_seed: u64,
        forest_one: Forest,
        forest_two: Forest,
    ) -> Result<Self> {
        let mut seen = vec![false; data.n()];
        for &i in partition.iter().flatten() {
            if i >= data.n() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidParameter(format!(
                    "row {i} is out of range or repeated in the partition"
                )));
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::InvalidParameter("the partition does not cover every row".into()));
        }
        if partition[2].is_empty() {
            return Err(Error::InvalidParameter(
                "the third part of the partition is empty".into(),
            ));
        }
        for (f, part) in [(&forest_one, &partition[0]), (&forest_two, &partition[1])] {
            if f.train_n() != part.len() || f.train_p() != data.p() {
                return Err(Error::InvalidParameter(
                    "a forest does not match its part of the partition".into(),
                ));
            }
        }
        let data_k = data.subset(&partition[2])?;
        let k_errors = data_k
            .rows()
            .zip(data_k.y())
            .map(|(x, &y)| y - forest_one.predict(x))
            .collect();
        let index = k_index(&forest_two, &data_k);
        Ok(Self {
            forest_one,
            forest_two,
            k_errors,
            k_covariates: data_k,
            partition,
            partition_seed,
            index,
        })
    }

    pub fn forest_one(&self) -> &Forest {
        &self.forest_one
    }

    pub fn forest_two(&self) -> &Forest {
        &self.forest_two
    }

    pub fn k_errors(&self) -> &[f64] {
        &self.k_errors
    }

    pub fn k_covariates(&self) -> &Dataset {
        &self.k_covariates
    }

    /// Row indices of the I, J and K parts of the original training set.
    pub fn partition(&self) -> &[Vec<usize>; 3] {
        &self.partition
    }

    pub fn partition_seed(&self) -> u64 {
        self.partition_seed
    }

    /// Weights over the K rows (in `partition()[2]` order).
    pub fn weights(&self, x: &[f64]) -> Result<CohabWeights> {
        self.index.weights(&self.forest_two, x)
    }
}

fn k_index(forest_two: &Forest, data_k: &Dataset) -> LeafIndex {
    let leaves: Vec<Vec<u32>> = forest_two
        .trees()
        .iter()
        .map(|t| data_k.rows().map(|x| t.terminal_node_of(x)).collect())
        .collect();
    LeafIndex::all_rows(forest_two, &TrainingLeaves::from_raw(leaves), data_k.n())
}

impl ErrorEstimator for StringentModel {
    fn center(&self, x: &[f64]) -> f64 {
        self.forest_one.predict(x)
    }

    fn distribution(&self, x: &[f64]) -> Result<(ErrorDistribution, bool)> {
        let w = self.weights(x)?;
        Ok((
            ErrorDistribution::from_weighted(&self.k_errors, &w.mass())?,
            w.fallback_used,
        ))
    }
}
