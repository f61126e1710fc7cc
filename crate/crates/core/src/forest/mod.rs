//! Bootstrap regression forests and their out-of-bag machinery.

mod io;
mod tree;

pub use tree::{Node, Tree};

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::par;
use crate::rng::{derive_rng, stream};
use tree::{grow_tree, GrowSettings, SortedColumns};

/// Forest hyperparameters. `mtry = None` resolves to `max(floor(p / 3), 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub mtry: Option<usize>,
    pub min_node_size: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 1000,
            mtry: None,
            min_node_size: 5,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_trees(mut self, n_trees: usize) -> Self {
        self.n_trees = n_trees;
        self
    }

    pub fn resolved_mtry(&self, p: usize) -> usize {
        self.mtry.unwrap_or_else(|| (p / 3).max(1))
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidParameter("n_trees must be positive".into()));
        }
        if self.min_node_size == 0 {
            return Err(Error::InvalidParameter("min_node_size must be positive".into()));
        }
        match self.mtry {
            Some(0) => Err(Error::InvalidParameter("mtry must be positive".into())),
            Some(m) if m > p => Err(Error::InvalidParameter(format!("mtry = {m} exceeds p = {p}"))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    trees: Vec<Tree>,
    params: ForestParams,
    train_n: usize,
    train_p: usize,
}

impl Forest {
    /// Fits `params.n_trees` CART trees, each on its own bootstrap draw.
    ///
    /// Tree `b` draws from a stream derived from `(params.seed, b)`, so the
    /// result is identical whether trees are grown in parallel or not.
    pub fn fit(data: &Dataset, params: &ForestParams) -> Result<Self> {
        params.validate(data.p())?;
        let mut params = *params;
        params.mtry = Some(params.resolved_mtry(data.p()));
        let settings = GrowSettings {
            mtry: params.mtry.unwrap_or(1),
            min_node_size: params.min_node_size,
        };
        let columns = data.columns();
        let sorted = SortedColumns::new(&columns);
        let trees = par::map_indices(params.n_trees, |b| {
            let mut rng = derive_rng(params.seed, stream::TREE, b as u64);
            grow_tree(&columns, &sorted, data.y(), &settings, &mut rng)
        });
        Ok(Self {
            trees,
            params,
            train_n: data.n(),
            train_p: data.p(),
        })
    }

    /// Wraps hand-built trees; each must carry `train_n` inbag counts.
    pub fn from_trees(trees: Vec<Tree>, params: ForestParams, train_n: usize, train_p: usize) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::InvalidParameter("a forest needs at least one tree".into()));
        }
        for (b, t) in trees.iter().enumerate() {
            if t.inbag_counts().len() != train_n {
                return Err(Error::InvalidData(format!(
                    "tree {b} has inbag counts for the wrong row count"
                )));
            }
            tree::validate_layout(t.nodes(), train_p)?;
        }
        let mut params = params;
        params.n_trees = trees.len();
        Ok(Self {
            trees,
            params,
            train_n,
            train_p,
        })
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn train_n(&self) -> usize {
        self.train_n
    }

    pub fn train_p(&self) -> usize {
        self.train_p
    }

    /// Mean of the per-tree leaf means at `x`.
    ///
    /// Accumulated as offsets from the first tree, so identical tree outputs
    /// average to exactly that value.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let first = self.trees[0].predict(x);
        let offset: f64 = self.trees[1..].iter().map(|t| t.predict(x) - first).sum();
        first + offset / self.trees.len() as f64
    }

    pub fn predict_many(&self, data: &Dataset) -> Vec<f64> {
        let rows: Vec<&[f64]> = data.rows().collect();
        par::map_slice(&rows, |x| self.predict(x))
    }

    /// Leaf reached by `x` in every tree.
    pub fn leaves_of(&self, x: &[f64]) -> Vec<u32> {
        self.trees.iter().map(|t| t.terminal_node_of(x)).collect()
    }

    pub(crate) fn check_training_shape(&self, data: &Dataset) -> Result<()> {
        if data.n() != self.train_n || data.p() != self.train_p {
            return Err(Error::InvalidData(format!(
                "dataset is {}x{}, forest was trained on {}x{}",
                data.n(),
                data.p(),
                self.train_n,
                self.train_p
            )));
        }
        Ok(())
    }

    pub(crate) fn check_query(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.train_p {
            return Err(Error::InvalidData(format!(
                "query point has {} covariates, forest expects {}",
                x.len(),
                self.train_p
            )));
        }
        Ok(())
    }
}

/// Leaf of every training row in every tree, `leaves[b][i]`.
#[derive(Debug, Clone)]
pub struct TrainingLeaves {
    leaves: Vec<Vec<u32>>,
}

impl TrainingLeaves {
    pub fn compute(forest: &Forest, data: &Dataset) -> Result<Self> {
        forest.check_training_shape(data)?;
        let leaves = par::map_slice(forest.trees(), |t| data.rows().map(|x| t.terminal_node_of(x)).collect());
        Ok(Self { leaves })
    }

    /// Wraps precomputed leaves, `leaves[b][i]`.
    pub fn from_raw(leaves: Vec<Vec<u32>>) -> Self {
        Self { leaves }
    }

    #[inline]
    pub fn leaf(&self, tree: usize, row: usize) -> u32 {
        self.leaves[tree][row]
    }

    pub fn tree(&self, tree: usize) -> &[u32] {
        &self.leaves[tree]
    }
}

/// Out-of-bag predictions of the training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct OobPredictions {
    pub values: Vec<f64>,
    pub oob_tree_counts: Vec<u32>,
    pub valid: Vec<bool>,
}

impl OobPredictions {
    /// Averages each row's prediction over the trees where it is out of bag.
    /// Rows that are in bag for every tree get `valid = false` and value NaN.
    pub fn compute(forest: &Forest, data: &Dataset) -> Result<Self> {
        let leaves = TrainingLeaves::compute(forest, data)?;
        Ok(Self::from_leaves(forest, &leaves))
    }

    pub fn from_leaves(forest: &Forest, leaves: &TrainingLeaves) -> Self {
        let n = forest.train_n();
        let mut sums = vec![0.0; n];
        let mut counts = vec![0u32; n];
        for (b, tree) in forest.trees().iter().enumerate() {
            let values = tree.leaf_values();
            for (i, &leaf) in leaves.tree(b).iter().enumerate() {
                if tree.is_oob(i) {
                    sums[i] += values[leaf as usize];
                    counts[i] += 1;
                }
            }
        }
        let values = sums
            .iter()
            .zip(&counts)
            .map(|(&s, &c)| if c > 0 { s / f64::from(c) } else { f64::NAN })
            .collect();
        let valid = counts.iter().map(|&c| c > 0).collect();
        Self {
            values,
            oob_tree_counts: counts,
            valid,
        }
    }

    pub fn n_valid(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// `Y_i - oob_i` for valid rows, NaN elsewhere.
    pub fn errors(&self, data: &Dataset) -> Vec<f64> {
        data.y()
            .iter()
            .zip(&self.values)
            .zip(&self.valid)
            .map(|((&y, &v), &ok)| if ok { y - v } else { f64::NAN })
            .collect()
    }
}
