//! Out-of-bag cohabitation weights.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::forest::{Forest, TrainingLeaves};

/// Normalized cohabitation tallies of the training rows for one query point.
#[derive(Debug, Clone, PartialEq)]
pub struct CohabWeights {
    pub weights: Vec<f64>,
    pub raw_counts: Vec<u32>,
    pub total: u64,
    /// Set when no row cohabited the query point; `weights` is then uniform
    /// over the eligible rows.
    pub fallback_used: bool,
}

impl CohabWeights {
    /// Unnormalized mass per row: the raw tallies, or one per eligible row
    /// under the fallback. Integer valued, so sums over it are exact.
    pub fn mass(&self) -> Vec<f64> {
        if self.fallback_used {
            self.weights.iter().map(|&w| if w > 0.0 { 1.0 } else { 0.0 }).collect()
        } else {
            self.raw_counts.iter().map(|&c| f64::from(c)).collect()
        }
    }

    /// Normalizes raw tallies; falls back to uniform weights over `eligible`
    /// rows when the tallies are all zero.
    pub fn from_counts(raw_counts: Vec<u32>, eligible: &[bool]) -> Result<Self> {
        let total: u64 = raw_counts.iter().map(|&c| u64::from(c)).sum();
        if total > 0 {
            let denom = total as f64;
            let weights = raw_counts.iter().map(|&c| f64::from(c) / denom).collect();
            return Ok(Self {
                weights,
                raw_counts,
                total,
                fallback_used: false,
            });
        }
        let n_eligible = eligible.iter().filter(|&&e| e).count();
        if n_eligible == 0 {
            return Err(Error::Estimation(
                "no training row is eligible for the uniform fallback".into(),
            ));
        }
        let u = 1.0 / n_eligible as f64;
        let weights = eligible.iter().map(|&e| if e { u } else { 0.0 }).collect();
        Ok(Self {
            weights,
            raw_counts,
            total,
            fallback_used: true,
        })
    }
}

/// `raw_counts[i] = #{b : row i is out of bag in tree b and shares x's leaf}`,
/// evaluated by walking every tree and every training row.
pub fn cohab_weights(forest: &Forest, data: &Dataset, x: &[f64]) -> Result<CohabWeights> {
    forest.check_training_shape(data)?;
    forest.check_query(x)?;
    let n = data.n();
    let mut raw = vec![0u32; n];
    let mut ever_oob = vec![false; n];
    for tree in forest.trees() {
        let target = tree.terminal_node_of(x);
        for (i, row) in data.rows().enumerate() {
            if tree.is_oob(i) {
                ever_oob[i] = true;
                if tree.terminal_node_of(row) == target {
                    raw[i] += 1;
                }
            }
        }
    }
    CohabWeights::from_counts(raw, &ever_oob)
}

/// Per-tree inverted index from leaf to the rows it holds.
///
/// Flattened CSR layout: rows of leaf `l` in tree `b` are
/// `rows[b][offsets[b][l]..offsets[b][l + 1]]`.
#[derive(Debug, Clone)]
pub struct LeafIndex {
    offsets: Vec<Vec<u32>>,
    rows: Vec<Vec<u32>>,
    eligible: Vec<bool>,
}

impl LeafIndex {
    /// Index of the out-of-bag rows of each leaf.
    pub fn out_of_bag(forest: &Forest, leaves: &TrainingLeaves) -> Self {
        let n = forest.train_n();
        let mut eligible = vec![false; n];
        for tree in forest.trees() {
            for (i, e) in eligible.iter_mut().enumerate() {
                *e |= tree.is_oob(i);
            }
        }
        Self::build(forest, leaves, eligible, |b, i| forest.trees()[b].is_oob(i))
    }

    /// Index of every row regardless of bootstrap membership.
    pub fn all_rows(forest: &Forest, leaves: &TrainingLeaves, n: usize) -> Self {
        Self::build(forest, leaves, vec![true; n], |_, _| true)
    }

    /// Index of the in-bag rows of each leaf (multiplicities are read from the trees).
    pub fn in_bag(forest: &Forest, leaves: &TrainingLeaves) -> Self {
        let eligible = vec![true; forest.train_n()];
        Self::build(forest, leaves, eligible, |b, i| !forest.trees()[b].is_oob(i))
    }

    fn build<F>(forest: &Forest, leaves: &TrainingLeaves, eligible: Vec<bool>, include: F) -> Self
    where
        F: Fn(usize, usize) -> bool,
    {
        let n = eligible.len();
        let mut offsets = Vec::with_capacity(forest.n_trees());
        let mut rows = Vec::with_capacity(forest.n_trees());
        for (b, tree) in forest.trees().iter().enumerate() {
            let tree_leaves = leaves.tree(b);
            let mut counts = vec![0u32; tree.n_leaves() + 1];
            for i in 0..n {
                if include(b, i) {
                    counts[tree_leaves[i] as usize + 1] += 1;
                }
            }
            for l in 1..counts.len() {
                counts[l] += counts[l - 1];
            }
            let mut cursor = counts.clone();
            let mut members = vec![0u32; counts[tree.n_leaves()] as usize];
            for (i, &leaf) in tree_leaves.iter().enumerate() {
                if include(b, i) {
                    let l = leaf as usize;
                    members[cursor[l] as usize] = i as u32;
                    cursor[l] += 1;
                }
            }
            offsets.push(counts);
            rows.push(members);
        }
        Self {
            offsets,
            rows,
            eligible,
        }
    }

    pub fn members(&self, tree: usize, leaf: u32) -> &[u32] {
        let o = &self.offsets[tree];
        &self.rows[tree][o[leaf as usize] as usize..o[leaf as usize + 1] as usize]
    }

    pub fn eligible(&self) -> &[bool] {
        &self.eligible
    }

    /// Cohabitation weights of `x` using the prebuilt index.
    pub fn weights(&self, forest: &Forest, x: &[f64]) -> Result<CohabWeights> {
        forest.check_query(x)?;
        let mut raw = vec![0u32; self.eligible.len()];
        for (b, tree) in forest.trees().iter().enumerate() {
            for &i in self.members(b, tree.terminal_node_of(x)) {
                raw[i as usize] += 1;
            }
        }
        CohabWeights::from_counts(raw, &self.eligible)
    }
}
