//! Binary regression trees and the CART growing procedure.

use rand::seq::index::sample;
use rand::Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// One node of a fitted tree. Routing goes left iff `x[feature] <= threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        leaf_id: u32,
    },
}

/// A fitted tree together with the bootstrap multiplicities it was grown on.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
    leaf_values: Vec<f64>,
    inbag_counts: Vec<u32>,
}

impl Tree {
    /// Assembles a tree from an explicit node layout (root at index 0) and
    /// per-row bootstrap multiplicities; leaf values are recomputed from `data`
    /// as multiplicity-weighted means of the in-bag responses.
    pub fn from_structure(nodes: Vec<Node>, inbag_counts: Vec<u32>, data: &Dataset) -> Result<Self> {
        if inbag_counts.len() != data.n() {
            return Err(Error::InvalidData(format!(
                "inbag_counts has length {}, dataset has {} rows",
                inbag_counts.len(),
                data.n()
            )));
        }
        let n_leaves = validate_layout(&nodes, data.p())?;
        let mut tree = Self {
            nodes,
            leaf_values: vec![0.0; n_leaves],
            inbag_counts,
        };
        let mut sums = vec![0.0; n_leaves];
        let mut weights = vec![0u64; n_leaves];
        for (i, &c) in tree.inbag_counts.iter().enumerate() {
            if c > 0 {
                let leaf = tree.terminal_node_of(data.row(i)) as usize;
                sums[leaf] += f64::from(c) * data.y()[i];
                weights[leaf] += u64::from(c);
            }
        }
        for (leaf, (&s, &w)) in sums.iter().zip(&weights).enumerate() {
            if w == 0 {
                return Err(Error::InvalidData(format!("leaf {leaf} holds no in-bag rows")));
            }
            tree.leaf_values[leaf] = s / w as f64;
        }
        Ok(tree)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn inbag_counts(&self) -> &[u32] {
        &self.inbag_counts
    }

    pub fn n_leaves(&self) -> usize {
        self.leaf_values.len()
    }

    pub fn leaf_values(&self) -> &[f64] {
        &self.leaf_values
    }

    #[inline]
    pub fn is_oob(&self, row: usize) -> bool {
        self.inbag_counts[row] == 0
    }

    /// Leaf reached by `x`.
    #[inline]
    pub fn terminal_node_of(&self, x: &[f64]) -> u32 {
        let mut idx = 0usize;
        loop {
            match self.nodes[idx] {
                Node::Leaf { leaf_id } => return leaf_id,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if x[feature as usize] <= threshold {
                        left as usize
                    } else {
                        right as usize
                    };
                }
            }
        }
    }

    #[inline]
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.leaf_values[self.terminal_node_of(x) as usize]
    }

    pub(crate) fn from_raw(nodes: Vec<Node>, leaf_values: Vec<f64>, inbag_counts: Vec<u32>) -> Self {
        Self {
            nodes,
            leaf_values,
            inbag_counts,
        }
    }
}

/// Checks single-rootedness, child arity and leaf numbering; returns the leaf count.
pub(crate) fn validate_layout(nodes: &[Node], p: usize) -> Result<usize> {
    if nodes.is_empty() {
        return Err(Error::InvalidData("tree has no nodes".into()));
    }
    let mut parents = vec![0u32; nodes.len()];
    let mut n_leaves = 0usize;
    for (i, node) in nodes.iter().enumerate() {
        match *node {
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if feature as usize >= p {
                    return Err(Error::InvalidData(format!("node {i} splits on feature {feature} >= p")));
                }
                if !threshold.is_finite() {
                    return Err(Error::InvalidData(format!("node {i} has a non-finite threshold")));
                }
                for child in [left, right] {
                    let c = child as usize;
                    if c >= nodes.len() || c == 0 || c == i {
                        return Err(Error::InvalidData(format!("node {i} has invalid child {child}")));
                    }
                    parents[c] += 1;
                }
                if left == right {
                    return Err(Error::InvalidData(format!("node {i} has identical children")));
                }
            }
            Node::Leaf { leaf_id } => {
                if leaf_id as usize != n_leaves {
                    return Err(Error::InvalidData(format!(
                        "leaf ids must be numbered 0.. in node order; node {i} has id {leaf_id}"
                    )));
                }
                n_leaves += 1;
            }
        }
    }
    if let Some(i) = parents.iter().skip(1).position(|&c| c != 1) {
        return Err(Error::InvalidData(format!(
            "node {} does not have exactly one parent",
            i + 1
        )));
    }
    // Every node has one parent and the root has none, so reachability from
    // the root is equivalent to acyclicity.
    let mut seen = vec![false; nodes.len()];
    let mut stack = vec![0usize];
    while let Some(i) = stack.pop() {
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::InvalidData("tree contains a cycle".into()));
        }
        if let Node::Split { left, right, .. } = nodes[i] {
            stack.push(left as usize);
            stack.push(right as usize);
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::InvalidData("tree has unreachable nodes".into()));
    }
    Ok(n_leaves)
}

/// Reusable settings for a single growing run.
pub(crate) struct GrowSettings {
    pub mtry: usize,
    pub min_node_size: usize,
}

/// Row indices `0..n` sorted by each covariate, shared by every tree of a forest.
pub(crate) struct SortedColumns {
    orders: Vec<Vec<u32>>,
}

impl SortedColumns {
    pub fn new(columns: &[Vec<f64>]) -> Self {
        let orders = columns
            .iter()
            .map(|col| {
                let mut order: Vec<u32> = (0..col.len() as u32).collect();
                order.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]));
                order
            })
            .collect();
        Self { orders }
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Grows one CART tree on a with-replacement bootstrap of `n` rows.
///
/// Every feature keeps its own ordering of the in-bag rows; a node owns the
/// same index range in all of them, so split search is a linear scan and a
/// split is a stable partition of each ordering.
pub(crate) fn grow_tree<R: Rng>(
    columns: &[Vec<f64>],
    sorted: &SortedColumns,
    y: &[f64],
    settings: &GrowSettings,
    rng: &mut R,
) -> Tree {
    let n = y.len();
    let p = columns.len();
    let mut inbag_counts = vec![0u32; n];
    for _ in 0..n {
        inbag_counts[rng.random_range(0..n)] += 1;
    }
    let mut orders: Vec<Vec<u32>> = sorted
        .orders
        .iter()
        .map(|o| o.iter().copied().filter(|&i| inbag_counts[i as usize] > 0).collect())
        .collect();
    let distinct = orders[0].len();
    let weight: Vec<f64> = inbag_counts.iter().map(|&c| f64::from(c)).collect();

    let mut nodes: Vec<Node> = vec![Node::Leaf { leaf_id: 0 }];
    let mut leaf_values = Vec::new();
    let mut stack = vec![(0usize, 0usize, distinct)];
    let mut goes_left = vec![false; n];
    let mut scratch: Vec<u32> = Vec::with_capacity(distinct);
    let min_split = 2 * settings.min_node_size;
    let mtry = settings.mtry.min(p);

    while let Some((node_idx, start, end)) = stack.pop() {
        let members = &orders[0][start..end];
        let mut total_w = 0.0;
        let mut sum = 0.0;
        let mut count = 0usize;
        let first_y = y[members[0] as usize];
        let mut constant = true;
        for &r in members {
            let r = r as usize;
            total_w += weight[r];
            sum += weight[r] * y[r];
            count += inbag_counts[r] as usize;
            constant &= y[r] == first_y;
        }
        let mean = sum / total_w;

        let split = if count < min_split || constant {
            None
        } else {
            let mut features = sample(rng, p, mtry).into_vec();
            features.sort_unstable();
            best_split(columns, &orders, y, &weight, start, end, mean, &features)
        };

        match split {
            None => {
                let leaf_id = leaf_values.len() as u32;
                leaf_values.push(if constant { first_y } else { mean });
                nodes[node_idx] = Node::Leaf { leaf_id };
            }
            Some(cand) => {
                let col = &columns[cand.feature];
                let mut n_left = 0usize;
                for &r in &orders[0][start..end] {
                    let left = col[r as usize] <= cand.threshold;
                    goes_left[r as usize] = left;
                    n_left += usize::from(left);
                }
                for order in orders.iter_mut() {
                    stable_partition(&mut order[start..end], &goes_left, &mut scratch);
                }
                let mid = start + n_left;
                let left = nodes.len();
                nodes.push(Node::Leaf { leaf_id: 0 });
                nodes.push(Node::Leaf { leaf_id: 0 });
                nodes[node_idx] = Node::Split {
                    feature: cand.feature as u32,
                    threshold: cand.threshold,
                    left: left as u32,
                    right: left as u32 + 1,
                };
                stack.push((left + 1, mid, end));
                stack.push((left, start, mid));
            }
        }
    }

    // Leaves were numbered in visit order; renumber them in node order so the
    // layout is canonical.
    let mut values = Vec::with_capacity(leaf_values.len());
    for node in nodes.iter_mut() {
        if let Node::Leaf { leaf_id } = node {
            let id = values.len() as u32;
            values.push(leaf_values[*leaf_id as usize]);
            *leaf_id = id;
        }
    }
    Tree::from_raw(nodes, values, inbag_counts)
}

fn stable_partition(segment: &mut [u32], goes_left: &[bool], scratch: &mut Vec<u32>) {
    scratch.clear();
    let mut lo = 0usize;
    for k in 0..segment.len() {
        let r = segment[k];
        if goes_left[r as usize] {
            segment[lo] = r;
            lo += 1;
        } else {
            scratch.push(r);
        }
    }
    segment[lo..].copy_from_slice(scratch);
}

/// Best variance-reduction split among `features` (ascending). Ties, up to a
/// relative tolerance, keep the lowest feature, then the lowest threshold.
#[allow(clippy::too_many_arguments)]
fn best_split(
    columns: &[Vec<f64>],
    orders: &[Vec<u32>],
    y: &[f64],
    weight: &[f64],
    start: usize,
    end: usize,
    mean: f64,
    features: &[usize],
) -> Option<Candidate> {
    let mut total_sq = 0.0;
    let mut total_w = 0.0;
    let mut total_s = 0.0;
    for &r in &orders[0][start..end] {
        let r = r as usize;
        let yc = y[r] - mean;
        total_sq += weight[r] * yc * yc;
        total_w += weight[r];
        total_s += weight[r] * yc;
    }
    let parent_score = total_s * total_s / total_w;
    // Gains within `tol` of each other count as tied, so that rounding noise
    // (for instance from shifting the responses) cannot reorder the candidates.
    let tol = 1e-10 * total_sq;

    let mut best: Option<Candidate> = None;
    for &feature in features {
        let col = &columns[feature];
        let members = &orders[feature][start..end];
        let lo_x = col[members[0] as usize];
        let hi_x = col[members[members.len() - 1] as usize];
        if lo_x == hi_x {
            continue;
        }
        let mut left_w = 0.0;
        let mut left_s = 0.0;
        for k in 0..members.len() - 1 {
            let r = members[k] as usize;
            left_w += weight[r];
            left_s += weight[r] * (y[r] - mean);
            let xv = col[r];
            let next = col[members[k + 1] as usize];
            if next == xv {
                continue;
            }
            let right_w = total_w - left_w;
            let right_s = total_s - left_s;
            let gain = left_s * left_s / left_w + right_s * right_s / right_w - parent_score;
            if gain > tol && best.is_none_or(|b| gain > b.gain + tol) {
                best = Some(Candidate {
                    feature,
                    threshold: midpoint(xv, next),
                    gain,
                });
            }
        }
    }
    best
}

/// Midpoint of `a < b`, nudged so that `a <= t < b` survives rounding.
fn midpoint(a: f64, b: f64) -> f64 {
    let t = a * 0.5 + b * 0.5;
    if t >= b || t < a {
        a
    } else {
        t
    }
}
