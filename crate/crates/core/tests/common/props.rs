//! Randomized invariant checks. Each check runs one trial for a given seed
//! and reports the first violated invariant.

// Checks below compare floats with `!(a < b)` on purpose: a NaN must fail.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use forest_error::baselines::{BoostCorrector, QuantileForest, UnweightedOob};
use forest_error::estimate::{self, cohab_weights, partition_three};
use forest_error::forest::Node;
use forest_error::sim::{self, DataGenSpec, DatasetName, ExperimentConfig, ExperimentKind, Method};
use forest_error::{
    Dataset, ErrorDistribution, ErrorEstimator, ErrorModel, Forest, ForestParams, OobPredictions, StringentModel,
};
use rand::Rng;

use super::instance::{self, small_instance, Instance};
use super::oracle;

pub type Check = fn(u64) -> Result<(), String>;

pub struct Property {
    pub module: &'static str,
    pub name: &'static str,
    /// Share of the trial budget, relative to the other properties.
    pub weight: u32,
    pub check: Check,
}

// `ensure!` negates its condition so that a NaN comparison fails the check.
macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

pub fn all() -> Vec<Property> {
    vec![
        Property {
            module: "forest_core",
            name: "determinism",
            weight: 4,
            check: determinism,
        },
        Property {
            module: "forest_core",
            name: "serialization round trip",
            weight: 4,
            check: serialization,
        },
        Property {
            module: "forest_core",
            name: "partition property",
            weight: 8,
            check: partition,
        },
        Property {
            module: "forest_core",
            name: "tree structure and leaf means",
            weight: 8,
            check: leaf_means,
        },
        Property {
            module: "forest_core",
            name: "in-bag weights normalized",
            weight: 6,
            check: inbag_weights,
        },
        Property {
            module: "forest_core",
            name: "oob mask and values",
            weight: 6,
            check: oob_mask,
        },
        Property {
            module: "forest_core",
            name: "improves on the global mean",
            weight: 1,
            check: improvement,
        },
        Property {
            module: "error_dist",
            name: "cohab weights oracle and normalization",
            weight: 8,
            check: cohab,
        },
        Property {
            module: "error_dist",
            name: "cdf laws",
            weight: 8,
            check: cdf_laws,
        },
        Property {
            module: "error_dist",
            name: "inf quantile and monotonicity",
            weight: 8,
            check: quantile_laws,
        },
        Property {
            module: "error_dist",
            name: "plug-in formulas",
            weight: 6,
            check: plug_in,
        },
        Property {
            module: "error_dist",
            name: "variance decomposition",
            weight: 6,
            check: variance,
        },
        Property {
            module: "error_dist",
            name: "location equivariance",
            weight: 4,
            check: equivariance,
        },
        Property {
            module: "error_dist",
            name: "stringent partition and weights",
            weight: 4,
            check: stringent,
        },
        Property {
            module: "baselines",
            name: "unweighted width is constant",
            weight: 4,
            check: unweighted_width,
        },
        Property {
            module: "baselines",
            name: "qrf endpoints within response range",
            weight: 4,
            check: qrf_range,
        },
        Property {
            module: "baselines",
            name: "boost with identical residuals",
            weight: 4,
            check: boost_constant,
        },
        Property {
            module: "sim_harness",
            name: "report bounds and aggregates",
            weight: 1,
            check: report_bounds,
        },
        Property {
            module: "sim_harness",
            name: "report reproducibility",
            weight: 1,
            check: reproducibility,
        },
    ]
}

fn determinism(seed: u64) -> Result<(), String> {
    let inst = small_instance(seed);
    let again = Forest::fit(&inst.data, &inst.params).map_err(err)?;
    ensure!(
        inst.forest.to_bytes() == again.to_bytes(),
        "refit with the same seed differs"
    );
    Ok(())
}

fn serialization(seed: u64) -> Result<(), String> {
    let inst = small_instance(seed);
    let bytes = inst.forest.to_bytes();
    let back = Forest::from_bytes(&bytes).map_err(err)?;
    ensure!(back.to_bytes() == bytes, "round trip changed the bytes");
    for x in &inst.queries {
        ensure!(
            back.predict(x).to_bits() == inst.forest.predict(x).to_bits(),
            "round trip changed a prediction"
        );
    }
    Ok(())
}

fn partition(seed: u64) -> Result<(), String> {
    let inst = small_instance(seed);
    let mut rng = instance::rng(seed ^ 0x5eed);
    for tree in inst.forest.trees() {
        let regions = oracle::leaf_regions(tree, inst.data.p());
        ensure!(regions.len() == tree.n_leaves(), "region count differs from leaf count");
        // random points, training rows and points exactly on thresholds
        let mut probes = inst.queries.clone();
        for node in tree.nodes() {
            if let Node::Split { feature, threshold, .. } = *node {
                let mut x = instance::random_point(&mut rng, inst.data.p());
                x[feature as usize] = threshold;
                probes.push(x);
            }
        }
        for x in &probes {
            let hits = oracle::containing_leaves(&regions, x);
            ensure!(hits.len() == 1, "{} leaves claim {:?}", hits.len(), x);
            ensure!(
                hits[0] == tree.terminal_node_of(x),
                "routing disagrees with region containment"
            );
        }
    }
    Ok(())
}

fn leaf_means(seed: u64) -> Result<(), String> {
    let inst = small_instance(seed);
    let data = &inst.data;
    for tree in inst.forest.trees() {
        let counts = tree.inbag_counts();
        ensure!(
            counts.iter().sum::<u32>() as usize == data.n(),
            "in-bag counts do not sum to n"
        );
        let regions = oracle::leaf_regions(tree, data.p());
        let leaf_of: Vec<u32> = data.rows().map(|x| oracle::route(&regions, x)).collect();
        for leaf in 0..tree.n_leaves() as u32 {
            let (mut w, mut s) = (0u32, 0.0);
            for i in 0..data.n() {
                if leaf_of[i] == leaf {
                    w += counts[i];
                    s += f64::from(counts[i]) * data.y()[i];
                }
            }
            ensure!(w >= 1, "leaf {leaf} holds no in-bag row");
            let mean = s / f64::from(w);
            ensure!(
                close(tree.leaf_values()[leaf as usize], mean, 1e-12),
                "leaf {leaf} value is not its in-bag mean"
            );
        }
        // every split node saw at least 2 * min_node_size in-bag rows with varying responses
        for (idx, node) in tree.nodes().iter().enumerate() {
            if !matches!(node, Node::Split { .. }) {
                continue;
            }
            let inside = split_members(tree, idx, data);
            let w: u32 = inside.iter().map(|&i| counts[i]).sum();
            ensure!(
                w as usize >= 2 * inst.params.min_node_size,
                "node {idx} split with only {w} in-bag rows"
            );
            let ys: Vec<f64> = inside
                .iter()
                .filter(|&&i| counts[i] > 0)
                .map(|&i| data.y()[i])
                .collect();
            ensure!(ys.iter().any(|&v| v != ys[0]), "node {idx} split a constant response");
        }
    }
    Ok(())
}

/// Training rows routed through node `target`.
fn split_members(tree: &forest_error::forest::Tree, target: usize, data: &Dataset) -> Vec<usize> {
    (0..data.n())
        .filter(|&i| {
            let x = data.row(i);
            let mut idx = 0usize;
            loop {
                if idx == target {
                    return true;
                }
                match tree.nodes()[idx] {
                    Node::Leaf { .. } => return false,
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => idx = if x[feature as usize] <= threshold { left } else { right } as usize,
                }
            }
        })
        .collect()
}

fn inbag_weights(seed: u64) -> Result<(), String> {
    let inst = small_instance(seed);
    let regions = oracle::forest_regions(&inst.forest);
    let qrf = QuantileForest::new(&inst.forest, &inst.data).map_err(err)?;
    for x in &inst.queries {
        let mut avg = vec![0.0; inst.data.n()];
        let mut pred = 0.0;
        for (tree, reg) in inst.forest.trees().iter().zip(&regions) {
            let w = oracle::inbag_weights(tree, reg, &inst.data, x);
            ensure!(w.iter().all(|&v| v >= 0.0), "negative in-bag weight");
            ensure!(
                close(w.iter().sum::<f64>(), 1.0, 1e-12),
                "in-bag weights do not sum to one"
            );
            pred += w.iter().zip(inst.data.y()).map(|(a, b)| a * b).sum::<f64>();
            for (a, v) in avg.iter_mut().zip(&w) {
                *a += v / inst.forest.n_trees() as f64;
            }
        }
        let pred = pred / inst.forest.n_trees() as f64;
        ensure!(
            close(inst.forest.predict(x), pred, 1e-12),
            "prediction is not the in-bag weighted average"
        );
        let lib = qrf.weights(&inst.forest, x).map_err(err)?;
        for (a, b) in lib.iter().zip(&avg) {
            ensure!(close(*a, *b, 1e-12), "averaged in-bag weights disagree");
        }
    }
    Ok(())
}

fn oob_mask(seed: u64) -> Result<(), String> {
    let inst = small_instance(seed);
    let oob = OobPredictions::compute(&inst.forest, &inst.data).map_err(err)?;
    let reference = oracle::oob_predictions(&inst.forest, &inst.data);
    ensure!(
        reference.len() == inst.data.n(),
        "oracle covers {} rows",
        reference.len()
    );
    for (i, &r) in reference.iter().enumerate() {
        ensure!(
            oob.valid[i] == (oob.oob_tree_counts[i] > 0),
            "valid mask disagrees with counts"
        );
        match r {
            None => ensure!(!oob.valid[i], "row {i} is never out of bag but marked valid"),
            Some(v) => {
                ensure!(oob.valid[i], "row {i} is out of bag but marked invalid");
                ensure!(close(oob.values[i], v, 1e-12), "oob value of row {i} disagrees");
            }
        }
    }
    Ok(())
}

fn improvement(seed: u64) -> Result<(), String> {
    let spec = DataGenSpec {
        name: DatasetName::StepBias,
        n: 200,
        seed,
    };
    let train = sim::generate(&spec).map_err(err)?;
    let test = sim::generate(&DataGenSpec {
        n: 500,
        seed: seed ^ 0xabcdef,
        ..spec
    })
    .map_err(err)?;
    let forest = Forest::fit(&train, &ForestParams::default().with_trees(100).with_seed(seed)).map_err(err)?;
    let preds = forest.predict_many(&test);
    let mspe = preds.iter().zip(test.y()).map(|(p, y)| (p - y).powi(2)).sum::<f64>() / test.n() as f64;
    let mean = test.y().iter().sum::<f64>() / test.n() as f64;
    let var = test.y().iter().map(|y| (y - mean).powi(2)).sum::<f64>() / test.n() as f64;
    ensure!(
        mspe < var,
        "forest MSPE {mspe} is not below the response variance {var}"
    );
    Ok(())
}

fn cohab(seed: u64) -> Result<(), String> {
    let inst = small_instance(seed);
    let model = ErrorModel::new(inst.forest.clone(), inst.data.clone());
    let oob = OobPredictions::compute(&inst.forest, &inst.data).map_err(err)?;
    for x in &inst.queries {
        let (raw, total) = oracle::cohab_tally(&inst.forest, &inst.data, x);
        let naive = cohab_weights(&inst.forest, &inst.data, x).map_err(err)?;
        ensure!(
            naive.raw_counts == raw && naive.total == total,
            "naive tally disagrees with the oracle"
        );
        ensure!(naive.fallback_used == (total == 0), "fallback flag is wrong");
        let expected = oracle::normalize(&raw, total, &oob.valid);
        ensure!(naive.weights == expected, "naive weights disagree with the oracle");
        if let Ok(model) = &model {
            ensure!(
                model.cohab_weights(x).map_err(err)? == naive,
                "indexed weights disagree with the naive ones"
            );
        }
        ensure!(naive.weights.iter().all(|&w| w >= 0.0), "negative weight");
        ensure!(
            (naive.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12,
            "weights do not sum to one"
        );
        for (w, &ok) in naive.weights.iter().zip(&oob.valid) {
            ensure!(ok || *w == 0.0, "never-out-of-bag row carries weight");
        }
    }
    Ok(())
}

/// A distribution from either a fitted model or a random weighted sample.
fn some_distribution(seed: u64) -> Result<ErrorDistribution, String> {
    let mut rng = instance::rng(seed);
    if rng.random_bool(0.5) {
        let inst = small_instance(seed);
        let oob = OobPredictions::compute(&inst.forest, &inst.data).map_err(err)?;
        if oob.n_valid() > 0 {
            return estimate::error_distribution(&inst.forest, &inst.data, &oob, &inst.queries[0]).map_err(err);
        }
    }
    let len = rng.random_range(1..60);
    let (e, w) = instance::weighted_sample(&mut rng, len);
    ErrorDistribution::from_weighted(&e, &w).map_err(err)
}

fn cdf_laws(seed: u64) -> Result<(), String> {
    let d = some_distribution(seed)?;
    let e = d.errors();
    ensure!(e.windows(2).all(|w| w[0] < w[1]), "support is not strictly increasing");
    ensure!(d.cdf(f64::NEG_INFINITY) == 0.0, "F(-inf) != 0");
    ensure!(d.cdf(f64::INFINITY) == 1.0, "F(+inf) != 1");
    ensure!(d.cdf(*e.last().unwrap()) == 1.0, "F(max) != 1");
    ensure!(d.cdf(e[0] - 1e-9) == 0.0, "F below the minimum is positive");
    ensure!(
        (d.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-12,
        "weights do not sum to one"
    );
    let mut prev = 0.0;
    for (k, &v) in e.iter().enumerate() {
        let at = d.cdf(v);
        let below = d.cdf(v - (v.abs() + 1.0) * 1e-12);
        ensure!(at >= prev, "F decreases");
        ensure!(below == prev, "F is not a step function (left limit at point {k})");
        ensure!(at == d.cdf(v + 0.0), "F is not right-continuous");
        if k + 1 < e.len() {
            let mid = 0.5 * (v + e[k + 1]);
            ensure!(d.cdf(mid) == at, "F changes between support points");
        }
        prev = at;
    }
    Ok(())
}

fn quantile_laws(seed: u64) -> Result<(), String> {
    let d = some_distribution(seed)?;
    let mut rng = instance::rng(seed ^ 0x9);
    let mut alphas: Vec<f64> = (0..20).map(|_| rng.random_range(1e-6..1.0 - 1e-6)).collect();
    // exact cumulative values are the delicate case for an inf-quantile
    alphas.extend(d.cumulative().iter().copied().filter(|&c| c > 0.0 && c < 1.0));
    alphas.sort_by(f64::total_cmp);
    let mut prev = f64::NEG_INFINITY;
    for &a in &alphas {
        let q = d.quantile(a).map_err(err)?;
        ensure!(d.cdf(q) >= a, "F(Q({a})) < {a}");
        let k = d.errors().partition_point(|&v| v < q);
        if k > 0 {
            ensure!(d.cdf(d.errors()[k - 1]) < a, "Q({a}) is not the infimum");
        }
        ensure!(q >= prev, "quantiles are not monotone");
        prev = q;
        let pi = forest_error::PredictionInterval::from_distribution(0.0, &d, a).map_err(err)?;
        ensure!(pi.lower <= pi.upper, "interval lower > upper");
    }
    ensure!(
        d.quantile(0.0).is_err() && d.quantile(1.0).is_err(),
        "alpha outside (0,1) accepted"
    );
    Ok(())
}

fn plug_in(seed: u64) -> Result<(), String> {
    let inst = small_instance(seed);
    let oob = OobPredictions::compute(&inst.forest, &inst.data).map_err(err)?;
    if oob.n_valid() == 0 {
        return Ok(());
    }
    let errors = oracle::oob_errors(&inst.forest, &inst.data);
    for x in &inst.queries {
        let (raw, total) = oracle::cohab_tally(&inst.forest, &inst.data, x);
        let v = oracle::normalize(&raw, total, &oob.valid);
        let d = estimate::error_distribution(&inst.forest, &inst.data, &oob, x).map_err(err)?;
        let (mut m1, mut m2) = (0.0, 0.0);
        for (e, w) in errors.iter().zip(&v) {
            if let Some(e) = e {
                m1 += w * e;
                m2 += w * e * e;
            }
        }
        ensure!(close(d.mspe(), m2, 1e-12), "mspe {} != direct sum {m2}", d.mspe());
        ensure!(close(d.bias(), -m1, 1e-12), "bias {} != direct sum {}", d.bias(), -m1);
        let bc = estimate::bias_corrected_predict(&inst.forest, &inst.data, &oob, x).map_err(err)?;
        ensure!(
            close(bc, inst.forest.predict(x) + m1, 1e-12),
            "bias-corrected prediction is off"
        );
        for &e in d.errors() {
            ensure!(
                close(d.cdf(e), oracle::direct_cdf(&errors, &v, e), 1e-12),
                "CDF disagrees with the direct sum"
            );
        }
    }
    Ok(())
}

fn variance(seed: u64) -> Result<(), String> {
    let d = some_distribution(seed)?;
    ensure!(
        d.mspe() - d.bias().powi(2) >= -1e-12 * (1.0 + d.mspe()),
        "mspe < bias^2"
    );
    Ok(())
}

fn equivariance(seed: u64) -> Result<(), String> {
    let inst = small_instance(seed);
    let mut rng = instance::rng(seed ^ 0xc);
    let c = rng.random_range(-50.0..50.0);
    let shifted = inst
        .data
        .with_response(inst.data.y().iter().map(|y| y + c).collect())
        .map_err(err)?;
    let forest = Forest::fit(&shifted, &inst.params).map_err(err)?;
    for (a, b) in inst.forest.trees().iter().zip(forest.trees()) {
        ensure!(
            a.nodes() == b.nodes() && a.inbag_counts() == b.inbag_counts(),
            "shift changed a tree structure"
        );
    }
    let (Ok(base), Ok(moved)) = (
        ErrorModel::new(inst.forest.clone(), inst.data.clone()),
        ErrorModel::new(forest, shifted),
    ) else {
        return Ok(());
    };
    let tol = 1e-9;
    for x in &inst.queries {
        let e0 = base.estimate(x, 0.1).map_err(err)?;
        let e1 = moved.estimate(x, 0.1).map_err(err)?;
        ensure!(
            close(e1.prediction, e0.prediction + c, tol),
            "prediction did not shift by c"
        );
        ensure!(
            close(e1.bc_prediction, e0.bc_prediction + c, tol),
            "bias-corrected prediction did not shift by c"
        );
        ensure!(
            close(e1.interval.lower, e0.interval.lower + c, tol),
            "lower endpoint did not shift by c"
        );
        ensure!(
            close(e1.interval.upper, e0.interval.upper + c, tol),
            "upper endpoint did not shift by c"
        );
        let (d0, _) = base.distribution(x).map_err(err)?;
        let (d1, _) = moved.distribution(x).map_err(err)?;
        // errors are unchanged up to rounding; summed weights of merged ties may regroup
        for (&a, &b) in d0.errors().iter().zip(d1.errors()) {
            ensure!(
                (a - b).abs() <= tol * (1.0 + c.abs()),
                "error support moved under a response shift"
            );
        }
    }
    Ok(())
}

fn stringent(seed: u64) -> Result<(), String> {
    let mut rng = instance::rng(seed);
    let n = rng.random_range(9..=40);
    let p = rng.random_range(1..=4);
    let data = instance::random_dataset(&mut rng, n, p);
    let params = instance::random_params(&mut rng, p, 10);
    let parts = partition_three(n, seed);
    let mut all: Vec<usize> = parts.iter().flatten().copied().collect();
    all.sort_unstable();
    ensure!(all == (0..n).collect::<Vec<_>>(), "partition is not a disjoint cover");
    let sizes: Vec<usize> = parts.iter().map(Vec::len).collect();
    ensure!(
        sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1,
        "part sizes {sizes:?} differ by more than one"
    );
    ensure!(
        sizes[0] >= sizes[1] && sizes[1] >= sizes[2],
        "extra rows not assigned to I then J"
    );

    let model = if n >= forest_error::estimate::STRINGENT_MIN_ROWS {
        StringentModel::fit(&data, &params, seed).map_err(err)?
    } else {
        let one = Forest::fit(&data.subset(&parts[0]).map_err(err)?, &params).map_err(err)?;
        let two = Forest::fit(
            &data.subset(&parts[1]).map_err(err)?,
            &params.with_seed(params.seed ^ 1),
        )
        .map_err(err)?;
        StringentModel::from_forests(&data, parts.clone(), seed, one, two).map_err(err)?
    };
    ensure!(
        model.partition() == &parts,
        "model partition differs from partition_three"
    );
    for (i, &row) in model.partition()[2].iter().enumerate() {
        let expected = data.y()[row] - model.forest_one().predict(data.row(row));
        ensure!(model.k_errors()[i] == expected, "k error {i} is not Y - forest_one(X)");
    }
    for x in instance::queries(&mut rng, &data, 4) {
        let w = model.weights(&x).map_err(err)?;
        let (raw, total) = oracle::stringent_tally(&model, &x);
        ensure!(
            w.raw_counts == raw && w.total == total,
            "stringent tally disagrees with the oracle"
        );
        ensure!(
            w.weights == oracle::normalize(&raw, total, &vec![true; raw.len()]),
            "stringent weights disagree"
        );
        ensure!(
            (w.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12,
            "stringent weights do not sum to one"
        );
    }
    Ok(())
}

fn fitted(seed: u64) -> Result<Option<(Instance, ErrorModel)>, String> {
    let inst = small_instance(seed);
    match ErrorModel::new(inst.forest.clone(), inst.data.clone()) {
        Ok(m) => Ok(Some((inst, m))),
        Err(forest_error::Error::Estimation(_)) => Ok(None),
        Err(e) => Err(e.to_string()),
    }
}

fn unweighted_width(seed: u64) -> Result<(), String> {
    let Some((inst, model)) = fitted(seed)? else {
        return Ok(());
    };
    let u = UnweightedOob::new(model.data(), model.oob(), 0.2).map_err(err)?;
    let widths: Vec<f64> = inst
        .queries
        .iter()
        .map(|x| u.interval_at(inst.forest.predict(x)).width())
        .collect();
    let offsets: Vec<(f64, f64)> = inst
        .queries
        .iter()
        .map(|x| {
            let pi = u.interval_at(inst.forest.predict(x));
            (pi.lower - pi.center, pi.upper - pi.center)
        })
        .collect();
    let direct = u.interval_at(0.0);
    ensure!(
        offsets
            .iter()
            .all(|&(l, h)| close(l, direct.lower, 1e-12) && close(h, direct.upper, 1e-12)),
        "offsets vary with x"
    );
    ensure!(widths.iter().all(|w| close(*w, widths[0], 1e-12)), "widths vary with x");
    ensure!(direct.width() >= 0.0, "negative width");
    Ok(())
}

fn qrf_range(seed: u64) -> Result<(), String> {
    let inst = small_instance(seed);
    let qrf = QuantileForest::new(&inst.forest, &inst.data).map_err(err)?;
    let lo = inst.data.y().iter().copied().fold(f64::INFINITY, f64::min);
    let hi = inst.data.y().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for x in &inst.queries {
        let w = qrf.weights(&inst.forest, x).map_err(err)?;
        ensure!(
            close(w.iter().sum::<f64>(), 1.0, 1e-12),
            "qrf weights do not sum to one"
        );
        let pi = qrf.interval(&inst.forest, x, 0.1).map_err(err)?;
        ensure!(
            lo <= pi.lower && pi.lower <= pi.upper && pi.upper <= hi,
            "qrf interval leaves the response range"
        );
    }
    Ok(())
}

fn boost_constant(seed: u64) -> Result<(), String> {
    let inst = small_instance(seed);
    let mut rng = instance::rng(seed ^ 0xb);
    let n = inst.data.n();
    // oob values equal to the responses give an identically zero residual
    let zero = OobPredictions {
        values: inst.data.y().to_vec(),
        oob_tree_counts: vec![1; n],
        valid: vec![true; n],
    };
    let params = inst.params;
    let corr = BoostCorrector::fit(&inst.data, &zero, &params).map_err(err)?;
    for x in &inst.queries {
        let p = inst.forest.predict(x);
        ensure!(corr.correct(p, x) == p, "zero residuals changed the prediction");
    }
    // constant response and constant oob values give one identical residual r
    let c: f64 = rng.random_range(-5.0..5.0);
    let d: f64 = rng.random_range(-5.0..5.0);
    let flat = inst.data.with_response(vec![c; n]).map_err(err)?;
    let oob = OobPredictions {
        values: vec![d; n],
        oob_tree_counts: vec![1; n],
        valid: vec![true; n],
    };
    let corr = BoostCorrector::fit(&flat, &oob, &params).map_err(err)?;
    let r = d - c;
    for x in &inst.queries {
        ensure!(
            corr.correct(1.0, x) == 1.0 - r,
            "identical residuals were not reproduced exactly"
        );
    }
    Ok(())
}

fn tiny_config(seed: u64) -> ExperimentConfig {
    let mut rng = instance::rng(seed);
    let names = [
        DatasetName::LinearPI,
        DatasetName::StepBias,
        DatasetName::ClusteredPI,
        DatasetName::BaselineSyn,
    ];
    let name = names[rng.random_range(0..names.len())];
    let kind = if rng.random_bool(0.5) {
        ExperimentKind::Interval
    } else {
        ExperimentKind::Bias
    };
    let methods = match kind {
        ExperimentKind::Interval => vec![Method::PiHat, Method::Stringent, Method::Qrf, Method::UnweightedOOB],
        ExperimentKind::Bias => vec![Method::RawRF, Method::PiHat, Method::BoostBC],
    };
    ExperimentConfig {
        kind,
        dataset: name,
        methods,
        reps: rng.random_range(1..=3),
        n_train: rng.random_range(30..60),
        n_test: rng.random_range(5..30),
        alpha: rng.random_range(0.05..0.5),
        forest: ForestParams {
            n_trees: rng.random_range(2..12),
            ..ForestParams::default()
        },
        seed: rng.random(),
        grid_size: rng.random_range(1..10),
        grid_seed: None,
    }
}

fn report_bounds(seed: u64) -> Result<(), String> {
    let cfg = tiny_config(seed);
    let report = sim::run_experiment(&cfg).map_err(err)?;
    for row in &report.rows {
        if let Some(c) = row.coverage {
            ensure!((0.0..=1.0).contains(&c), "coverage {c} outside [0,1]");
        }
        if let Some(w) = row.width {
            ensure!(w >= 0.0, "negative width {w}");
        }
    }
    for s in &report.summary {
        let rows: Vec<_> = report.rows.iter().filter(|r| r.method == s.method).collect();
        ensure!(
            rows.len() == cfg.reps && s.reps == cfg.reps,
            "one row per repetition expected"
        );
        let mean = |f: fn(&sim::RepRow) -> Option<f64>| {
            rows.iter().map(|r| f(r).unwrap_or(0.0)).sum::<f64>() / rows.len() as f64
        };
        if let Some(c) = s.mean_coverage {
            ensure!(
                close(c, mean(|r| r.coverage), 1e-12),
                "mean coverage is not the mean of the rows"
            );
        }
        if let Some(w) = s.mean_width {
            ensure!(
                close(w, mean(|r| r.width), 1e-12),
                "mean width is not the mean of the rows"
            );
        }
        if let Some(m) = s.mspe {
            ensure!(close(m, mean(|r| r.mspe), 1e-12), "mspe is not the mean of the rows");
        }
        if let Some(m) = s.msb {
            ensure!(m >= 0.0, "negative msb");
        }
    }
    Ok(())
}

fn render(report: &sim::ExperimentReport) -> Result<Vec<u8>, String> {
    let mut out = Vec::new();
    report.write_rows(&mut out).map_err(err)?;
    report.write_summary(&mut out).map_err(err)?;
    report.write_curves(&mut out).map_err(err)?;
    report.write_bias_curves(&mut out).map_err(err)?;
    Ok(out)
}

fn reproducibility(seed: u64) -> Result<(), String> {
    let cfg = tiny_config(seed);
    let a = render(&sim::run_experiment(&cfg).map_err(err)?)?;
    let b = render(&sim::run_experiment(&cfg).map_err(err)?)?;
    ensure!(a == b, "identical configs produced different reports");
    Ok(())
}

/// Splits `total` trials across the properties in proportion to their weights.
pub fn budget(props: &[Property], total: u64) -> Vec<u64> {
    let wsum: u64 = props.iter().map(|p| u64::from(p.weight)).sum();
    let mut out: Vec<u64> = props.iter().map(|p| total * u64::from(p.weight) / wsum).collect();
    let short = total - out.iter().sum::<u64>();
    for slot in out.iter_mut().take(short as usize) {
        *slot += 1;
    }
    out
}

/// Runs `trials` trials of `prop` with seeds derived from `base`; returns the
/// first failure.
pub fn run(prop: &Property, base: u64, trials: u64) -> Result<(), String> {
    for t in 0..trials {
        let seed = base.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(t);
        (prop.check)(seed).map_err(|e| format!("{} (seed {seed}): {e}", prop.name))?;
    }
    Ok(())
}
