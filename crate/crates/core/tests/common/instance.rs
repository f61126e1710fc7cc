//! Random small datasets and forests.

use forest_error::{Dataset, Forest, ForestParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A value that is either continuous or drawn from a small lattice, so that
/// ties in covariates and responses are common.
fn value<R: Rng>(rng: &mut R, tied: bool, scale: f64) -> f64 {
    if tied {
        f64::from(rng.random_range(0..5u8)) * 0.25 * scale
    } else {
        rng.random_range(-1.0..1.0) * scale
    }
}

pub fn random_dataset<R: Rng>(rng: &mut R, n: usize, p: usize) -> Dataset {
    let tied_x = rng.random_bool(0.3);
    let tied_y = rng.random_bool(0.3);
    let constant_y = rng.random_bool(0.05);
    let x: Vec<f64> = (0..n * p).map(|_| value(rng, tied_x, 1.0)).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            if constant_y {
                2.5
            } else {
                3.0 * x[i * p] + value(rng, tied_y, 2.0)
            }
        })
        .collect();
    Dataset::from_flat(x, y, p).expect("valid random dataset")
}

pub fn random_point<R: Rng>(rng: &mut R, p: usize) -> Vec<f64> {
    (0..p).map(|_| rng.random_range(-1.2..1.2)).collect()
}

/// Query points: fresh random points plus a few training rows, which sit
/// exactly on the lattice used by the split thresholds' neighbours.
pub fn queries<R: Rng>(rng: &mut R, data: &Dataset, count: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = (0..count).map(|_| random_point(rng, data.p())).collect();
    for _ in 0..2 {
        out.push(data.row(rng.random_range(0..data.n())).to_vec());
    }
    out
}

pub fn random_params<R: Rng>(rng: &mut R, p: usize, max_trees: usize) -> ForestParams {
    ForestParams {
        n_trees: rng.random_range(1..=max_trees),
        mtry: Some(rng.random_range(1..=p)),
        min_node_size: rng.random_range(1..=3),
        seed: rng.random(),
    }
}

pub struct Instance {
    pub data: Dataset,
    pub params: ForestParams,
    pub forest: Forest,
    pub queries: Vec<Vec<f64>>,
}

/// `n <= 20`, `p <= 4`, `B <= 10`.
pub fn small_instance(seed: u64) -> Instance {
    let mut rng = rng(seed);
    let n = rng.random_range(6..=20);
    let p = rng.random_range(1..=4);
    let data = random_dataset(&mut rng, n, p);
    let params = random_params(&mut rng, p, 10);
    let forest = Forest::fit(&data, &params).expect("fit small forest");
    let queries = queries(&mut rng, &data, 6);
    Instance {
        data,
        params,
        forest,
        queries,
    }
}

/// Random integer-weighted sample for distribution tests, with ties.
pub fn weighted_sample<R: Rng>(rng: &mut R, len: usize) -> (Vec<f64>, Vec<f64>) {
    let tied = rng.random_bool(0.5);
    let errors = (0..len)
        .map(|_| {
            if tied {
                f64::from(rng.random_range(-6i8..=6)) * 0.5
            } else {
                rng.random_range(-10.0..10.0)
            }
        })
        .collect();
    let weights = (0..len)
        .map(|_| {
            if rng.random_bool(0.1) {
                0.0
            } else {
                f64::from(rng.random_range(1u8..=20))
            }
        })
        .collect::<Vec<f64>>();
    let mut weights = weights;
    if weights.iter().all(|&w| w == 0.0) {
        weights[0] = 1.0;
    }
    (errors, weights)
}
