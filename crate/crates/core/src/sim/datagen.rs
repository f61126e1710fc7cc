//! Synthetic data-generating processes with known conditional laws.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as StatNormal};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::rng_from;

/// Names of the synthetic generators.
///
/// `*Bias` laws draw covariates from `Unif[0,1]^10`; `*PI` laws follow the
/// interval benchmark designs. `NoisedBias` wraps a bias law with inflated
/// noise (response SD 10, or SD 2 for the exponential's multiplier).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DatasetName {
    BaselineSyn,
    LinearBias,
    StepBias,
    ExponentialBias,
    FriedmanBias,
    LinearPI,
    ClusteredPI,
    StepPI,
    FriedmanPI,
    ParabolaPI,
    TwoDPI,
    /// Mean 10 and SD 3 for `X1 > 0`, mean 0 and SD 1 otherwise, on `Unif[-1,1]^10`.
    HeteroStep,
    NoisedBias(NoisedVariant),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NoisedVariant {
    #[serde(alias = "BaselineSyn")]
    Baseline,
    #[serde(alias = "LinearBias")]
    Linear,
    #[serde(alias = "StepBias")]
    Step,
    #[serde(alias = "ExponentialBias")]
    Exponential,
    #[serde(alias = "FriedmanBias")]
    Friedman,
}

impl std::str::FromStr for DatasetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        use DatasetName::*;
        Ok(match s {
            "BaselineSyn" => BaselineSyn,
            "LinearBias" => LinearBias,
            "StepBias" => StepBias,
            "ExponentialBias" => ExponentialBias,
            "FriedmanBias" => FriedmanBias,
            "LinearPI" => LinearPI,
            "ClusteredPI" => ClusteredPI,
            "StepPI" => StepPI,
            "FriedmanPI" => FriedmanPI,
            "ParabolaPI" => ParabolaPI,
            "TwoDPI" => TwoDPI,
            "HeteroStep" => HeteroStep,
            "NoisedBaseline" => NoisedBias(NoisedVariant::Baseline),
            "NoisedLinear" => NoisedBias(NoisedVariant::Linear),
            "NoisedStep" => NoisedBias(NoisedVariant::Step),
            "NoisedExponential" => NoisedBias(NoisedVariant::Exponential),
            "NoisedFriedman" => NoisedBias(NoisedVariant::Friedman),
            other => return Err(Error::InvalidParameter(format!("unknown dataset `{other}`"))),
        })
    }
}

impl std::fmt::Display for DatasetName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DatasetName::NoisedBias(v) => write!(f, "Noised{v:?}"),
            other => write!(f, "{other:?}"),
        }
    }
}

/// Which generator, how many rows, which seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataGenSpec {
    pub name: DatasetName,
    pub n: usize,
    pub seed: u64,
}

/// Lower edges and widths of the five cluster bands along `X1`.
const CLUSTER_BAND: f64 = 0.16;
const CLUSTER_MEANS: [f64; 5] = [0.0, 40.0, 80.0, 120.0, 160.0];
const CLUSTER_SDS: [f64; 5] = [1.0, 2.0, 3.0, 4.0, 5.0];

fn cluster_of(x1: f64) -> usize {
    ((x1 * 5.0).floor() as isize).clamp(0, 4) as usize
}

fn friedman(x: &[f64]) -> f64 {
    10.0 * (PI * x[0] * x[1]).sin() + 20.0 * (x[2] - 0.5).powi(2) + 10.0 * x[3] + 5.0 * x[4]
}

fn step_indicator(cond: bool) -> f64 {
    if cond {
        1.0
    } else {
        0.0
    }
}

impl DatasetName {
    pub fn p(&self) -> usize {
        use DatasetName::*;
        match self {
            LinearPI | TwoDPI => 50,
            ParabolaPI => 40,
            _ => 10,
        }
    }

    /// Index of the covariate that carries the signal, used as the curve axis.
    pub fn signal_covariate(&self) -> usize {
        0
    }

    fn noise_scale(&self) -> f64 {
        match self {
            DatasetName::NoisedBias(_) => 10.0,
            _ => 1.0,
        }
    }

    fn base(&self) -> DatasetName {
        match self {
            DatasetName::NoisedBias(v) => match v {
                NoisedVariant::Baseline => DatasetName::BaselineSyn,
                NoisedVariant::Linear => DatasetName::LinearBias,
                NoisedVariant::Step => DatasetName::StepBias,
                NoisedVariant::Exponential => DatasetName::ExponentialBias,
                NoisedVariant::Friedman => DatasetName::FriedmanBias,
            },
            other => *other,
        }
    }

    /// SD of the exponent multiplier for the exponential law.
    fn exponential_sd(&self) -> f64 {
        match self {
            DatasetName::NoisedBias(NoisedVariant::Exponential) => 2.0,
            _ => 1.0,
        }
    }

    pub fn sample_x<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        use DatasetName::*;
        let p = self.p();
        let unif = |rng: &mut R, lo: f64, hi: f64| lo + (hi - lo) * rng.random::<f64>();
        match self.base() {
            BaselineSyn | LinearBias | StepBias | ExponentialBias | FriedmanBias => {
                (0..p).map(|_| rng.random::<f64>()).collect()
            }
            LinearPI | FriedmanPI | TwoDPI | HeteroStep => (0..p).map(|_| unif(rng, -1.0, 1.0)).collect(),
            StepPI => {
                let x1 = if rng.random::<f64>() < 0.05 {
                    unif(rng, -1.0, 0.0)
                } else {
                    unif(rng, 0.0, 1.0)
                };
                std::iter::once(x1)
                    .chain((1..p).map(|_| unif(rng, -1.0, 1.0)))
                    .collect()
            }
            ParabolaPI => {
                let u = rng.random::<f64>();
                let (lo, hi) = if u < 0.05 {
                    (-1.0, -1.0 / 3.0)
                } else if u < 0.95 {
                    (-1.0 / 3.0, 1.0 / 3.0)
                } else {
                    (1.0 / 3.0, 1.0)
                };
                let x1 = unif(rng, lo, hi);
                std::iter::once(x1)
                    .chain((1..p).map(|_| unif(rng, -1.0, 1.0)))
                    .collect()
            }
            ClusteredPI => {
                let k = rng.random_range(0..5usize);
                let lo = 0.2 * k as f64 + (0.2 - CLUSTER_BAND) / 2.0;
                let x1 = unif(rng, lo, lo + CLUSTER_BAND);
                std::iter::once(x1).chain((1..p).map(|_| rng.random::<f64>())).collect()
            }
            NoisedBias(_) => unreachable!(),
        }
    }

    /// Conditional mean `E[Y | x]`.
    pub fn mean(&self, x: &[f64]) -> f64 {
        use DatasetName::*;
        match self.base() {
            BaselineSyn | ParabolaPI => 0.0,
            LinearBias | LinearPI => x[0],
            StepBias => 10.0 * step_indicator(x[0] > 0.5),
            StepPI => 20.0 * step_indicator(x[0] > 0.0),
            HeteroStep => 10.0 * step_indicator(x[0] > 0.0),
            ExponentialBias => {
                let s = self.exponential_sd();
                (0.5 * x[0] * x[0] * s * s).exp()
            }
            FriedmanBias | FriedmanPI => friedman(x),
            TwoDPI => 5.0 * x[0],
            ClusteredPI => CLUSTER_MEANS[cluster_of(x[0])],
            NoisedBias(_) => unreachable!(),
        }
    }

    /// Conditional SD of the Gaussian noise around `mean`; `None` for the
    /// exponential law, which is not location-scale Gaussian.
    pub fn sd(&self, x: &[f64]) -> Option<f64> {
        use DatasetName::*;
        let scale = self.noise_scale();
        Some(match self.base() {
            BaselineSyn | LinearBias | StepBias | FriedmanBias | FriedmanPI => scale,
            LinearPI | StepPI => 2.0,
            HeteroStep => 1.0 + 2.0 * step_indicator(x[0] > 0.0),
            ParabolaPI => x[0] * x[0],
            TwoDPI => 2.0 * (x[1] + 2.0).abs(),
            ClusteredPI => CLUSTER_SDS[cluster_of(x[0])],
            ExponentialBias => return None,
            NoisedBias(_) => unreachable!(),
        })
    }

    pub fn sample_y<R: Rng>(&self, x: &[f64], rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        match self.sd(x) {
            Some(sd) => self.mean(x) + sd * z,
            None => (x[0] * self.exponential_sd() * z).exp(),
        }
    }

    /// True conditional `level`-quantile of `Y` at `x`.
    pub fn quantile(&self, x: &[f64], level: f64) -> f64 {
        let z = StatNormal::standard().inverse_cdf(level);
        match self.sd(x) {
            Some(sd) => self.mean(x) + sd * z,
            None => (x[0] * self.exponential_sd() * z).exp(),
        }
    }

    pub fn sample_covariates<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
        (0..n).map(|_| self.sample_x(rng)).collect()
    }

    /// `n` rows drawn from the joint law.
    pub fn sample<R: Rng>(&self, n: usize, rng: &mut R) -> Result<Dataset> {
        let rows = self.sample_covariates(n, rng);
        let y = rows.iter().map(|x| self.sample_y(x, rng)).collect();
        Dataset::from_rows(&rows, y)
    }
}

/// Draws the dataset described by `spec`.
pub fn generate(spec: &DataGenSpec) -> Result<Dataset> {
    spec.name.sample(spec.n, &mut rng_from(spec.seed))
}
