//! JSON experiment configurations.

use serde::{Deserialize, Serialize};

use super::datagen::DatasetName;
use crate::error::{Error, Result};
use crate::estimate::check_alpha;
use crate::forest::ForestParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    /// Mean squared bias and MSPE of point predictors.
    Bias,
    /// Coverage and width of prediction intervals.
    Interval,
}

/// Estimators an experiment can compare.
///
/// In bias experiments `PI_hat` and `Stringent` denote the bias-corrected
/// predictions of the weighted OOB and sample-split estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "PI_hat")]
    PiHat,
    Stringent,
    #[serde(rename = "QRF")]
    Qrf,
    UnweightedOOB,
    BoostBC,
    RawRF,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::PiHat => "PI_hat",
            Method::Stringent => "Stringent",
            Method::Qrf => "QRF",
            Method::UnweightedOOB => "UnweightedOOB",
            Method::BoostBC => "BoostBC",
            Method::RawRF => "RawRF",
        }
    }

    pub fn supports(&self, kind: ExperimentKind) -> bool {
        match kind {
            ExperimentKind::Interval => matches!(
                self,
                Method::PiHat | Method::Stringent | Method::Qrf | Method::UnweightedOOB
            ),
            ExperimentKind::Bias => matches!(
                self,
                Method::PiHat | Method::Stringent | Method::BoostBC | Method::RawRF
            ),
        }
    }
}

fn default_alpha() -> f64 {
    0.05
}

fn default_grid_size() -> usize {
    500
}

fn default_train_fraction() -> f64 {
    0.8
}

/// A synthetic experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub dataset: DatasetName,
    pub methods: Vec<Method>,
    pub reps: usize,
    pub n_train: usize,
    pub n_test: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// The seed field is ignored: each repetition derives its own.
    #[serde(default)]
    pub forest: ForestParams,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
    /// Seed of the fixed evaluation grid; derived from `seed` when absent.
    #[serde(default)]
    pub grid_seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        validate_common(self.kind, &self.methods, self.reps, self.alpha)?;
        if self.n_train < 2 {
            return Err(Error::Config("n_train must be at least 2".into()));
        }
        if self.methods.contains(&Method::Stringent) && self.n_train < crate::estimate::STRINGENT_MIN_ROWS {
            return Err(Error::Config("the stringent estimator needs n_train >= 30".into()));
        }
        if self.n_test == 0 {
            return Err(Error::Config("n_test must be positive".into()));
        }
        if self.grid_size == 0 {
            return Err(Error::Config("grid_size must be positive".into()));
        }
        self.forest
            .validate(self.dataset.p())
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json_from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// An experiment on a user-supplied table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub kind: ExperimentKind,
    pub response: String,
    #[serde(default)]
    pub categorical: Vec<String>,
    pub methods: Vec<Method>,
    pub reps: usize,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub forest: ForestParams,
    #[serde(default)]
    pub seed: u64,
    /// Mean squared bias needs known conditional means, which a table lacks;
    /// setting this is rejected.
    #[serde(default)]
    pub msb: bool,
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        validate_common(self.kind, &self.methods, self.reps, self.alpha)?;
        if self.msb {
            return Err(Error::Config(
                "mean squared bias requires a synthetic dataset with known conditional means".into(),
            ));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction {} is not in (0, 1)",
                self.train_fraction
            )));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json_from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn validate_common(kind: ExperimentKind, methods: &[Method], reps: usize, alpha: f64) -> Result<()> {
    if reps == 0 {
        return Err(Error::Config("reps must be at least 1".into()));
    }
    check_alpha(alpha).map_err(|e| Error::Config(e.to_string()))?;
    if methods.is_empty() {
        return Err(Error::Config("no methods requested".into()));
    }
    if let Some(m) = methods.iter().find(|m| !m.supports(kind)) {
        return Err(Error::Config(format!(
            "method {} does not apply to {kind:?} experiments",
            m.label()
        )));
    }
    Ok(())
}

fn serde_json_from_str<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config JSON: {e}")))
}
