//! Random forest regression with conditional prediction-error estimation.
//!
//! A fitted [`Forest`] yields, at any query point, a weighted empirical
//! distribution of out-of-bag prediction errors. The weights count how often
//! each training row was an out-of-bag cohabitant of the query (shared its
//! terminal node in a tree that did not see it). Conditional MSPE, bias,
//! bias-corrected predictions, response quantiles and prediction intervals
//! are plug-in functionals of that distribution; see [`ErrorModel`].
//!
//! [`StringentModel`] is the sample-split variant, [`baselines`] holds the
//! comparison methods and [`sim`] the simulation protocols.

pub mod baselines;
pub mod dataset;
mod error;
pub mod estimate;
pub mod forest;
pub mod par;
pub mod rng;
pub mod sim;

pub use dataset::Dataset;
pub use error::{Error, Result};
pub use estimate::{ErrorDistribution, ErrorEstimator, ErrorModel, PointEstimate, PredictionInterval, StringentModel};
pub use forest::{Forest, ForestParams, OobPredictions};
