//! Weighted empirical distribution of prediction errors.

use std::io::Write;

use crate::error::{Error, Result};

/// A right-continuous step CDF over strictly increasing support points.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorDistribution {
    errors: Vec<f64>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl ErrorDistribution {
    /// Builds the distribution from parallel `(error, weight)` slices.
    ///
    /// Pairs with zero weight or a non-finite error are dropped, equal errors
    /// are merged, and the remaining mass is renormalized to one.
    pub fn from_weighted(errors: &[f64], weights: &[f64]) -> Result<Self> {
        if errors.len() != weights.len() {
            return Err(Error::InvalidData(format!(
                "{} errors but {} weights",
                errors.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidData(format!("invalid weight {w}")));
        }
        let mut pairs: Vec<(f64, f64)> = errors
            .iter()
            .zip(weights)
            .filter(|(e, w)| **w > 0.0 && e.is_finite())
            .map(|(&e, &w)| (e, w))
            .collect();
        if pairs.is_empty() {
            return Err(Error::Estimation("error distribution has empty support".into()));
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut errors: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut merged: Vec<f64> = Vec::with_capacity(pairs.len());
        for (e, w) in pairs {
            match errors.last() {
                Some(&last) if last == e => *merged.last_mut().unwrap() += w,
                _ => {
                    errors.push(e);
                    merged.push(w);
                }
            }
        }
        let total: f64 = merged.iter().sum();
        let weights: Vec<f64> = merged.iter().map(|w| w / total).collect();
        // Accumulate the unnormalized mass and divide once per point, so that
        // integer tallies give correctly rounded CDF values ending at exactly 1.
        let mut acc = 0.0;
        let cumulative = merged
            .iter()
            .map(|w| {
                acc += w;
                acc / total
            })
            .collect();
        Ok(Self {
            errors,
            weights,
            cumulative,
        })
    }

    /// Equal weights over `errors`.
    pub fn unweighted(errors: &[f64]) -> Result<Self> {
        Self::from_weighted(errors, &vec![1.0; errors.len()])
    }

    pub fn errors(&self) -> &[f64] {
        &self.errors
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn len(&self) -> usize {
        self.errors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.errors.is_empty()
    }

    /// `F(e)`: total weight of support points `<= e`.
    pub fn cdf(&self, e: f64) -> f64 {
        let k = self.errors.partition_point(|&v| v <= e);
        if k == 0 {
            0.0
        } else if k == self.errors.len() {
            1.0
        } else {
            self.cumulative[k - 1]
        }
    }

    /// `inf { e : F(e) >= alpha }` for `alpha` in (0, 1).
    pub fn quantile(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "quantile level {alpha} is not in (0, 1)"
            )));
        }
        let k = self.cumulative.partition_point(|&c| c < alpha);
        Ok(self.errors[k.min(self.errors.len() - 1)])
    }

    /// Weighted mean of the errors.
    pub fn mean(&self) -> f64 {
        self.errors.iter().zip(&self.weights).map(|(e, w)| e * w).sum()
    }

    /// Weighted mean of the squared errors: the conditional MSPE estimate.
    pub fn mspe(&self) -> f64 {
        self.errors.iter().zip(&self.weights).map(|(e, w)| e * e * w).sum()
    }

    /// Conditional bias estimate, prediction minus response: `-mean()`.
    pub fn bias(&self) -> f64 {
        -self.mean()
    }

    /// Writes `error,weight,cum_weight` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        out.write_record(["error", "weight", "cum_weight"]).map_err(io_err)?;
        for ((e, wt), c) in self.errors.iter().zip(&self.weights).zip(&self.cumulative) {
            out.write_record([e.to_string(), wt.to_string(), c.to_string()])
                .map_err(io_err)?;
        }
        out.flush()?;
        Ok(())
    }
}
