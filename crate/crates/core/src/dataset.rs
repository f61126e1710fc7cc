//! Numeric training data: a row-major covariate matrix and a response vector.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Vec<f64>,
    y: Vec<f64>,
    n: usize,
    p: usize,
}

impl Dataset {
    /// Builds a dataset from a flat row-major covariate buffer of length `n * p`.
    pub fn from_flat(x: Vec<f64>, y: Vec<f64>, p: usize) -> Result<Self> {
        let n = y.len();
        if p == 0 {
            return Err(Error::InvalidData("at least one covariate is required".into()));
        }
        if n < 2 {
            return Err(Error::InvalidData(format!("need at least 2 rows, got {n}")));
        }
        if x.len() != n * p {
            return Err(Error::InvalidData(format!(
                "covariate buffer has {} values, expected {n} rows x {p} columns",
                x.len()
            )));
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite covariate at row {}, column {}",
                pos / p,
                pos % p
            )));
        }
        if let Some(pos) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!("non-finite response at row {pos}")));
        }
        Ok(Self { x, y, n, p })
    }

    pub fn from_rows(rows: &[Vec<f64>], y: Vec<f64>) -> Result<Self> {
        if rows.len() != y.len() {
            return Err(Error::InvalidData(format!(
                "{} covariate rows but {} responses",
                rows.len(),
                y.len()
            )));
        }
        let p = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::InvalidData(format!("row {i} has a different width than row 0")));
        }
        Self::from_flat(rows.concat(), y, p)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.x.chunks_exact(self.p)
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.x[i * self.p + j]
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Same covariates, new response vector.
    pub fn with_response(&self, y: Vec<f64>) -> Result<Self> {
        Self::from_flat(self.x.clone(), y, self.p)
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut x = Vec::with_capacity(indices.len() * self.p);
        let mut y = Vec::with_capacity(indices.len());
        for &i in indices {
            x.extend_from_slice(self.row(i));
            y.push(self.y[i]);
        }
        Self::from_flat(x, y, self.p)
    }

    /// Column-major copy of the covariates, used by the split search.
    pub(crate) fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.p)
            .map(|j| (0..self.n).map(|i| self.value(i, j)).collect())
            .collect()
    }
}
