//! Experiment results and their CSV renderings.

use std::io::Write;

use super::config::{ExperimentKind, Method};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RepRow {
    pub rep: usize,
    pub method: Method,
    pub coverage: Option<f64>,
    pub width: Option<f64>,
    pub mspe: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    pub reps: usize,
    pub mean_coverage: Option<f64>,
    pub mean_width: Option<f64>,
    pub msb: Option<f64>,
    pub mspe: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub grid_x: f64,
    pub method: Method,
    pub mean_lower: f64,
    pub mean_upper: f64,
    pub true_lower: f64,
    pub true_upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasCurveRow {
    pub grid_x: f64,
    pub method: Method,
    pub mean_prediction: f64,
    pub true_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub dataset: String,
    pub alpha: f64,
    pub reps: usize,
    pub rows: Vec<RepRow>,
    pub summary: Vec<MethodSummary>,
    /// Interval experiments on synthetic laws only.
    pub curves: Vec<CurveRow>,
    /// Bias experiments on synthetic laws only.
    pub bias_curves: Vec<BiasCurveRow>,
}

impl ExperimentReport {
    pub fn summary_for(&self, method: Method) -> Option<&MethodSummary> {
        self.summary.iter().find(|s| s.method == method)
    }

    /// `report.csv`: one row per (repetition, method).
    pub fn write_rows<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["dataset", "rep", "method", "coverage", "width", "mspe"])
            .map_err(csv_err)?;
        for r in &self.rows {
            out.write_record([
                self.dataset.clone(),
                r.rep.to_string(),
                r.method.label().to_string(),
                opt(r.coverage),
                opt(r.width),
                opt(r.mspe),
            ])
            .map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    /// `summary.csv`: one row per method, shaped like the comparison tables.
    pub fn write_summary<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["dataset", "method", "reps", "coverage", "width", "msb", "mspe"])
            .map_err(csv_err)?;
        for s in &self.summary {
            out.write_record([
                self.dataset.clone(),
                s.method.label().to_string(),
                s.reps.to_string(),
                opt(s.mean_coverage),
                opt(s.mean_width),
                opt(s.msb),
                opt(s.mspe),
            ])
            .map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    /// `curves.csv`: mean and true interval bounds on the evaluation grid.
    pub fn write_curves<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "grid_x",
            "method",
            "mean_lower",
            "mean_upper",
            "true_lower",
            "true_upper",
        ])
        .map_err(csv_err)?;
        for c in &self.curves {
            out.write_record([
                c.grid_x.to_string(),
                c.method.label().to_string(),
                c.mean_lower.to_string(),
                c.mean_upper.to_string(),
                c.true_lower.to_string(),
                c.true_upper.to_string(),
            ])
            .map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    /// `bias_curves.csv`: mean prediction against the true conditional mean.
    pub fn write_bias_curves<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["grid_x", "method", "mean_prediction", "true_mean"])
            .map_err(csv_err)?;
        for c in &self.bias_curves {
            out.write_record([
                c.grid_x.to_string(),
                c.method.label().to_string(),
                c.mean_prediction.to_string(),
                c.true_mean.to_string(),
            ])
            .map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
