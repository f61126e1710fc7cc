//! Synthetic benchmarks, experiment protocols and CSV ingestion.

mod config;
mod csv_data;
mod datagen;
mod experiment;
mod report;

pub use config::{BenchConfig, ExperimentConfig, ExperimentKind, Method};
pub use csv_data::{load_csv, Column, ColumnKind, CsvSchema, LoadedCsv};
pub use datagen::{generate, DataGenSpec, DatasetName, NoisedVariant};
pub use experiment::{
    evaluation_grid, run_benchmark, run_bias_experiment, run_experiment, run_interval_experiment, BiasSuite,
    IntervalSuite,
};
pub use report::{BiasCurveRow, CurveRow, ExperimentReport, MethodSummary, RepRow};
