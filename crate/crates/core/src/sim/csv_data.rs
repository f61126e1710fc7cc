//! CSV ingestion with one-hot encoding of declared categorical columns.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ColumnKind {
    Numeric,
    /// Sorted levels; each becomes one indicator column.
    Categorical(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

/// Encoded covariate rows and, when the file has one, the response column.
pub type Encoded = (Vec<Vec<f64>>, Option<Vec<f64>>);

/// How raw CSV columns map onto encoded covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub response: String,
    pub columns: Vec<Column>,
}

impl CsvSchema {
    /// Encoded covariate names, `col=level` for indicators.
    pub fn feature_names(&self) -> Vec<String> {
        self.columns
            .iter()
            .flat_map(|c| match &c.kind {
                ColumnKind::Numeric => vec![c.name.clone()],
                ColumnKind::Categorical(levels) => levels.iter().map(|l| format!("{}={l}", c.name)).collect(),
            })
            .collect()
    }

    pub fn p(&self) -> usize {
        self.feature_names().len()
    }

    /// Encodes a CSV with the stored schema. The response column is optional
    /// here; when present, its values are returned alongside the covariates.
    pub fn encode_file(&self, path: &Path) -> Result<Encoded> {
        let table = Table::read(path)?;
        let mut positions = Vec::with_capacity(self.columns.len());
        for c in &self.columns {
            positions.push(
                table
                    .position(&c.name)
                    .ok_or_else(|| Error::MissingColumn(c.name.clone()))?,
            );
        }
        let response_pos = table.position(&self.response);
        let mut rows = Vec::with_capacity(table.records.len());
        let mut ys = response_pos.map(|_| Vec::with_capacity(table.records.len()));
        for (r, record) in table.records.iter().enumerate() {
            let mut row = Vec::with_capacity(self.p());
            for (c, &pos) in self.columns.iter().zip(&positions) {
                let cell = table.cell(record, r, pos)?;
                encode_cell(c, cell, r, &mut row)?;
            }
            if let (Some(pos), Some(ys)) = (response_pos, ys.as_mut()) {
                ys.push(parse_number(table.cell(record, r, pos)?, r, &self.response)?);
            }
            rows.push(row);
        }
        Ok((rows, ys))
    }
}

fn encode_cell(column: &Column, cell: &str, row: usize, out: &mut Vec<f64>) -> Result<()> {
    match &column.kind {
        ColumnKind::Numeric => out.push(parse_number(cell, row, &column.name)?),
        ColumnKind::Categorical(levels) => {
            let k = levels.iter().position(|l| l == cell).ok_or_else(|| {
                Error::InvalidData(format!(
                    "row {}: unknown level `{cell}` in categorical column `{}`",
                    row + 1,
                    column.name
                ))
            })?;
            out.extend((0..levels.len()).map(|j| if j == k { 1.0 } else { 0.0 }));
        }
    }
    Ok(())
}

fn parse_number(cell: &str, row: usize, column: &str) -> Result<f64> {
    let v: f64 = cell.trim().parse().map_err(|_| {
        Error::InvalidData(format!(
            "row {}: column `{column}` has non-numeric value `{cell}`; declare it categorical",
            row + 1
        ))
    })?;
    if !v.is_finite() {
        return Err(Error::InvalidData(format!(
            "row {}: column `{column}` is not finite",
            row + 1
        )));
    }
    Ok(v)
}

struct Table {
    headers: Vec<String>,
    records: Vec<csv::StringRecord>,
}

impl Table {
    fn read(path: &Path) -> Result<Self> {
        let wrap = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(wrap)?;
        let headers = reader
            .headers()
            .map_err(wrap)?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let records = reader
            .records()
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(wrap)?;
        Ok(Self { headers, records })
    }

    fn position(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    fn cell<'a>(&self, record: &'a csv::StringRecord, row: usize, pos: usize) -> Result<&'a str> {
        let cell = record.get(pos).map(str::trim).unwrap_or("");
        if cell.is_empty() || cell.eq_ignore_ascii_case("na") {
            return Err(Error::InvalidData(format!(
                "row {}: missing value in column `{}`",
                row + 1,
                self.headers[pos]
            )));
        }
        Ok(cell)
    }
}

/// A loaded benchmark: the encoded dataset and the schema that produced it.
#[derive(Debug, Clone)]
pub struct LoadedCsv {
    pub dataset: Dataset,
    pub schema: CsvSchema,
}

/// Reads a headered CSV, one-hot encodes `categorical_columns` (levels in
/// sorted order) and rejects missing values. All other non-response columns
/// must be numeric.
pub fn load_csv(path: &Path, response_column: &str, categorical_columns: &[String]) -> Result<LoadedCsv> {
    let table = Table::read(path)?;
    let response_pos = table
        .position(response_column)
        .ok_or_else(|| Error::MissingColumn(response_column.to_string()))?;
    if let Some(c) = categorical_columns.iter().find(|c| table.position(c).is_none()) {
        return Err(Error::MissingColumn(c.clone()));
    }
    if categorical_columns.iter().any(|c| c == response_column) {
        return Err(Error::Config(format!(
            "response column `{response_column}` cannot be categorical"
        )));
    }

    let mut columns = Vec::new();
    for (pos, name) in table.headers.iter().enumerate() {
        if pos == response_pos {
            continue;
        }
        let kind = if categorical_columns.contains(name) {
            let mut levels = BTreeSet::new();
            for (r, record) in table.records.iter().enumerate() {
                levels.insert(table.cell(record, r, pos)?.to_string());
            }
            ColumnKind::Categorical(levels.into_iter().collect())
        } else {
            ColumnKind::Numeric
        };
        columns.push(Column {
            name: name.clone(),
            kind,
        });
    }
    let schema = CsvSchema {
        response: response_column.to_string(),
        columns,
    };
    let (rows, y) = schema.encode_file(path)?;
    let dataset = Dataset::from_rows(&rows, y.expect("response column located above"))?;
    Ok(LoadedCsv { dataset, schema })
}
