use std::io::Read;

use crate::error::{Error, Result};

use super::{ColumnKind, FeatureSchema};

#[derive(Debug, Clone, PartialEq)]
pub enum RawColumn {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
}

impl RawColumn {
    pub fn len(&self) -> usize {
        match self {
            RawColumn::Numeric(v) => v.len(),
            RawColumn::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn select(&self, indices: &[usize]) -> Self {
        match self {
            RawColumn::Numeric(v) => RawColumn::Numeric(indices.iter().map(|&i| v[i]).collect()),
            RawColumn::Categorical(v) => RawColumn::Categorical(indices.iter().map(|&i| v[i].clone()).collect()),
        }
    }
}

/// Typed but not yet normalised rows, columns in schema order.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub schema: FeatureSchema,
    pub columns: Vec<RawColumn>,
    pub labels: Vec<usize>,
    pub zones: Option<Vec<String>>,
}

impl RawTable {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            schema: self.schema.clone(),
            columns: self.columns.iter().map(|c| c.select(indices)).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            zones: self
                .zones
                .as_ref()
                .map(|z| indices.iter().map(|&i| z[i].clone()).collect()),
        }
    }
}

/// Reads a headed CSV. Columns may appear in any order; columns the schema
/// does not mention are ignored. Row numbers in errors are 1-based data rows.
pub fn parse_csv<R: Read>(source: R, schema: &FeatureSchema) -> Result<RawTable> {
    schema.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let position = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing column {name:?}")))
    };
    let feature_pos = schema
        .columns
        .iter()
        .map(|c| position(&c.name))
        .collect::<Result<Vec<_>>>()?;
    let label_pos = position(&schema.label_column)?;
    let zone_pos = schema.zone_column.as_deref().map(position).transpose()?;

    let mut columns: Vec<RawColumn> = schema
        .columns
        .iter()
        .map(|c| match c.kind {
            ColumnKind::Numeric => RawColumn::Numeric(Vec::new()),
            ColumnKind::Categorical => RawColumn::Categorical(Vec::new()),
        })
        .collect();
    let mut labels = Vec::new();
    let mut zones = zone_pos.map(|_| Vec::new());

    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record?;
        for ((col, &pos), spec) in columns.iter_mut().zip(&feature_pos).zip(&schema.columns) {
            let cell = record.get(pos).unwrap_or("");
            match col {
                RawColumn::Numeric(v) => {
                    let x: f64 = cell.parse().map_err(|_| Error::Parse {
                        row,
                        column: spec.name.clone(),
                        message: format!("{cell:?} is not a number"),
                    })?;
                    if !x.is_finite() {
                        return Err(Error::Parse {
                            row,
                            column: spec.name.clone(),
                            message: format!("{cell:?} is not finite"),
                        });
                    }
                    v.push(x);
                }
                RawColumn::Categorical(v) => v.push(cell.to_string()),
            }
        }
        let label = record.get(label_pos).unwrap_or("");
        let class = schema.class_index(label).ok_or_else(|| Error::Label {
            row,
            label: label.to_string(),
        })?;
        labels.push(class);
        if let (Some(z), Some(pos)) = (zones.as_mut(), zone_pos) {
            z.push(record.get(pos).unwrap_or("").to_string());
        }
    }
    if labels.is_empty() {
        return Err(Error::NoRows);
    }
    Ok(RawTable {
        schema: schema.clone(),
        columns,
        labels,
        zones,
    })
}
