//! Tabular flow records: schema, CSV ingestion, min-max encoding, splitting,
//! zone partitioning, synthetic generation and the `LKE1` binary format.

mod binary;
mod encoding;
mod raw;
mod split;
mod synth;
mod zone;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub use binary::{read_lke, write_lke, LKE_MAGIC};
pub use encoding::{apply_encoding, fit_encoding, ColumnEncoding, EncodingParams};
pub use raw::{parse_csv, RawColumn, RawTable};
pub use split::{split_indices, split_train_test};
pub use synth::{assign_zones, corner_specs, generate_synthetic, synthetic_schema, write_csv, ClassSpec};
pub use zone::{partition_by_zone, zone_groups, ZonePredicate, ZoneRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
}

/// Which CSV columns are features, which one holds the class label, and the
/// ordered class names.
///
/// `zone_column`, when present, is carried through as raw strings so rows can
/// later be partitioned by gateway. It is never a feature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub columns: Vec<ColumnSpec>,
    pub label_column: String,
    pub class_names: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zone_column: Option<String>,
}

impl FeatureSchema {
    pub fn new(columns: Vec<ColumnSpec>, label_column: impl Into<String>, class_names: Vec<String>) -> Result<Self> {
        let schema = Self {
            columns,
            label_column: label_column.into(),
            class_names,
            zone_column: None,
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn with_zone_column(mut self, column: impl Into<String>) -> Result<Self> {
        self.zone_column = Some(column.into());
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.columns.is_empty() {
            return Err(Error::Schema("at least one feature column is required".into()));
        }
        let mut seen = HashSet::new();
        for c in &self.columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column {:?}", c.name)));
            }
        }
        if seen.contains(self.label_column.as_str()) {
            return Err(Error::Schema(format!(
                "label column {:?} is also a feature column",
                self.label_column
            )));
        }
        if let Some(z) = &self.zone_column {
            if seen.contains(z.as_str()) || *z == self.label_column {
                return Err(Error::Schema(format!(
                    "zone column {z:?} must not be a feature or the label"
                )));
            }
        }
        if self.class_names.len() < 2 {
            return Err(Error::Schema("at least two classes are required".into()));
        }
        let mut names = HashSet::new();
        for n in &self.class_names {
            if !names.insert(n.as_str()) {
                return Err(Error::Schema(format!("duplicate class name {n:?}")));
            }
        }
        Ok(())
    }

    /// Feature dimension `d`.
    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    /// Class count `c`.
    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.class_names.iter().position(|c| c == name)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let schema: Self = serde_json::from_str(text)?;
        schema.validate()?;
        Ok(schema)
    }
}

/// Encoded samples: an `N×d` matrix, class indices and the class count.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    /// Raw zone tag per row, when the source carried one.
    pub zones: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if features.rows() == 0 {
            return Err(Error::NoRows);
        }
        if labels.len() != features.rows() {
            return Err(Error::Shape(format!(
                "{} labels for {} rows",
                labels.len(),
                features.rows()
            )));
        }
        if num_classes < 2 {
            return Err(Error::Config("at least two classes are required".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::Config(format!(
                "label {bad} out of range for {num_classes} classes"
            )));
        }
        Ok(Self {
            features,
            labels,
            num_classes,
            zones: None,
        })
    }

    pub fn with_zones(mut self, zones: Vec<String>) -> Result<Self> {
        if zones.len() != self.len() {
            return Err(Error::Shape(format!(
                "{} zone tags for {} rows",
                zones.len(),
                self.len()
            )));
        }
        self.zones = Some(zones);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// Rows at `indices`, in that order. Fails if `indices` is empty.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::NoRows);
        }
        Ok(Self {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
            zones: self
                .zones
                .as_ref()
                .map(|z| indices.iter().map(|&i| z[i].clone()).collect()),
        })
    }

    /// Row-wise concatenation; all parts must share `d` and `c`.
    pub fn concat(parts: &[&Dataset]) -> Result<Self> {
        let first = parts.first().ok_or(Error::NoRows)?;
        let d = first.dim();
        let mut data = Vec::new();
        let mut labels = Vec::new();
        for p in parts {
            if p.dim() != d {
                return Err(Error::Dimension {
                    expected: d,
                    actual: p.dim(),
                });
            }
            if p.num_classes != first.num_classes {
                return Err(Error::Shape("class counts differ".into()));
            }
            data.extend_from_slice(p.features.as_slice());
            labels.extend_from_slice(&p.labels);
        }
        let n = labels.len();
        Dataset::new(Matrix::from_vec(n, d, data)?, labels, first.num_classes)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

/// One simulated gateway's training data.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientShard {
    pub client_id: usize,
    pub data: Dataset,
}

impl ClientShard {
    pub fn new(client_id: usize, data: Dataset) -> Self {
        Self { client_id, data }
    }

    /// Sample count `n_k`.
    pub fn n(&self) -> usize {
        self.data.len()
    }
}
