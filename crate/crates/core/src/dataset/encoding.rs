use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

use super::{Dataset, RawColumn, RawTable};

pub const ENCODING_VERSION: u32 = 1;

/// Per-column min-max parameters. Categorical columns are first mapped to
/// their index in a sorted vocabulary and then scaled like numeric ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnEncoding {
    Numeric {
        name: String,
        min: f64,
        max: f64,
    },
    Categorical {
        name: String,
        vocabulary: Vec<String>,
        min: f64,
        max: f64,
    },
}

impl ColumnEncoding {
    pub fn name(&self) -> &str {
        match self {
            ColumnEncoding::Numeric { name, .. } | ColumnEncoding::Categorical { name, .. } => name,
        }
    }

    pub fn range(&self) -> (f64, f64) {
        match self {
            ColumnEncoding::Numeric { min, max, .. } | ColumnEncoding::Categorical { min, max, .. } => (*min, *max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingParams {
    pub version: u32,
    #[serde(default)]
    pub seed: u64,
    pub columns: Vec<ColumnEncoding>,
}

impl EncodingParams {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text)?;
        if p.version != ENCODING_VERSION {
            return Err(Error::Format(format!("unsupported encoding version {}", p.version)));
        }
        for c in &p.columns {
            let (min, max) = c.range();
            if min > max || !min.is_finite() || !max.is_finite() {
                return Err(Error::Format(format!("column {:?} has invalid range", c.name())));
            }
        }
        Ok(p)
    }
}

pub fn fit_encoding(table: &RawTable) -> Result<EncodingParams> {
    if table.is_empty() {
        return Err(Error::NoRows);
    }
    let columns = table
        .columns
        .iter()
        .zip(&table.schema.columns)
        .map(|(col, spec)| match col {
            RawColumn::Numeric(v) => {
                let (min, max) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                    (lo.min(x), hi.max(x))
                });
                ColumnEncoding::Numeric {
                    name: spec.name.clone(),
                    min,
                    max,
                }
            }
            RawColumn::Categorical(v) => {
                let vocabulary: Vec<String> = v.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
                let max = (vocabulary.len() - 1) as f64;
                ColumnEncoding::Categorical {
                    name: spec.name.clone(),
                    vocabulary,
                    min: 0.0,
                    max,
                }
            }
        })
        .collect();
    Ok(EncodingParams {
        version: ENCODING_VERSION,
        seed: 0,
        columns,
    })
}

/// `(x − min)/(max − min)` clamped to `[0, 1]`; zero-range columns map to 0.
#[inline]
pub(crate) fn min_max(x: f64, min: f64, max: f64) -> f64 {
    if max <= min {
        return 0.0;
    }
    ((x - min) / (max - min)).clamp(0.0, 1.0)
}

/// Maps every cell into `[0, 1]`. Unseen categories get the code one past the
/// vocabulary, which clamps to 1.
pub fn apply_encoding(table: &RawTable, params: &EncodingParams) -> Result<Dataset> {
    if table.columns.len() != params.columns.len() {
        return Err(Error::Dimension {
            expected: params.columns.len(),
            actual: table.columns.len(),
        });
    }
    let n = table.len();
    let d = table.columns.len();
    let mut features = Matrix::zeros(n, d);
    for (j, (col, enc)) in table.columns.iter().zip(&params.columns).enumerate() {
        if enc.name() != table.schema.columns[j].name {
            return Err(Error::Schema(format!(
                "encoding column {:?} does not match table column {:?}",
                enc.name(),
                table.schema.columns[j].name
            )));
        }
        match (col, enc) {
            (RawColumn::Numeric(v), ColumnEncoding::Numeric { min, max, .. }) => {
                for (i, &x) in v.iter().enumerate() {
                    features[(i, j)] = min_max(x, *min, *max);
                }
            }
            (
                RawColumn::Categorical(v),
                ColumnEncoding::Categorical {
                    vocabulary, min, max, ..
                },
            ) => {
                for (i, x) in v.iter().enumerate() {
                    let code = vocabulary.binary_search(x).unwrap_or(vocabulary.len());
                    features[(i, j)] = min_max(code as f64, *min, *max);
                }
            }
            _ => {
                return Err(Error::Schema(format!(
                    "column {:?} kind differs between table and encoding",
                    enc.name()
                )))
            }
        }
    }
    let mut data = Dataset::new(features, table.labels.clone(), table.schema.num_classes())?;
    if let Some(z) = &table.zones {
        data = data.with_zones(z.clone())?;
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{parse_csv, ColumnKind, ColumnSpec, FeatureSchema};

    fn table(csv: &str) -> RawTable {
        let schema = FeatureSchema::new(
            vec![
                ColumnSpec {
                    name: "a".into(),
                    kind: ColumnKind::Numeric,
                },
                ColumnSpec {
                    name: "proto".into(),
                    kind: ColumnKind::Categorical,
                },
            ],
            "label",
            vec!["x".into(), "y".into()],
        )
        .unwrap();
        parse_csv(csv.as_bytes(), &schema).unwrap()
    }

    #[test]
    fn fits_extrema_and_sorted_vocabulary() {
        let t = table("a,proto,label\n2,udp,x\n4,tcp,y\n6,udp,x\n");
        let p = fit_encoding(&t).unwrap();
        assert_eq!(
            p.columns[0],
            ColumnEncoding::Numeric {
                name: "a".into(),
                min: 2.0,
                max: 6.0
            }
        );
        assert_eq!(
            p.columns[1],
            ColumnEncoding::Categorical {
                name: "proto".into(),
                vocabulary: vec!["tcp".into(), "udp".into()],
                min: 0.0,
                max: 1.0
            }
        );
        let d = apply_encoding(&t, &p).unwrap();
        assert_eq!(d.features.as_slice(), &[0.0, 1.0, 0.5, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let t = table("a,proto,label\n5,tcp,x\n5,tcp,y\n");
        let p = fit_encoding(&t).unwrap();
        assert_eq!(p.columns[0].range(), (5.0, 5.0));
        let d = apply_encoding(&t, &p).unwrap();
        assert!(d.features.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unseen_values_are_clamped() {
        let train = table("a,proto,label\n0,tcp,x\n10,udp,y\n");
        let p = fit_encoding(&train).unwrap();
        let test = table("a,proto,label\n-5,icmp,x\n15,zzz,y\n");
        let d = apply_encoding(&test, &p).unwrap();
        // "icmp" sorts before "tcp" but is still out of vocabulary
        assert_eq!(d.features.as_slice(), &[0.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let t = table("a,proto,label\n0.1,tcp,x\n0.30000000000000004,udp,y\n");
        let p = fit_encoding(&t).unwrap();
        let json = p.to_json().unwrap();
        assert!(json.contains("\"version\": 1"));
        let back = EncodingParams::from_json(&json).unwrap();
        assert_eq!(back, p);
        let bad = json.replace("\"version\": 1", "\"version\": 9");
        assert!(EncodingParams::from_json(&bad).is_err());
    }
}
