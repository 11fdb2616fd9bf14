use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed::{self, Stream};

use super::{ColumnKind, ColumnSpec, Dataset, FeatureSchema};

/// One Gaussian blob: mean in `[0,1]^d`, isotropic standard deviation and
/// sample count.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSpec {
    pub mean: Vec<f64>,
    pub stddev: f64,
    pub count: usize,
}

/// Gaussian samples clamped to `[0, 1]`, grouped by class in spec order.
pub fn generate_synthetic(specs: &[ClassSpec], seed: u64) -> Result<Dataset> {
    let first = specs
        .first()
        .ok_or_else(|| Error::Config("no class specs given".into()))?;
    let d = first.mean.len();
    if d == 0 {
        return Err(Error::Config("zero-dimensional class mean".into()));
    }
    let mut rng = seed::rng(seed, Stream::Synthetic, &[]);
    let n: usize = specs.iter().map(|s| s.count).sum();
    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for (class, spec) in specs.iter().enumerate() {
        if spec.mean.len() != d {
            return Err(Error::Dimension {
                expected: d,
                actual: spec.mean.len(),
            });
        }
        if spec.count == 0 {
            return Err(Error::Config(format!("empty class {class}")));
        }
        let noise = Normal::new(0.0, spec.stddev)
            .ok()
            .filter(|_| spec.stddev > 0.0)
            .ok_or_else(|| Error::Config(format!("class {class}: stddev must be > 0")))?;
        for _ in 0..spec.count {
            data.extend(spec.mean.iter().map(|&m| (m + noise.sample(&mut rng)).clamp(0.0, 1.0)));
            labels.push(class);
        }
    }
    Dataset::new(Matrix::from_vec(n, d, data)?, labels, specs.len())
}

/// Tags every row with one of `zones` uniformly at random (`"zone-1"` ..).
pub fn assign_zones(data: Dataset, zones: usize, seed: u64) -> Result<Dataset> {
    if zones == 0 {
        return Err(Error::Config("need at least one zone".into()));
    }
    let mut rng = seed::rng(seed, Stream::Zone, &[]);
    let tags = (0..data.len())
        .map(|_| format!("zone-{}", rng.random_range(1..=zones)))
        .collect();
    data.with_zones(tags)
}

/// Schema matching a synthetic dataset: numeric columns `f0..f{d-1}`, label
/// column `label`, classes `class-0..`, zone column `zone` when tagged.
pub fn synthetic_schema(data: &Dataset) -> Result<FeatureSchema> {
    let columns = (0..data.dim())
        .map(|j| ColumnSpec {
            name: format!("f{j}"),
            kind: ColumnKind::Numeric,
        })
        .collect();
    let classes = (0..data.num_classes).map(|c| format!("class-{c}")).collect();
    let schema = FeatureSchema::new(columns, "label", classes)?;
    if data.zones.is_some() {
        schema.with_zone_column("zone")
    } else {
        Ok(schema)
    }
}

/// Writes `data` as CSV under `schema` (feature columns, optional zone column,
/// then the label by class name).
pub fn write_csv<W: std::io::Write>(data: &Dataset, schema: &FeatureSchema, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = schema.columns.iter().map(|c| c.name.as_str()).collect();
    if let Some(z) = &schema.zone_column {
        header.push(z);
    }
    header.push(&schema.label_column);
    w.write_record(&header)?;
    for (i, row) in data.features.iter_rows().enumerate() {
        let mut rec: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        if schema.zone_column.is_some() {
            let z = data
                .zones
                .as_ref()
                .ok_or_else(|| Error::Config("schema has a zone column but data has no zones".into()))?;
            rec.push(z[i].clone());
        }
        rec.push(schema.class_names[data.labels[i]].clone());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Well-separated blobs at distinct hypercube corners scaled into
/// `[0.2, 0.8]`. Needs `classes ≤ 2^dim`.
pub fn corner_specs(classes: usize, dim: usize, per_class: usize, stddev: f64) -> Result<Vec<ClassSpec>> {
    if dim == 0 || (dim < usize::BITS as usize && classes > 1usize << dim) {
        return Err(Error::Config(format!(
            "{classes} classes do not fit on the corners of a {dim}-cube"
        )));
    }
    Ok((0..classes)
        .map(|c| ClassSpec {
            mean: (0..dim).map(|j| if (c >> j) & 1 == 1 { 0.8 } else { 0.2 }).collect(),
            stddev,
            count: per_class,
        })
        .collect())
}
