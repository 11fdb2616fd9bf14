//! PCA feature reduction: covariance, eigendecomposition, choice of `k` by
//! captured eigenvalue mass, and projection onto the top-`k` subspace.

mod jacobi;

use serde::{Deserialize, Serialize};

use crate::complexity::{MacCounter, Phase};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub use jacobi::{eigen_sym, SymEigResult};

pub const PCA_VERSION: u32 = 1;
pub const DEFAULT_VARIANCE_TARGET: f64 = 0.95;

/// Column means of `data`.
pub fn column_mean(data: &Matrix) -> Vec<f64> {
    let n = data.rows() as f64;
    let mut mean = vec![0.0; data.cols()];
    for row in data.iter_rows() {
        for (m, &x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

fn centered(data: &Matrix, mean: &[f64]) -> Matrix {
    let mut m = data.clone();
    for i in 0..m.rows() {
        for (x, &mu) in m.row_mut(i).iter_mut().zip(mean) {
            *x -= mu;
        }
    }
    m
}

/// `V = (1/N)·MᵀM` with `M` the mean-centred data, symmetrised.
pub fn covariance(data: &Dataset) -> Matrix {
    covariance_counted(&data.features, None)
}

/// As [`covariance`], counting the `N·d²` products of `MᵀM` under
/// [`Phase::Pca`].
pub fn covariance_counted(features: &Matrix, counter: Option<&MacCounter>) -> Matrix {
    let n = features.rows() as f64;
    let m = centered(features, &column_mean(features));
    let mut v = m
        .transposed_matmul(&m, counter, Phase::Pca)
        .expect("MᵀM shapes always agree");
    let d = v.rows();
    for x in v.as_mut_slice() {
        *x /= n;
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let s = 0.5 * (v[(i, j)] + v[(j, i)]);
            v[(i, j)] = s;
            v[(j, i)] = s;
        }
    }
    v
}

/// Fitted feature reducer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub version: u32,
    #[serde(default)]
    pub seed: u64,
    pub mean: Vec<f64>,
    /// All `d` eigenvalues, nonincreasing, negatives clamped to zero.
    pub eigenvalues: Vec<f64>,
    /// `k×d`; row `i` is the `i`-th principal direction.
    pub subspace: Matrix,
    pub k: usize,
    pub captured_ratio: f64,
    pub variance_target: f64,
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn total_variance(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        if m.version != PCA_VERSION {
            return Err(Error::Format(format!("unsupported PCA version {}", m.version)));
        }
        if m.subspace.rows() != m.k || m.subspace.cols() != m.mean.len() || m.eigenvalues.len() != m.mean.len() {
            return Err(Error::Format("PCA model shapes are inconsistent".into()));
        }
        Ok(m)
    }

    /// `(x − x̄)·V_kᵀ` for every row.
    pub fn project_matrix(&self, features: &Matrix) -> Result<Matrix> {
        if features.cols() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                actual: features.cols(),
            });
        }
        centered(features, &self.mean).matmul_transposed(&self.subspace, None, Phase::Pca)
    }
}

pub fn fit_pca(train: &Dataset, variance_target: f64) -> Result<PcaModel> {
    fit_pca_counted(&train.features, variance_target, None)
}

/// Fits the reducer, keeping the smallest `k` whose eigenvalues reach
/// `variance_target` of the total. If the data has no variance at all, `k`
/// is 1 and the direction is the first axis.
pub fn fit_pca_counted(features: &Matrix, variance_target: f64, counter: Option<&MacCounter>) -> Result<PcaModel> {
    if !(variance_target > 0.0 && variance_target <= 1.0) {
        return Err(Error::Config(format!(
            "variance target must be in (0, 1], got {variance_target}"
        )));
    }
    if features.rows() < 2 {
        return Err(Error::Degenerate("PCA needs at least 2 samples".into()));
    }
    if !features.is_finite() {
        return Err(Error::NonFinite("PCA input"));
    }
    let d = features.cols();
    let mean = column_mean(features);
    let cov = covariance_counted(features, counter);
    let eig = eigen_sym(&cov)?;
    let eigenvalues: Vec<f64> = eig.values.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = eigenvalues.iter().sum();

    let (k, captured_ratio, subspace) = if total <= 0.0 {
        let mut s = Matrix::zeros(1, d);
        s[(0, 0)] = 1.0;
        (1, 1.0, s)
    } else {
        let mut cum = 0.0;
        let mut k = d;
        for (i, &l) in eigenvalues.iter().enumerate() {
            cum += l;
            if cum / total >= variance_target {
                k = i + 1;
                break;
            }
        }
        let captured: f64 = eigenvalues[..k].iter().sum::<f64>() / total;
        let mut s = Matrix::zeros(k, d);
        for i in 0..k {
            for j in 0..d {
                s[(i, j)] = eig.vectors[(j, i)];
            }
        }
        (k, captured.min(1.0), s)
    };
    Ok(PcaModel {
        version: PCA_VERSION,
        seed: 0,
        mean,
        eigenvalues,
        subspace,
        k,
        captured_ratio,
        variance_target,
    })
}

/// Projects a dataset to the model's `k` components; labels and zone tags
/// pass through.
pub fn project(model: &PcaModel, data: &Dataset) -> Result<Dataset> {
    let features = model.project_matrix(&data.features)?;
    Ok(Dataset {
        features,
        labels: data.labels.clone(),
        num_classes: data.num_classes,
        zones: data.zones.clone(),
    })
}
