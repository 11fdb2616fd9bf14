use crate::error::{Error, Result};
use crate::matrix::Matrix;

const MAX_SWEEPS: usize = 100;
const OFF_DIAGONAL_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-10;

/// Eigenvalues (nonincreasing) and eigenvectors (as columns) of a symmetric
/// matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEigResult {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl SymEigResult {
    /// The `i`-th eigenvector.
    pub fn vector(&self, i: usize) -> Vec<f64> {
        (0..self.vectors.rows()).map(|r| self.vectors[(r, i)]).collect()
    }
}

/// Full eigendecomposition `A = U·diag(λ)·Uᵀ` by cyclic Jacobi rotations.
///
/// Sweeps until the largest off-diagonal magnitude drops below
/// `1e-12·‖A‖_F` (or 100 sweeps). Eigenpairs are sorted by decreasing value,
/// ties keeping their diagonal order, and every eigenvector is signed so its
/// largest-magnitude entry is positive (first such entry on ties).
pub fn eigen_sym(matrix: &Matrix) -> Result<SymEigResult> {
    let n = matrix.rows();
    if matrix.cols() != n {
        return Err(Error::Shape(format!(
            "eigen_sym needs a square matrix, got {}x{}",
            n,
            matrix.cols()
        )));
    }
    if !matrix.is_finite() {
        return Err(Error::NonFinite("eigen_sym input"));
    }
    let norm = matrix.frobenius_norm();
    let mut asym: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            asym = asym.max((matrix[(i, j)] - matrix[(j, i)]).abs());
        }
    }
    if asym > SYMMETRY_TOL * norm.max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }

    let mut a = matrix.clone();
    let mut v = Matrix::identity(n);
    let threshold = OFF_DIAGONAL_TOL * norm;
    for _ in 0..MAX_SWEEPS {
        let mut off: f64 = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[(p, q)].abs());
            }
        }
        if off <= threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                rotate(&mut a, &mut v, p, q, apq);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal eigenvalues keep diagonal order
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, dst)] = v[(r, src)];
        }
    }
    fix_signs(&mut vectors);
    Ok(SymEigResult { values, vectors })
}

/// Applies the rotation that zeroes `a[p][q]`: `A ← JᵀAJ`, `V ← VJ`.
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize, apq: f64) {
    let n = a.rows();
    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        let sign = if theta < 0.0 { -1.0 } else { 1.0 };
        sign / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    for k in 0..n {
        let (akp, akq) = (a[(k, p)], a[(k, q)]);
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let (apk, aqk) = (a[(p, k)], a[(q, k)]);
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for k in 0..n {
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// Relative slack under which two magnitudes count as tied.
const SIGN_TIE_TOL: f64 = 1e-9;

fn fix_signs(vectors: &mut Matrix) {
    let n = vectors.rows();
    for col in 0..vectors.cols() {
        let max = (0..n).map(|r| vectors[(r, col)].abs()).fold(0.0, f64::max);
        let Some(lead) = (0..n).find(|&r| vectors[(r, col)].abs() >= max * (1.0 - SIGN_TIE_TOL)) else {
            continue;
        };
        if vectors[(lead, col)] < 0.0 {
            for r in 0..n {
                vectors[(r, col)] = -vectors[(r, col)];
            }
        }
    }
}
