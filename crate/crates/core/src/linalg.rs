//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{OuError, Result};
use crate::rng;

pub fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|x| x.is_finite())
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigenvalues (ascending) and matching eigenvectors of a symmetric matrix.
pub fn sym_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = nalgebra::SymmetricEigen::new(symmetrize(m));
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Largest singular value.
pub fn op_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// `max_ij |m_ij|`
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

/// Square-root factor `L` with `L Lᵀ = m` for a symmetric PSD matrix.
///
/// Eigenvalues below `1e-12 * λ_max` (including small negative round-off)
/// are clipped to zero.
pub fn psd_sqrt_factor(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !all_finite(m) {
        return Err(OuError::numerical("covariance has non-finite entries"));
    }
    let (values, vectors) = sym_eigen(m);
    let lmax = values.last().copied().unwrap_or(0.0);
    let n = m.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let floor = 1e-12 * lmax.abs();
    if lmax < -floor {
        return Err(OuError::numerical("covariance is negative definite"));
    }
    let mut factor = vectors;
    for (j, &lam) in values.iter().enumerate() {
        let s = if lam > floor { lam.sqrt() } else { 0.0 };
        factor.column_mut(j).scale_mut(s);
    }
    Ok(factor)
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
///
/// The start vector is drawn from a fixed seed so the result is
/// deterministic. Returns the Rayleigh quotient once successive estimates
/// agree to `rel_tol`, or after `max_iter` iterations.
pub fn power_lambda_max(m: &DMatrix<f64>, rel_tol: f64, max_iter: usize) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut gen = rng::seeded(0x5eed_0fc0_ffee);
    let mut v = DVector::from_fn(n, |_, _| 1.0 + 0.1 * gen.sample::<f64, _>(StandardNormal));
    let norm = v.norm();
    v /= norm;
    let mut lambda = v.dot(&(m * &v));
    for _ in 0..max_iter {
        let w = m * &v;
        let wn = w.norm();
        if wn == 0.0 {
            return 0.0;
        }
        v = w / wn;
        let next = v.dot(&(m * &v));
        let done = (next - lambda).abs() <= rel_tol * next.abs();
        lambda = next;
        if done {
            break;
        }
    }
    lambda.max(0.0)
}

/// Serde adapter storing a `DMatrix<f64>` as a list of rows.
pub mod matrix_rows {
    use nalgebra::DMatrix;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
        (0..m.nrows())
            .map(|i| m.row(i).iter().copied().collect())
            .collect()
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>, String> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != ncols) {
            return Err("ragged matrix rows".into());
        }
        Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
    }

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        from_rows(&rows).map_err(D::Error::custom)
    }
}
