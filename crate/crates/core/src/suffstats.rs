//! Sufficient statistics of the OU log-likelihood.
//!
//! With left-point (Itô) sums over the grid,
//!
//! ```text
//! C_hat = (1/N) Σ_i Σ_k δ x_i(t_k) x_i(t_k)ᵀ
//! B_hat = (1/N) Σ_i Σ_k (x_i(t_{k+1}) - x_i(t_k)) x_i(t_k)ᵀ
//! ```
//!
//! and the scaled negative log-likelihood is, up to an `A`-independent
//! constant, `tr(½ A C_hat Aᵀ) - <A, B_hat>`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{OuError, Result};
use crate::linalg::{self, matrix_rows};
use crate::ou_process::{DriftMatrix, PathBundle};

/// Paths per leaf block below which the reduction tree is walked serially.
/// Only affects scheduling, never the summation order.
const SERIAL_BELOW: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuffStats {
    pub dim: usize,
    #[serde(with = "matrix_rows")]
    pub c_hat: DMatrix<f64>,
    #[serde(with = "matrix_rows")]
    pub b_hat: DMatrix<f64>,
    pub n_paths: usize,
    pub terminal: f64,
    pub step: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossReport {
    pub value: f64,
    pub gradient: DMatrix<f64>,
    /// `λ_max(C_hat)`, the Lipschitz constant of the gradient.
    pub lipschitz: f64,
}

fn path_contribution(paths: &PathBundle, i: usize) -> Vec<f64> {
    let d = paths.dim();
    let delta = paths.step();
    let mut acc = vec![0.0; 2 * d * d];
    let (c, b) = acc.split_at_mut(d * d);
    for k in 0..paths.grid_len() - 1 {
        let x = paths.state(i, k);
        let y = paths.state(i, k + 1);
        for r in 0..d {
            let inc = y[r] - x[r];
            let xr = x[r] * delta;
            for s in 0..d {
                c[r * d + s] += xr * x[s];
                b[r * d + s] += inc * x[s];
            }
        }
    }
    acc
}

fn tree_sum(paths: &PathBundle, lo: usize, hi: usize) -> Vec<f64> {
    if hi - lo == 1 {
        return path_contribution(paths, lo);
    }
    let mid = lo + (hi - lo) / 2;
    let (mut left, right) = if hi - lo > SERIAL_BELOW {
        rayon::join(|| tree_sum(paths, lo, mid), || tree_sum(paths, mid, hi))
    } else {
        (tree_sum(paths, lo, mid), tree_sum(paths, mid, hi))
    };
    for (l, r) in left.iter_mut().zip(&right) {
        *l += r;
    }
    left
}

/// Reduce a bundle to `(C_hat, B_hat)`.
///
/// Paths are combined by a fixed binary tree over path indices, so the result
/// is bit-identical for any number of worker threads.
pub fn compute_suffstats(paths: &PathBundle) -> Result<SuffStats> {
    if paths.grid_len() < 2 {
        return Err(OuError::invalid("need at least two grid points"));
    }
    let d = paths.dim();
    let n = paths.n_paths();
    let sums = tree_sum(paths, 0, n);
    let inv_n = 1.0 / n as f64;
    let mut c_hat = DMatrix::from_fn(d, d, |r, s| sums[r * d + s] * inv_n);
    // exact symmetry; the two triangles are accumulated identically anyway
    c_hat = linalg::symmetrize(&c_hat);
    let b_hat = DMatrix::from_fn(d, d, |r, s| sums[d * d + r * d + s] * inv_n);
    Ok(SuffStats {
        dim: d,
        c_hat,
        b_hat,
        n_paths: n,
        terminal: paths.terminal(),
        step: paths.step(),
    })
}

impl SuffStats {
    /// Build statistics directly, e.g. for replaying a solver run.
    pub fn from_matrices(
        c_hat: DMatrix<f64>,
        b_hat: DMatrix<f64>,
        n_paths: usize,
        terminal: f64,
        step: f64,
    ) -> Result<Self> {
        let d = c_hat.nrows();
        if !c_hat.is_square() || b_hat.shape() != (d, d) || d == 0 {
            return Err(OuError::invalid("statistics must be matching square matrices"));
        }
        let stats = Self {
            dim: d,
            c_hat,
            b_hat,
            n_paths,
            terminal,
            step,
        };
        stats.validate()?;
        Ok(stats)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim;
        if self.c_hat.shape() != (d, d) || self.b_hat.shape() != (d, d) {
            return Err(OuError::invalid("statistics shape disagrees with dim"));
        }
        if !linalg::all_finite(&self.c_hat) || !linalg::all_finite(&self.b_hat) {
            return Err(OuError::invalid("statistics have non-finite entries"));
        }
        let scale = linalg::max_abs(&self.c_hat).max(f64::MIN_POSITIVE);
        if linalg::max_abs(&(&self.c_hat - self.c_hat.transpose())) > 1e-10 * scale {
            return Err(OuError::invalid("c_hat is not symmetric"));
        }
        let trace = self.c_hat.trace();
        let (vals, _) = linalg::sym_eigen(&self.c_hat);
        if vals.first().is_some_and(|&l| l < -1e-10 * trace.abs()) {
            return Err(OuError::invalid("c_hat is not positive semidefinite"));
        }
        Ok(())
    }

    fn check_dim(&self, a: &DMatrix<f64>) -> Result<()> {
        if a.shape() != (self.dim, self.dim) {
            return Err(OuError::invalid(format!(
                "matrix is {}x{}, statistics have dimension {}",
                a.nrows(),
                a.ncols(),
                self.dim
            )));
        }
        Ok(())
    }

    /// `tr(½ A C Aᵀ) - <A, B>`; no dimension check.
    pub(crate) fn value_unchecked(&self, a: &DMatrix<f64>) -> f64 {
        let ac = a * &self.c_hat;
        0.5 * ac.dot(a) - a.dot(&self.b_hat)
    }

    /// `A C - B`; no dimension check.
    pub(crate) fn gradient_unchecked(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        a * &self.c_hat - &self.b_hat
    }

    pub fn loss_value(&self, a: &DMatrix<f64>) -> Result<f64> {
        self.check_dim(a)?;
        Ok(self.value_unchecked(a))
    }

    pub fn loss_gradient(&self, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_dim(a)?;
        Ok(self.gradient_unchecked(a))
    }

    /// `λ_max(C_hat)` by deterministic power iteration.
    pub fn lipschitz(&self) -> f64 {
        linalg::power_lambda_max(&self.c_hat, 1e-8, 10 * self.dim)
    }

    /// `tr(A C_hat Aᵀ)`, the discretized `(1/N) Σ_i ||A x_i||²_{L²}`.
    pub fn quadratic_form(&self, a: &DMatrix<f64>) -> Result<f64> {
        self.check_dim(a)?;
        Ok((a * &self.c_hat).dot(a))
    }
}

/// Loss value, gradient and Lipschitz constant at `a`.
pub fn loss(stats: &SuffStats, a: &DriftMatrix) -> Result<LossReport> {
    let m = a.entries();
    stats.check_dim(m)?;
    Ok(LossReport {
        value: stats.value_unchecked(m),
        gradient: stats.gradient_unchecked(m),
        lipschitz: stats.lipschitz(),
    })
}

/// `B_hat - A₀ C_hat`: the empirical noise integral `(1/N) Σ_i ∫ dw_i x_iᵀ`
/// (discretized), available when the generating drift is known.
pub fn martingale_term(stats: &SuffStats, true_drift: &DriftMatrix) -> Result<DMatrix<f64>> {
    let a = true_drift.entries();
    stats.check_dim(a)?;
    Ok(&stats.b_hat - a * &stats.c_hat)
}
