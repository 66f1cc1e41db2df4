//! Hold-out selection of the regularization level.
//!
//! The first `n_train` paths fit the estimator for every `λ` on a log-spaced
//! grid; the remaining paths score each fit by the validation negative
//! log-likelihood `tr(½ A C_valid Aᵀ) - <A, B_valid>`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{OuError, Result};
use crate::ou_process::{DriftMatrix, PathBundle};
use crate::prox::WeightVector;
use crate::solvers::{self, EstimatorResult, PenaltyKind, SolverConfig};
use crate::suffstats::SuffStats;

/// `λ = 10^g` for `g = log10_min, log10_min + step, ..., log10_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CvGridSpec", into = "CvGridSpec")]
pub struct CvGrid {
    log10_min: f64,
    log10_max: f64,
    log10_step: f64,
    values: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct CvGridSpec {
    log10_min: f64,
    log10_max: f64,
    log10_step: f64,
}

impl TryFrom<CvGridSpec> for CvGrid {
    type Error = OuError;
    fn try_from(s: CvGridSpec) -> Result<Self> {
        CvGrid::new(s.log10_min, s.log10_max, s.log10_step)
    }
}

impl From<CvGrid> for CvGridSpec {
    fn from(g: CvGrid) -> Self {
        CvGridSpec {
            log10_min: g.log10_min,
            log10_max: g.log10_max,
            log10_step: g.log10_step,
        }
    }
}

impl Default for CvGrid {
    /// `{10^-8.00, 10^-7.75, ..., 10^-6.00}`.
    fn default() -> Self {
        CvGrid::new(-8.0, -6.0, 0.25).expect("default grid is valid")
    }
}

impl CvGrid {
    pub fn new(log10_min: f64, log10_max: f64, log10_step: f64) -> Result<Self> {
        if !(log10_min.is_finite() && log10_max.is_finite() && log10_step.is_finite()) {
            return Err(OuError::invalid("grid bounds must be finite"));
        }
        if log10_max < log10_min {
            return Err(OuError::invalid("grid maximum below minimum"));
        }
        let span = log10_max - log10_min;
        let count = if span == 0.0 {
            1
        } else {
            if !(log10_step > 0.0) {
                return Err(OuError::invalid("grid step must be positive"));
            }
            (span / log10_step + 1e-9).floor() as usize + 1
        };
        if count > 10_000 {
            return Err(OuError::invalid("grid has more than 10000 points"));
        }
        let values: Vec<f64> = (0..count)
            .map(|k| 10f64.powf(log10_min + k as f64 * log10_step))
            .collect();
        if values.windows(2).any(|p| !(p[0] < p[1])) {
            return Err(OuError::invalid("grid values are not strictly increasing"));
        }
        Ok(Self {
            log10_min,
            log10_max,
            log10_step,
            values,
        })
    }

    /// Single-point grid.
    pub fn single(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(OuError::invalid("single-point grid needs lambda > 0"));
        }
        Self::new(lambda.log10(), lambda.log10(), 1.0)
    }

    /// Ascending λ values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvPenalty {
    L1,
    SortedL1,
}

impl From<CvPenalty> for PenaltyKind {
    fn from(p: CvPenalty) -> Self {
        match p {
            CvPenalty::L1 => PenaltyKind::L1,
            CvPenalty::SortedL1 => PenaltyKind::SortedL1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvScore {
    pub lambda: f64,
    pub validation_loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    /// One entry per grid value, ascending in λ.
    pub per_lambda_scores: Vec<CvScore>,
    pub chosen_lambda: f64,
    pub chosen_result: EstimatorResult,
}

impl CvReport {
    /// Two-column `lambda,score` CSV.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "lambda,score")?;
        for s in &self.per_lambda_scores {
            writeln!(w, "{:e},{:e}", s.lambda, s.validation_loss)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// First `n_train` paths vs the rest, in index order.
pub fn split_paths(paths: &PathBundle, n_train: usize) -> Result<(PathBundle, PathBundle)> {
    if n_train < 1 || n_train >= paths.n_paths() {
        return Err(OuError::invalid(format!(
            "n_train must lie in 1..{}, got {n_train}",
            paths.n_paths()
        )));
    }
    Ok((
        paths.slice_paths(0..n_train)?,
        paths.slice_paths(n_train..paths.n_paths())?,
    ))
}

/// Validation negative log-likelihood of `a` (up to an `A`-free constant).
pub fn validation_score(valid: &SuffStats, a: &DriftMatrix) -> Result<f64> {
    valid.loss_value(a.entries())
}

/// Fit along the grid from the largest λ down, warm-starting each fit at the
/// previous solution, and keep the λ with the smallest validation score.
/// Ties go to the larger λ.
pub fn cross_validate(
    train: &SuffStats,
    valid: &SuffStats,
    grid: &CvGrid,
    penalty: CvPenalty,
    weights: Option<&WeightVector>,
    cfg: &SolverConfig,
) -> Result<CvReport> {
    if train.dim != valid.dim {
        return Err(OuError::invalid(format!(
            "training dimension {} differs from validation dimension {}",
            train.dim, valid.dim
        )));
    }
    match (penalty, weights) {
        (CvPenalty::SortedL1, None) => {
            return Err(OuError::invalid("sorted-l1 cross-validation needs weights"))
        }
        (CvPenalty::L1, Some(_)) => {
            return Err(OuError::invalid("l1 cross-validation takes no weights"))
        }
        _ => {}
    }

    let lambdas = grid.values();
    let mut scores = vec![f64::NAN; lambdas.len()];
    let mut best: Option<(usize, EstimatorResult)> = None;
    let mut warm: Option<DriftMatrix> = None;
    for (idx, &lambda) in lambdas.iter().enumerate().rev() {
        let fit = match (penalty, weights) {
            (CvPenalty::L1, _) => solvers::solve_lasso(train, lambda, cfg, warm.as_ref()),
            (CvPenalty::SortedL1, Some(w)) => {
                solvers::solve_slope(train, lambda, w, cfg, warm.as_ref())
            }
            (CvPenalty::SortedL1, None) => unreachable!(),
        }
        .map_err(|e| e.context(format!("lambda = {lambda:e}")))?;
        let score = validation_score(valid, &fit.estimate)?;
        scores[idx] = score;
        warm = Some(fit.estimate.clone());
        let better = match &best {
            None => true,
            Some((b, _)) => score < scores[*b],
        };
        if better {
            best = Some((idx, fit));
        }
    }
    let (idx, chosen_result) = best.ok_or_else(|| OuError::invalid("empty grid"))?;
    Ok(CvReport {
        per_lambda_scores: lambdas
            .iter()
            .zip(&scores)
            .map(|(&lambda, &validation_loss)| CvScore {
                lambda,
                validation_loss,
            })
            .collect(),
        chosen_lambda: lambdas[idx],
        chosen_result,
    })
}
