//! JSON configuration documents accepted by the commands.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sparse_ou::experiments::{generate_drift, ExperimentPlan};
use sparse_ou::model_select::CvGrid;
use sparse_ou::ou_process::Scheme;
use sparse_ou::theory::ConcentrationConfig;
use sparse_ou::{DriftMatrix, InitialLaw, SolverConfig};

use crate::error::CliError;

/// Reads `path` as a `T`, or as the `resolved_config` of a manifest written
/// by an earlier run of `command`.
pub fn load<T: DeserializeOwned>(path: &Path, command: &str) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
    if let Ok(Value::Object(map)) = serde_json::from_str::<Value>(&text) {
        if let (Some(Value::String(cmd)), Some(cfg)) = (map.get("command"), map.get("resolved_config")) {
            if cmd != command {
                return Err(CliError::Config(format!(
                    "{} is the manifest of a `{cmd}` run, expected `{command}`",
                    path.display()
                )));
            }
            return serde_json::from_value(cfg.clone()).map_err(|e| {
                CliError::Config(format!("{}: resolved_config: {e}", path.display()))
            });
        }
    }
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Inline matrix or a seeded sparse random draw.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftSpec {
    Matrix(DriftMatrix),
    Generator(GeneratorSpec),
}

/// Random drift with uniform diagonal and sparse uniform off-diagonal entries.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub dim: usize,
    pub seed: u64,
    #[serde(default = "defaults::diag_range")]
    pub diag_range: (f64, f64),
    #[serde(default = "defaults::offdiag_zero_prob")]
    pub offdiag_zero_prob: f64,
    #[serde(default = "defaults::offdiag_range")]
    pub offdiag_range: (f64, f64),
}

mod defaults {
    use super::ExperimentPlan;

    pub fn diag_range() -> (f64, f64) {
        ExperimentPlan::default().diag_range
    }
    pub fn offdiag_zero_prob() -> f64 {
        ExperimentPlan::default().offdiag_zero_prob
    }
    pub fn offdiag_range() -> (f64, f64) {
        ExperimentPlan::default().offdiag_range
    }
    pub fn terminal() -> f64 {
        1.0
    }
    pub fn kl_paths() -> usize {
        100
    }
}

impl DriftSpec {
    pub fn resolve(&self) -> Result<DriftMatrix, CliError> {
        match self {
            DriftSpec::Matrix(m) => Ok(m.clone()),
            DriftSpec::Generator(g) => {
                let plan = ExperimentPlan {
                    diag_range: g.diag_range,
                    offdiag_zero_prob: g.offdiag_zero_prob,
                    offdiag_range: g.offdiag_range,
                    ..ExperimentPlan::default()
                };
                Ok(generate_drift(g.dim, &plan, g.seed)?)
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub drift: DriftSpec,
    #[serde(default)]
    pub law: InitialLaw,
    pub n_paths: usize,
    pub terminal: f64,
    pub step: f64,
    pub seed: u64,
    #[serde(default)]
    pub scheme: Scheme,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mle,
    Lasso,
    Slope,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub paths: PathBuf,
    pub method: Method,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub grid: Option<CvGrid>,
    /// Training paths for cross-validation; defaults to 80% of the bundle.
    #[serde(default)]
    pub n_train: Option<usize>,
    #[serde(default)]
    pub solver: SolverConfig,
}

/// Square matrix from a list of rows.
fn rows_to_matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>, CliError> {
    let d = rows.len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(CliError::Config(format!("{what} must be a square list of rows")));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CinftyConfig {
    pub drift: DriftSpec,
    /// Covariance of `x(0)`; zero when absent.
    #[serde(default)]
    pub sigma: Option<Vec<Vec<f64>>>,
    #[serde(default = "defaults::terminal")]
    pub terminal: f64,
}

impl CinftyConfig {
    pub fn sigma(&self, dim: usize) -> Result<DMatrix<f64>, CliError> {
        match &self.sigma {
            None => Ok(DMatrix::zeros(dim, dim)),
            Some(rows) => rows_to_matrix(rows, "sigma"),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrationRun {
    pub drift: DriftSpec,
    #[serde(default)]
    pub law: InitialLaw,
    #[serde(default)]
    pub check: ConcentrationConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KlConfig {
    pub a1: DriftMatrix,
    pub a2: DriftMatrix,
    #[serde(default = "defaults::kl_paths")]
    pub n_paths: usize,
    #[serde(default)]
    pub monte_carlo: Option<KlMonteCarloSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KlMonteCarloSpec {
    pub bundles: usize,
    pub step: f64,
    pub seed: u64,
}
