//! End-to-end simulation study: random sparse drifts, repeated path samples,
//! MLE / CV-Lasso / CV-Slope fits, error metrics and figure data.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{OuError, Result};
use crate::linalg::matrix_rows;
use crate::metrics;
use crate::model_select::{self, CvGrid, CvPenalty};
use crate::ou_process::{simulate_euler, DriftMatrix, InitialLaw};
use crate::prox::slope_weights;
use crate::rng;
use crate::solvers::{self, EstimatorResult, SolverConfig};
use crate::suffstats::compute_suffstats;

const DRIFT_TAG: u64 = 0xd21f_7000;
const PATH_TAG: u64 = 0x9a7_4000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentPlan {
    pub dims: Vec<usize>,
    pub replicates: usize,
    pub n_total: usize,
    pub n_train: usize,
    pub terminal: f64,
    pub step: f64,
    pub grid: CvGrid,
    pub master_seed: u64,
    pub diag_range: (f64, f64),
    pub offdiag_zero_prob: f64,
    pub offdiag_range: (f64, f64),
    pub initial_law: InitialLaw,
    /// Dimensions for which every replicate's matrices are kept.
    pub heatmap_dims: Vec<usize>,
    pub solver: SolverConfig,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            dims: (5..=25).collect(),
            replicates: 10,
            n_total: 500,
            n_train: 400,
            terminal: 1.0,
            step: 0.01,
            grid: CvGrid::default(),
            master_seed: 20_240_615,
            diag_range: (-1.0, 1.0),
            offdiag_zero_prob: 0.8,
            offdiag_range: (-0.5, 0.5),
            initial_law: InitialLaw::Zero,
            heatmap_dims: vec![15],
            solver: SolverConfig::default(),
        }
    }
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() {
            return Err(OuError::invalid("plan has no dimensions"));
        }
        if self.dims.iter().any(|&d| d < 2) {
            return Err(OuError::invalid("all dims must be >= 2"));
        }
        if self.dims.windows(2).any(|w| w[0] >= w[1]) {
            return Err(OuError::invalid("dims must be strictly ascending"));
        }
        if self.replicates < 1 {
            return Err(OuError::invalid("replicates must be >= 1"));
        }
        if !(1..self.n_total).contains(&self.n_train) {
            return Err(OuError::invalid(format!(
                "need 1 <= n_train < n_total, got {} and {}",
                self.n_train, self.n_total
            )));
        }
        crate::ou_process::grid_len(self.terminal, self.step)?;
        if !(0.0..=1.0).contains(&self.offdiag_zero_prob) {
            return Err(OuError::invalid("offdiag_zero_prob must lie in [0, 1]"));
        }
        for (name, (lo, hi)) in [("diag_range", self.diag_range), ("offdiag_range", self.offdiag_range)] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(OuError::invalid(format!("{name} must be a finite (lo, hi) with lo <= hi")));
            }
        }
        self.solver.validate()?;
        for d in &self.dims {
            self.initial_law.validate(Some(*d))?;
        }
        Ok(())
    }

    pub fn drift_seed(&self, d: usize) -> u64 {
        rng::derive_seed(self.master_seed, &[d as u64, DRIFT_TAG])
    }

    pub fn path_seed(&self, d: usize, replicate: usize) -> u64 {
        rng::derive_seed(self.master_seed, &[d as u64, replicate as u64, PATH_TAG])
    }
}

fn uniform(gen: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        gen.random_range(lo..hi)
    }
}

/// Diagonal uniform on `diag_range`; each off-diagonal entry is zero with
/// probability `offdiag_zero_prob`, otherwise uniform on `offdiag_range`.
/// Entries are drawn in row-major order.
pub fn generate_drift(d: usize, plan: &ExperimentPlan, seed: u64) -> Result<DriftMatrix> {
    if d < 2 {
        return Err(OuError::invalid(format!("drift dimension must be >= 2, got {d}")));
    }
    let mut gen = rng::seeded(rng::derive_seed(seed, &[d as u64]));
    let mut a = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            a[(i, j)] = if i == j {
                uniform(&mut gen, plan.diag_range)
            } else if gen.random::<f64>() < plan.offdiag_zero_prob {
                0.0
            } else {
                uniform(&mut gen, plan.offdiag_range)
            };
        }
    }
    DriftMatrix::new(a)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Mle,
    Lasso,
    Slope,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::Mle, Estimator::Lasso, Estimator::Slope];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::Mle => "mle",
            Estimator::Lasso => "lasso",
            Estimator::Slope => "slope",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One (d, replicate, estimator) cell. Metric fields are `None` when
/// `failure` is set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub d: usize,
    pub replicate: usize,
    pub estimator: Estimator,
    pub scaled_l2sq: Option<f64>,
    pub scaled_l1: Option<f64>,
    pub support_f1: Option<f64>,
    pub nonzeros: Option<usize>,
    pub lambda_used: Option<f64>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub runtime_seconds: f64,
    pub failure: Option<String>,
}

impl ExperimentRow {
    pub fn ok(&self) -> bool {
        self.failure.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub d: usize,
    pub replicate: usize,
    #[serde(with = "matrix_rows")]
    pub truth: DMatrix<f64>,
    #[serde(with = "option_rows")]
    pub mle: Option<DMatrix<f64>>,
    #[serde(with = "option_rows")]
    pub lasso: Option<DMatrix<f64>>,
    #[serde(with = "option_rows")]
    pub slope: Option<DMatrix<f64>>,
}

impl Heatmap {
    pub fn estimate(&self, e: Estimator) -> Option<&DMatrix<f64>> {
        match e {
            Estimator::Mle => self.mle.as_ref(),
            Estimator::Lasso => self.lasso.as_ref(),
            Estimator::Slope => self.slope.as_ref(),
        }
    }
}

mod option_rows {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::linalg::matrix_rows;

    pub fn serialize<S: Serializer>(m: &Option<DMatrix<f64>>, s: S) -> Result<S::Ok, S::Error> {
        m.as_ref().map(matrix_rows::to_rows).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<DMatrix<f64>>, D::Error> {
        Option::<Vec<Vec<f64>>>::deserialize(d)?
            .map(|rows| matrix_rows::from_rows(&rows).map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub d: usize,
    pub seed: u64,
    pub drift: DriftMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    /// Ordered by (d, replicate, estimator).
    pub rows: Vec<ExperimentRow>,
    pub heatmaps: Vec<Heatmap>,
    pub truths: Vec<TruthRecord>,
}

impl ExperimentReport {
    /// Fraction of rows without a failure marker.
    pub fn success_fraction(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows.iter().filter(|r| r.ok()).count() as f64 / self.rows.len() as f64
    }

    pub fn truth(&self, d: usize) -> Option<&DriftMatrix> {
        self.truths.iter().find(|t| t.d == d).map(|t| &t.drift)
    }
}

struct Fit {
    estimate: DMatrix<f64>,
    lambda: f64,
    iterations: usize,
    converged: bool,
}

impl From<EstimatorResult> for Fit {
    fn from(r: EstimatorResult) -> Self {
        Fit {
            lambda: r.lambda_used,
            iterations: r.iterations,
            converged: r.converged,
            estimate: r.estimate.into_inner(),
        }
    }
}

fn run_cell(
    plan: &ExperimentPlan,
    truth: &DriftMatrix,
    replicate: usize,
    keep_heatmap: bool,
) -> (Vec<ExperimentRow>, Option<Heatmap>) {
    let d = truth.dim();
    let fits: Vec<(std::result::Result<Fit, String>, f64)> = match prepare(plan, truth, replicate) {
        Err(e) => Estimator::ALL.iter().map(|_| (Err(e.to_string()), 0.0)).collect(),
        Ok((train, valid)) => Estimator::ALL
            .iter()
            .map(|&est| {
                let start = Instant::now();
                let fit = match est {
                    Estimator::Mle => solvers::solve_mle(&train).map(Fit::from),
                    Estimator::Lasso => model_select::cross_validate(
                        &train,
                        &valid,
                        &plan.grid,
                        CvPenalty::L1,
                        None,
                        &plan.solver,
                    )
                    .map(|r| Fit::from(r.chosen_result)),
                    Estimator::Slope => slope_weights(d * d).and_then(|w| {
                        model_select::cross_validate(
                            &train,
                            &valid,
                            &plan.grid,
                            CvPenalty::SortedL1,
                            Some(&w),
                            &plan.solver,
                        )
                        .map(|r| Fit::from(r.chosen_result))
                    }),
                };
                (fit.map_err(|e| e.to_string()), start.elapsed().as_secs_f64())
            })
            .collect(),
    };

    let mut heatmap = keep_heatmap.then(|| Heatmap {
        d,
        replicate,
        truth: truth.entries().clone(),
        mle: None,
        lasso: None,
        slope: None,
    });
    let rows = Estimator::ALL
        .iter()
        .zip(fits)
        .map(|(&estimator, (fit, runtime_seconds))| match fit {
            Ok(fit) => {
                let est = DriftMatrix::new(fit.estimate.clone()).expect("solver output is finite");
                let row = ExperimentRow {
                    d,
                    replicate,
                    estimator,
                    scaled_l2sq: Some(metrics::scaled_l2sq(&fit.estimate, truth.entries())),
                    scaled_l1: Some(metrics::scaled_l1(&fit.estimate, truth.entries())),
                    support_f1: Some(metrics::support_f1(&est, truth, metrics::SUPPORT_THRESHOLD)),
                    nonzeros: Some(metrics::count_nonzero(&fit.estimate, metrics::SUPPORT_THRESHOLD)),
                    lambda_used: Some(fit.lambda),
                    iterations: Some(fit.iterations),
                    converged: Some(fit.converged),
                    runtime_seconds,
                    failure: None,
                };
                if let Some(h) = heatmap.as_mut() {
                    let slot = match estimator {
                        Estimator::Mle => &mut h.mle,
                        Estimator::Lasso => &mut h.lasso,
                        Estimator::Slope => &mut h.slope,
                    };
                    *slot = Some(fit.estimate);
                }
                row
            }
            Err(e) => ExperimentRow {
                d,
                replicate,
                estimator,
                scaled_l2sq: None,
                scaled_l1: None,
                support_f1: None,
                nonzeros: None,
                lambda_used: None,
                iterations: None,
                converged: None,
                runtime_seconds,
                failure: Some(e),
            },
        })
        .collect();
    (rows, heatmap)
}

fn prepare(
    plan: &ExperimentPlan,
    truth: &DriftMatrix,
    replicate: usize,
) -> Result<(crate::SuffStats, crate::SuffStats)> {
    let paths = simulate_euler(
        truth,
        &plan.initial_law,
        plan.n_total,
        plan.terminal,
        plan.step,
        plan.path_seed(truth.dim(), replicate),
    )?;
    let (train, valid) = model_select::split_paths(&paths, plan.n_train)?;
    Ok((compute_suffstats(&train)?, compute_suffstats(&valid)?))
}

/// Runs every (d, replicate) cell in parallel. Per-cell failures become rows
/// with a failure marker; only an invalid plan is an error.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    plan.validate()?;
    let truths = plan
        .dims
        .iter()
        .map(|&d| {
            let seed = plan.drift_seed(d);
            Ok(TruthRecord {
                d,
                seed,
                drift: generate_drift(d, plan, seed)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<(usize, usize)> = (0..truths.len())
        .flat_map(|k| (0..plan.replicates).map(move |r| (k, r)))
        .collect();
    let results: Vec<_> = cells
        .par_iter()
        .map(|&(k, r)| {
            let t = &truths[k];
            run_cell(plan, &t.drift, r, plan.heatmap_dims.contains(&t.d))
        })
        .collect();
    let mut rows = Vec::with_capacity(results.len() * 3);
    let mut heatmaps = Vec::new();
    for (r, h) in results {
        rows.extend(r);
        heatmaps.extend(h);
    }
    Ok(ExperimentReport {
        rows,
        heatmaps,
        truths,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    ScaledL2sq,
    ScaledL1,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::ScaledL2sq, Metric::ScaledL1];

    pub fn name(self) -> &'static str {
        match self {
            Metric::ScaledL2sq => "scaled_l2sq",
            Metric::ScaledL1 => "scaled_l1",
        }
    }

    fn of(self, row: &ExperimentRow) -> Option<f64> {
        match self {
            Metric::ScaledL2sq => row.scaled_l2sq,
            Metric::ScaledL1 => row.scaled_l1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub d: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator; 0 for a single value).
    pub std: f64,
    pub count: usize,
}

/// Per-d mean and standard deviation of `metric` over successful rows.
pub fn curve(report: &ExperimentReport, estimator: Estimator, metric: Metric) -> Vec<CurvePoint> {
    let mut dims: Vec<usize> = report.rows.iter().map(|r| r.d).collect();
    dims.dedup();
    dims.into_iter()
        .filter_map(|d| {
            let xs: Vec<f64> = report
                .rows
                .iter()
                .filter(|r| r.d == d && r.estimator == estimator)
                .filter_map(|r| metric.of(r))
                .collect();
            if xs.is_empty() {
                return None;
            }
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let std = if xs.len() > 1 {
                (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            Some(CurvePoint {
                d,
                mean,
                std,
                count: xs.len(),
            })
        })
        .collect()
}

fn opt<T: fmt::Display>(x: &Option<T>) -> String {
    x.as_ref().map(|v| v.to_string()).unwrap_or_default()
}

fn write_matrix(path: &Path, m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for i in 0..m.nrows() {
        let line: Vec<String> = (0..m.ncols()).map(|j| f(m[(i, j)]).to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes figure data under `out_dir`:
///
/// * `curve_{metric}_{estimator}.csv` with columns `d,mean,std`
/// * `rows.csv`, all rows without timing columns
/// * `heatmap_d{d}_r{rep}_{truth|mle|lasso|slope}.csv` and matching
///   `*_display.csv` files scaled by [`metrics::display_scale`]
///
/// Returns the files written, in write order.
pub fn export_figure_data(report: &ExperimentReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if report.rows.is_empty() {
        return Err(OuError::invalid("experiment report is empty"));
    }
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    for metric in Metric::ALL {
        for est in Estimator::ALL {
            let path = out_dir.join(format!("curve_{}_{}.csv", metric.name(), est.name()));
            let mut w = BufWriter::new(fs::File::create(&path)?);
            writeln!(w, "d,mean,std")?;
            for p in curve(report, est, metric) {
                writeln!(w, "{},{},{}", p.d, p.mean, p.std)?;
            }
            w.flush()?;
            written.push(path);
        }
    }

    let path = out_dir.join("rows.csv");
    let mut w = BufWriter::new(fs::File::create(&path)?);
    writeln!(
        w,
        "d,replicate,estimator,scaled_l2sq,scaled_l1,support_f1,nonzeros,lambda_used,iterations,converged,status"
    )?;
    for r in &report.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.d,
            r.replicate,
            r.estimator,
            opt(&r.scaled_l2sq),
            opt(&r.scaled_l1),
            opt(&r.support_f1),
            opt(&r.nonzeros),
            opt(&r.lambda_used),
            opt(&r.iterations),
            opt(&r.converged),
            if r.ok() { "ok" } else { "failed" }
        )?;
    }
    w.flush()?;
    written.push(path);

    for h in &report.heatmaps {
        let mut mats = vec![("truth", Some(&h.truth))];
        mats.extend(Estimator::ALL.iter().map(|&e| (e.name(), h.estimate(e))));
        for (name, m) in mats {
            let Some(m) = m else { continue };
            let stem = format!("heatmap_d{}_r{}_{}", h.d, h.replicate, name);
            let raw = out_dir.join(format!("{stem}.csv"));
            write_matrix(&raw, m, |x| x)?;
            written.push(raw);
            let disp = out_dir.join(format!("{stem}_display.csv"));
            write_matrix(&disp, m, metrics::display_scale)?;
            written.push(disp);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_plan() -> ExperimentPlan {
        ExperimentPlan {
            dims: vec![3, 4],
            replicates: 2,
            n_total: 60,
            n_train: 40,
            heatmap_dims: vec![4],
            ..ExperimentPlan::default()
        }
    }

    #[test]
    fn default_plan_matches_protocol() {
        let p = ExperimentPlan::default();
        assert_eq!(p.dims.len(), 21);
        assert_eq!(p.dims.len() * p.replicates * 3, 630);
        assert_eq!((p.n_total, p.n_train), (500, 400));
        assert_eq!(p.grid.values().len(), 9);
        p.validate().unwrap();
    }

    #[test]
    fn plan_validation() {
        let mut p = small_plan();
        p.n_train = 60;
        assert!(p.validate().is_err());
        let mut p = small_plan();
        p.dims = vec![1, 3];
        assert!(p.validate().is_err());
        let mut p = small_plan();
        p.offdiag_zero_prob = 1.5;
        assert!(p.validate().is_err());
    }

    #[test]
    fn plan_json_fills_defaults_and_rejects_unknown() {
        let p: ExperimentPlan = serde_json::from_str(r#"{"dims": [5], "replicates": 1}"#).unwrap();
        assert_eq!(p.n_total, 500);
        assert_eq!(p.dims, vec![5]);
        assert!(serde_json::from_str::<ExperimentPlan>(r#"{"dimz": [5]}"#).is_err());
        let back: ExperimentPlan = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn drift_entries_respect_ranges() {
        let p = ExperimentPlan::default();
        for d in [2, 5, 15, 25] {
            let a = generate_drift(d, &p, 9).unwrap();
            for i in 0..d {
                for j in 0..d {
                    let x = a.entries()[(i, j)];
                    if i == j {
                        assert!(x.abs() <= 1.0);
                    } else {
                        assert!(x.abs() <= 0.5);
                    }
                }
            }
            assert_eq!(a, generate_drift(d, &p, 9).unwrap());
        }
        assert!(generate_drift(1, &p, 9).is_err());
    }

    #[test]
    fn drift_sparsity_near_expectation() {
        let p = ExperimentPlan::default();
        let d = 15;
        let a = generate_drift(d, &p, p.drift_seed(d)).unwrap();
        let off = (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j && a.entries()[(i, j)] != 0.0)
            .count() as f64;
        let bound = 3.0 * (0.16 * (d * (d - 1)) as f64).sqrt();
        assert!((off - 42.0).abs() <= bound, "{off} off-diagonal nonzeros");
    }

    #[test]
    fn single_cell_plan_gives_three_rows() {
        let plan = ExperimentPlan {
            dims: vec![5],
            replicates: 1,
            heatmap_dims: vec![],
            ..ExperimentPlan::default()
        };
        let report = run_experiment(&plan).unwrap();
        assert_eq!(report.rows.len(), 3);
        assert!(report.rows.iter().all(|r| r.ok()));
        assert!(report.heatmaps.is_empty());
    }

    #[test]
    fn rows_are_ordered_and_consistent_with_heatmaps() {
        let report = run_experiment(&small_plan()).unwrap();
        assert_eq!(report.rows.len(), 2 * 2 * 3);
        let keys: Vec<_> = report.rows.iter().map(|r| (r.d, r.replicate, r.estimator)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert_eq!(report.heatmaps.len(), 2);
        for h in &report.heatmaps {
            assert_eq!(&h.truth, report.truth(4).unwrap().entries());
            for e in Estimator::ALL {
                let row = report
                    .rows
                    .iter()
                    .find(|r| r.d == h.d && r.replicate == h.replicate && r.estimator == e)
                    .unwrap();
                let m = h.estimate(e).unwrap();
                let direct: f64 = (m - &h.truth).iter().map(|x| x * x).sum::<f64>() / h.d as f64;
                assert!((row.scaled_l2sq.unwrap() - direct).abs() <= 1e-12 * (1.0 + direct));
            }
        }
    }

    #[test]
    fn rerun_is_identical_up_to_timing() {
        let strip = |mut r: ExperimentReport| {
            for row in &mut r.rows {
                row.runtime_seconds = 0.0;
            }
            r
        };
        let a = strip(run_experiment(&small_plan()).unwrap());
        let b = strip(run_experiment(&small_plan()).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn export_writes_expected_files() {
        let report = run_experiment(&small_plan()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = export_figure_data(&report, dir.path()).unwrap();
        let curves: Vec<_> = files
            .iter()
            .filter(|p| p.file_name().unwrap().to_str().unwrap().starts_with("curve_"))
            .collect();
        assert_eq!(curves.len(), 6);
        for c in curves {
            let text = fs::read_to_string(c).unwrap();
            assert_eq!(text.lines().next(), Some("d,mean,std"));
            assert_eq!(text.lines().count(), 1 + 2);
        }
        // 2 replicates x 4 matrices x (raw + display)
        let heat = files
            .iter()
            .filter(|p| p.file_name().unwrap().to_str().unwrap().starts_with("heatmap_"))
            .count();
        assert_eq!(heat, 16);
        assert!(files.iter().all(|p| p.exists()));
    }

    #[test]
    fn empty_report_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let empty = ExperimentReport {
            rows: vec![],
            heatmaps: vec![],
            truths: vec![],
        };
        assert!(export_figure_data(&empty, &dir.path().join("x")).is_err());
        assert!(!dir.path().join("x").exists());
    }
}
