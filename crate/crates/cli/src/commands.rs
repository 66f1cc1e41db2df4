use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sparse_ou::experiments::{curve, export_figure_data, run_experiment, Estimator, ExperimentPlan, Metric};
use sparse_ou::model_select::{cross_validate, split_paths, CvGrid, CvPenalty};
use sparse_ou::ou_process::io::{load_bundle, save_bundle};
use sparse_ou::ou_process::PathSampler;
use sparse_ou::prox::slope_weights;
use sparse_ou::solvers::{solve_lasso, solve_mle, solve_slope};
use sparse_ou::suffstats::compute_suffstats;
use sparse_ou::theory::{
    check_concentration, compute_c_infty, kl_between, kl_monte_carlo, rate_sweep, KlMonteCarlo,
    RateConfig,
};
use sparse_ou::EstimatorResult;

use crate::config::{
    load, CinftyConfig, ConcentrationRun, EstimateConfig, KlConfig, Method, SimulateConfig,
};
use crate::error::{CliError, EXIT_PARTIAL};
use crate::manifest::{sidecar, write_json, Recorder};

/// Minimum fraction of successful cells for `reproduce` to exit cleanly.
const MIN_SUCCESS: f64 = 0.9;

pub fn simulate(config: &Path, out: &Path) -> Result<u8, CliError> {
    let rec = Recorder::start("simulate");
    let cfg: SimulateConfig = load(config, rec.command())?;
    let drift = cfg.drift.resolve()?;
    let sampler = PathSampler::new(&drift, &cfg.law, cfg.terminal, cfg.step, cfg.scheme)?;
    let bundle = sampler.simulate(cfg.n_paths, cfg.seed)?;
    save_bundle(&bundle, out)?;
    println!(
        "wrote {} paths x {} grid points x {} dims to {}",
        bundle.n_paths(),
        bundle.grid_len(),
        bundle.dim(),
        out.display()
    );
    rec.finish(&sidecar(out, "manifest.json"), &cfg, cfg.seed, vec![out.to_path_buf()], vec![])?;
    Ok(0)
}

/// Flags of `estimate` when no config file is given.
pub struct EstimateFlags {
    pub paths: Option<PathBuf>,
    pub method: Option<Method>,
    pub lambda: Option<f64>,
    pub grid: Option<CvGrid>,
    pub n_train: Option<usize>,
}

pub fn estimate(config: Option<&Path>, flags: EstimateFlags, out: &Path) -> Result<u8, CliError> {
    let rec = Recorder::start("estimate");
    let cfg = match config {
        Some(path) => load::<EstimateConfig>(path, rec.command())?,
        None => EstimateConfig {
            paths: flags
                .paths
                .ok_or_else(|| CliError::Config("--paths is required".into()))?,
            method: flags
                .method
                .ok_or_else(|| CliError::Config("--method is required".into()))?,
            lambda: flags.lambda,
            grid: flags.grid,
            n_train: flags.n_train,
            solver: Default::default(),
        },
    };
    match (cfg.method, cfg.lambda.is_some(), cfg.grid.is_some()) {
        (Method::Mle, false, false) => {}
        (Method::Mle, _, _) => {
            return Err(CliError::Config("mle takes neither a lambda nor a grid".into()))
        }
        (_, true, true) => {
            return Err(CliError::Config("give either a lambda or a grid, not both".into()))
        }
        (m, false, false) => {
            return Err(CliError::Config(format!("{m:?} needs a lambda or a grid").to_lowercase()))
        }
        _ => {}
    }
    if cfg.n_train.is_some() && cfg.grid.is_none() {
        return Err(CliError::Config("n_train only applies with a grid".into()));
    }

    let bundle = load_bundle(&cfg.paths)?;
    let mut outputs = vec![out.to_path_buf()];
    let d = bundle.dim();
    let weights = match cfg.method {
        Method::Slope => Some(slope_weights(d * d)?),
        _ => None,
    };
    let result: EstimatorResult = match (&cfg.grid, cfg.lambda) {
        (Some(grid), _) => {
            let n = bundle.n_paths();
            let n_train = cfg.n_train.unwrap_or(n * 4 / 5);
            let (train, valid) = split_paths(&bundle, n_train)?;
            let (train, valid) = (compute_suffstats(&train)?, compute_suffstats(&valid)?);
            let penalty = match cfg.method {
                Method::Slope => CvPenalty::SortedL1,
                _ => CvPenalty::L1,
            };
            let report = cross_validate(&train, &valid, grid, penalty, weights.as_ref(), &cfg.solver)?;
            let cv_json = sidecar(out, "cv.json");
            write_json(&cv_json, &report)?;
            let cv_csv = sidecar(out, "cv.csv");
            let file = fs::File::create(&cv_csv).map_err(|e| CliError::io(cv_csv.display(), e))?;
            report.write_csv(BufWriter::new(file))?;
            println!("chosen lambda {:e} on {n_train} training paths", report.chosen_lambda);
            outputs.extend([cv_json, cv_csv]);
            report.chosen_result
        }
        (None, lambda) => {
            let stats = compute_suffstats(&bundle)?;
            match (cfg.method, lambda) {
                (Method::Mle, _) => solve_mle(&stats)?,
                (Method::Lasso, Some(l)) => solve_lasso(&stats, l, &cfg.solver, None)?,
                (Method::Slope, Some(l)) => {
                    solve_slope(&stats, l, weights.as_ref().expect("slope weights"), &cfg.solver, None)?
                }
                _ => unreachable!("flag combinations checked above"),
            }
        }
    };
    write_json(out, &result)?;
    println!(
        "{:?}: converged={} iterations={} nonzeros={}",
        cfg.method,
        result.converged,
        result.iterations,
        result.estimate.nnz()
    );
    if !result.converged {
        eprintln!("warning: solver stopped at max_iters before meeting its tolerance");
    }
    rec.finish(&sidecar(out, "manifest.json"), &cfg, bundle.seed(), outputs, vec![])?;
    Ok(0)
}

fn ensure_writable_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"").map_err(|e| CliError::io(dir.display(), e))?;
    fs::remove_file(&probe).map_err(|e| CliError::io(probe.display(), e))
}

pub fn reproduce(plan_path: Option<&Path>, out_dir: &Path) -> Result<u8, CliError> {
    let rec = Recorder::start("reproduce");
    let plan: ExperimentPlan = match plan_path {
        Some(p) => load(p, rec.command())?,
        None => ExperimentPlan::default(),
    };
    plan.validate()?;
    ensure_writable_dir(out_dir)?;

    let report = run_experiment(&plan)?;
    let outputs = export_figure_data(&report, out_dir)?;

    let curves: Vec<_> = Estimator::ALL
        .iter()
        .map(|&e| curve(&report, e, Metric::ScaledL2sq))
        .collect();
    println!("mean d^-1 scaled squared l2 error");
    println!("{:>4} {:>12} {:>12} {:>12}", "d", "mle", "lasso", "slope");
    for &d in &plan.dims {
        let cell = |k: usize| {
            curves[k]
                .iter()
                .find(|p| p.d == d)
                .map_or("-".to_string(), |p| format!("{:.4e}", p.mean))
        };
        println!("{d:>4} {:>12} {:>12} {:>12}", cell(0), cell(1), cell(2));
    }

    let failures: Vec<String> = report
        .rows
        .iter()
        .filter_map(|r| {
            r.failure
                .as_ref()
                .map(|f| format!("d={} replicate={} {}: {f}", r.d, r.replicate, r.estimator))
        })
        .collect();
    let frac = report.success_fraction();
    rec.finish(&out_dir.join("manifest.json"), &plan, plan.master_seed, outputs, failures)?;
    if frac < MIN_SUCCESS {
        eprintln!("only {:.1}% of cells succeeded, see manifest.json", 100.0 * frac);
        return Ok(EXIT_PARTIAL);
    }
    Ok(0)
}

pub fn theory_cinfty(config: &Path, out: &Path) -> Result<u8, CliError> {
    let rec = Recorder::start("theory cinfty");
    let cfg: CinftyConfig = load(config, rec.command())?;
    let drift = cfg.drift.resolve()?;
    let q = compute_c_infty(&drift, &cfg.sigma(drift.dim())?, cfg.terminal)?;
    println!("c_infty:");
    for i in 0..q.c_infty.nrows() {
        let row: Vec<String> = q.c_infty.row(i).iter().map(|x| format!("{x:.10}")).collect();
        println!("  {}", row.join(" "));
    }
    println!("kappa_min {:.10}  kappa_max {:.10}", q.kappa_min, q.kappa_max);
    write_json(out, &q)?;
    rec.finish(&sidecar(out, "manifest.json"), &cfg, 0, vec![out.to_path_buf()], vec![])?;
    Ok(0)
}

pub fn theory_concentration(config: &Path, out: &Path) -> Result<u8, CliError> {
    let rec = Recorder::start("theory concentration");
    let cfg: ConcentrationRun = load(config, rec.command())?;
    let drift = cfg.drift.resolve()?;
    let report = check_concentration(&drift, &cfg.law, &cfg.check)?;
    println!("{:>8} {:>14} {:>10}", "N", "mean_dev", "sandwich");
    for p in &report.points {
        println!("{:>8} {:>14.6e} {:>10.3}", p.n_paths, p.mean_deviation, p.sandwich_frequency);
    }
    write_json(out, &report)?;
    rec.finish(&sidecar(out, "manifest.json"), &cfg, cfg.check.seed, vec![out.to_path_buf()], vec![])?;
    Ok(0)
}

pub fn theory_rate(config: &Path, out: &Path) -> Result<u8, CliError> {
    let rec = Recorder::start("theory rate");
    let cfg: RateConfig = load(config, rec.command())?;
    let report = rate_sweep(&cfg)?;
    println!("{:>8} {:>14} {:>14}", "N", "mean_error", "psi");
    for p in &report.points {
        println!("{:>8} {:>14.6e} {:>14.6e}", p.n_paths, p.mean_error, p.psi);
    }
    println!(
        "fitted exponent {:.4} (expected {})",
        report.fitted_exponent, report.expected_exponent
    );
    write_json(out, &report)?;
    rec.finish(&sidecar(out, "manifest.json"), &cfg, cfg.seed, vec![out.to_path_buf()], vec![])?;
    Ok(0)
}

#[derive(Serialize)]
struct KlReport {
    n_paths: usize,
    kl: f64,
    monte_carlo: Option<KlMonteCarlo>,
}

pub fn theory_kl(config: &Path, out: &Path) -> Result<u8, CliError> {
    let rec = Recorder::start("theory kl");
    let cfg: KlConfig = load(config, rec.command())?;
    let kl = kl_between(&cfg.a1, &cfg.a2, cfg.n_paths)?;
    let monte_carlo = match &cfg.monte_carlo {
        Some(mc) => Some(kl_monte_carlo(&cfg.a1, &cfg.a2, cfg.n_paths, mc.bundles, mc.step, mc.seed)?),
        None => None,
    };
    println!("kl {kl:.10}");
    if let Some(mc) = &monte_carlo {
        println!("monte carlo {:.10} +- {:.3e}", mc.mean, mc.std_error);
    }
    write_json(
        out,
        &KlReport {
            n_paths: cfg.n_paths,
            kl,
            monte_carlo,
        },
    )?;
    let seed = cfg.monte_carlo.as_ref().map_or(0, |m| m.seed);
    rec.finish(&sidecar(out, "manifest.json"), &cfg, seed, vec![out.to_path_buf()], vec![])?;
    Ok(0)
}
