//! `sparse-ou`: simulate OU paths, fit sparse drift estimators, reproduce the
//! dimension study and run the theory checks.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sparse_ou::model_select::CvGrid;

use crate::commands::EstimateFlags;
use crate::config::Method;

#[derive(Parser)]
#[command(name = "sparse-ou", version, about = "Sparse drift estimation for Ornstein-Uhlenbeck paths")]
struct Cli {
    /// Worker threads; defaults to the number of cores. Results do not depend on it.
    #[arg(long, global = true, env = "SPARSE_OU_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate i.i.d. paths from a JSON config into a binary path bundle.
    Simulate {
        /// JSON config (or the manifest of an earlier simulate run).
        #[arg(long)]
        config: PathBuf,
        /// Output bundle file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the MLE, Lasso or Slope estimator to a path bundle.
    Estimate {
        /// JSON estimate config or manifest; replaces the method flags.
        #[arg(long, conflicts_with_all = ["paths", "method", "lambda", "grid", "grid_range", "n_train"])]
        config: Option<PathBuf>,
        /// Path bundle written by `simulate`.
        #[arg(long, required_unless_present = "config")]
        paths: Option<PathBuf>,
        /// Estimator.
        #[arg(long, value_enum, required_unless_present = "config")]
        method: Option<Method>,
        /// Fixed penalty level.
        #[arg(long, conflicts_with_all = ["grid", "grid_range"])]
        lambda: Option<f64>,
        /// Cross-validate over the default log10 grid -8:-6:0.25.
        #[arg(long)]
        grid: bool,
        /// Cross-validate over the log10 grid MIN:MAX:STEP instead of the default.
        #[arg(long, allow_hyphen_values = true, value_parser = parse_grid, value_name = "MIN:MAX:STEP")]
        grid_range: Option<CvGrid>,
        /// Training paths for cross-validation (default: 80% of the bundle).
        #[arg(long)]
        n_train: Option<usize>,
        /// Output JSON with the fitted estimator.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the replicated dimension study and export figure data.
    Reproduce {
        /// Plan JSON or manifest; missing fields take the study defaults.
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Population quantities and Monte Carlo checks of the theory.
    Theory {
        #[command(subcommand)]
        check: TheoryCommand,
    },
}

#[derive(Subcommand)]
enum TheoryCommand {
    /// Population second moment C∞ and its extreme eigenvalues.
    Cinfty {
        /// JSON config with `drift`, optional `sigma` and `terminal`.
        #[arg(long)]
        config: PathBuf,
        /// Output JSON report.
        #[arg(long)]
        out: PathBuf,
    },
    /// Concentration of the empirical second moment around C∞.
    Concentration {
        /// JSON config with `drift`, optional `law` and `check`.
        #[arg(long)]
        config: PathBuf,
        /// Output JSON report.
        #[arg(long)]
        out: PathBuf,
    },
    /// Error of cross-validated Lasso against the number of paths.
    Rate {
        /// JSON rate-sweep config.
        #[arg(long)]
        config: PathBuf,
        /// Output JSON report.
        #[arg(long)]
        out: PathBuf,
    },
    /// KL divergence between two path laws, optionally by Monte Carlo.
    Kl {
        /// JSON config with `a1`, `a2`, optional `n_paths` and `monte_carlo`.
        #[arg(long)]
        config: PathBuf,
        /// Output JSON report.
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_grid(s: &str) -> Result<CvGrid, String> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [lo, hi, step] => CvGrid::new(lo, hi, step).map_err(|e| e.to_string()),
        _ => Err("expected MIN:MAX:STEP".into()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match cli.command {
        Command::Simulate { config, out } => commands::simulate(&config, &out),
        Command::Estimate {
            config,
            paths,
            method,
            lambda,
            grid,
            grid_range,
            n_train,
            out,
        } => commands::estimate(
            config.as_deref(),
            EstimateFlags {
                paths,
                method,
                lambda,
                grid: grid_range.or(grid.then(CvGrid::default)),
                n_train,
            },
            &out,
        ),
        Command::Reproduce { plan, out } => commands::reproduce(plan.as_deref(), &out),
        Command::Theory { check } => match check {
            TheoryCommand::Cinfty { config, out } => commands::theory_cinfty(&config, &out),
            TheoryCommand::Concentration { config, out } => commands::theory_concentration(&config, &out),
            TheoryCommand::Rate { config, out } => commands::theory_rate(&config, &out),
            TheoryCommand::Kl { config, out } => commands::theory_kl(&config, &out),
        },
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
