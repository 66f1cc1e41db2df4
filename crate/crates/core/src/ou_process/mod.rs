//! Simulation of i.i.d. Ornstein-Uhlenbeck paths `dx = A x dt + dw` on a
//! uniform grid over `[0, T]`.

mod expm;
pub mod io;

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{OuError, Result};
use crate::linalg::{self, all_finite, matrix_rows};
use crate::rng;

pub use expm::{matrix_exponential, van_loan};

/// A square drift matrix `A`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct DriftMatrix {
    entries: DMatrix<f64>,
}

impl DriftMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(OuError::invalid(format!(
                "drift must be a non-empty square matrix, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(Self { entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = matrix_rows::from_rows(rows).map_err(OuError::invalid)?;
        Self::new(m)
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: DMatrix::zeros(dim.max(1), dim.max(1)),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.entries
    }

    /// Indices of the exactly nonzero entries.
    pub fn true_support(&self) -> BTreeSet<(usize, usize)> {
        self.support(0.0)
    }

    /// Indices with `|a_ij| > threshold`.
    pub fn support(&self, threshold: f64) -> BTreeSet<(usize, usize)> {
        let d = self.dim();
        (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .filter(|&(i, j)| self.entries[(i, j)].abs() > threshold)
            .collect()
    }

    pub fn nnz(&self) -> usize {
        self.entries.iter().filter(|x| **x != 0.0).count()
    }

    /// Row-major copy of the entries.
    pub fn to_row_major(&self) -> Vec<f64> {
        let d = self.dim();
        (0..d * d).map(|k| self.entries[(k / d, k % d)]).collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for DriftMatrix {
    type Error = OuError;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<DriftMatrix> for Vec<Vec<f64>> {
    fn from(m: DriftMatrix) -> Self {
        matrix_rows::to_rows(&m.entries)
    }
}

/// Law of the initial values `x_i(0)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialLaw {
    #[default]
    Zero,
    /// Centred Gaussian with covariance `Σ`. `subgaussian_factor` is carried
    /// as metadata only.
    Gaussian {
        #[serde(with = "matrix_rows")]
        covariance: DMatrix<f64>,
        #[serde(default = "default_subgaussian")]
        subgaussian_factor: f64,
    },
}

fn default_subgaussian() -> f64 {
    1.0
}

impl InitialLaw {
    pub fn gaussian(covariance: DMatrix<f64>) -> Result<Self> {
        let law = InitialLaw::Gaussian {
            covariance,
            subgaussian_factor: 1.0,
        };
        law.validate(None)?;
        Ok(law)
    }

    /// Second-moment matrix `Σ = E[ξ ξᵀ]` in dimension `dim`.
    pub fn second_moment(&self, dim: usize) -> DMatrix<f64> {
        match self {
            InitialLaw::Zero => DMatrix::zeros(dim, dim),
            InitialLaw::Gaussian { covariance, .. } => covariance.clone(),
        }
    }

    pub fn validate(&self, dim: Option<usize>) -> Result<()> {
        let InitialLaw::Gaussian {
            covariance,
            subgaussian_factor,
        } = self
        else {
            return Ok(());
        };
        if !covariance.is_square() {
            return Err(OuError::invalid("initial covariance must be square"));
        }
        if let Some(d) = dim {
            if covariance.nrows() != d {
                return Err(OuError::invalid(format!(
                    "initial covariance is {}x{}, drift dimension is {d}",
                    covariance.nrows(),
                    covariance.ncols()
                )));
            }
        }
        if !all_finite(covariance) {
            return Err(OuError::invalid("initial covariance has non-finite entries"));
        }
        if !(*subgaussian_factor > 0.0) {
            return Err(OuError::invalid("subgaussian factor must be positive"));
        }
        let scale = linalg::max_abs(covariance).max(f64::MIN_POSITIVE);
        let asym = linalg::max_abs(&(covariance - covariance.transpose()));
        if asym > 1e-12 * scale {
            return Err(OuError::invalid("initial covariance is not symmetric"));
        }
        let trace = covariance.trace();
        let (values, _) = linalg::sym_eigen(covariance);
        if values.first().is_some_and(|&l| l < -1e-12 * trace.abs()) {
            return Err(OuError::invalid(
                "initial covariance is not positive semidefinite",
            ));
        }
        Ok(())
    }
}

/// `N` sampled paths on the grid `t_k = k δ`, `k = 0..m`.
///
/// Values are stored path-major: `values[(i * m + k) * d + j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathBundle {
    n_paths: usize,
    dim: usize,
    terminal: f64,
    step: f64,
    grid_len: usize,
    values: Vec<f64>,
    seed: u64,
}

impl PathBundle {
    pub fn from_parts(
        n_paths: usize,
        dim: usize,
        terminal: f64,
        step: f64,
        values: Vec<f64>,
        seed: u64,
    ) -> Result<Self> {
        let grid_len = grid_len(terminal, step)?;
        if n_paths == 0 || dim == 0 {
            return Err(OuError::invalid("bundle needs at least one path and one dimension"));
        }
        if values.len() != n_paths * grid_len * dim {
            return Err(OuError::invalid(format!(
                "expected {} values for {n_paths} paths x {grid_len} times x {dim} dims, got {}",
                n_paths * grid_len * dim,
                values.len()
            )));
        }
        Ok(Self {
            n_paths,
            dim,
            terminal,
            step,
            grid_len,
            values,
            seed,
        })
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn terminal(&self) -> f64 {
        self.terminal
    }
    pub fn step(&self) -> f64 {
        self.step
    }
    pub fn grid_len(&self) -> usize {
        self.grid_len
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// All `grid_len * dim` values of path `i`.
    pub fn path(&self, i: usize) -> &[f64] {
        let stride = self.grid_len * self.dim;
        &self.values[i * stride..(i + 1) * stride]
    }

    /// State of path `i` at grid index `k`.
    pub fn state(&self, i: usize, k: usize) -> &[f64] {
        let base = (i * self.grid_len + k) * self.dim;
        &self.values[base..base + self.dim]
    }

    /// Paths `range` as a new bundle (same grid and seed).
    pub fn slice_paths(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.n_paths {
            return Err(OuError::invalid(format!(
                "path range {range:?} outside 0..{}",
                self.n_paths
            )));
        }
        let stride = self.grid_len * self.dim;
        Ok(Self {
            n_paths: range.len(),
            values: self.values[range.start * stride..range.end * stride].to_vec(),
            ..*self
        })
    }
}

/// Number of grid points `round(T/δ) + 1`; rejects a `T` that is not an
/// integer multiple of `δ`.
pub fn grid_len(terminal: f64, step: f64) -> Result<usize> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(OuError::invalid(format!("step must be positive, got {step}")));
    }
    if !(terminal > 0.0) || !terminal.is_finite() {
        return Err(OuError::invalid(format!(
            "terminal must be positive, got {terminal}"
        )));
    }
    if terminal < step {
        return Err(OuError::invalid(format!(
            "terminal {terminal} is shorter than one step {step}"
        )));
    }
    let ratio = terminal / step;
    let steps = ratio.round();
    if (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
        return Err(OuError::invalid(format!(
            "terminal {terminal} is not an integer multiple of step {step}"
        )));
    }
    Ok(steps as usize + 1)
}

/// Time-stepping rule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    EulerMaruyama,
    Exact,
}

/// Generates single paths on demand; shared read-only across threads.
#[derive(Clone, Debug)]
pub struct PathSampler {
    dim: usize,
    terminal: f64,
    step: f64,
    grid_len: usize,
    /// Row-major `d x d` transition applied to the state.
    transition: Vec<f64>,
    /// Row-major `d x d` noise factor.
    noise: Vec<f64>,
    /// `x + transition x` (Euler) vs `transition x` (exact).
    additive: bool,
    initial: Option<Vec<f64>>,
}

impl PathSampler {
    pub fn new(
        drift: &DriftMatrix,
        law: &InitialLaw,
        terminal: f64,
        step: f64,
        scheme: Scheme,
    ) -> Result<Self> {
        let a = drift.entries();
        if !all_finite(a) {
            return Err(OuError::invalid("drift has non-finite entries"));
        }
        let d = drift.dim();
        law.validate(Some(d))?;
        let grid_len = grid_len(terminal, step)?;
        let to_row_major = |m: &DMatrix<f64>| -> Vec<f64> {
            (0..d * d).map(|k| m[(k / d, k % d)]).collect()
        };
        let (transition, noise, additive) = match scheme {
            Scheme::EulerMaruyama => {
                let noise = DMatrix::<f64>::identity(d, d) * step.sqrt();
                (to_row_major(&(a * step)), to_row_major(&noise), true)
            }
            Scheme::Exact => {
                let (f, v) = van_loan(a, step)?;
                let factor = linalg::psd_sqrt_factor(&v)
                    .map_err(|e| e.context("transition covariance"))?;
                if linalg::max_abs(&factor) == 0.0 {
                    return Err(OuError::numerical(
                        "transition covariance vanished after eigenvalue clipping",
                    ));
                }
                (to_row_major(&f), to_row_major(&factor), false)
            }
        };
        let initial = match law {
            InitialLaw::Zero => None,
            InitialLaw::Gaussian { covariance, .. } => {
                Some(to_row_major(&linalg::psd_sqrt_factor(covariance)?))
            }
        };
        Ok(Self {
            dim: d,
            terminal,
            step,
            grid_len,
            transition,
            noise,
            additive,
            initial,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn grid_len(&self) -> usize {
        self.grid_len
    }
    pub fn step(&self) -> f64 {
        self.step
    }
    pub fn terminal(&self) -> f64 {
        self.terminal
    }

    /// Fill `out` (length `grid_len * dim`) with path `path_index`.
    pub fn sample_into(&self, seed: u64, path_index: u64, out: &mut [f64]) {
        let d = self.dim;
        debug_assert_eq!(out.len(), self.grid_len * d);
        let mut stream = rng::path_stream(seed, path_index);
        let mut z = vec![0.0; d];
        let mut draw = |z: &mut [f64]| {
            for zj in z.iter_mut() {
                *zj = stream.sample(StandardNormal);
            }
        };
        match &self.initial {
            None => out[..d].fill(0.0),
            Some(factor) => {
                draw(&mut z);
                matvec(factor, &z, &mut out[..d]);
            }
        }
        for k in 0..self.grid_len - 1 {
            draw(&mut z);
            let (head, tail) = out.split_at_mut((k + 1) * d);
            let x = &head[k * d..];
            let next = &mut tail[..d];
            for r in 0..d {
                let row_t = &self.transition[r * d..(r + 1) * d];
                let row_n = &self.noise[r * d..(r + 1) * d];
                let mut acc = if self.additive { x[r] } else { 0.0 };
                for c in 0..d {
                    acc += row_t[c] * x[c] + row_n[c] * z[c];
                }
                next[r] = acc;
            }
        }
    }

    pub fn simulate(&self, n_paths: usize, seed: u64) -> Result<PathBundle> {
        if n_paths == 0 {
            return Err(OuError::invalid("n_paths must be at least 1"));
        }
        let stride = self.grid_len * self.dim;
        let mut values = vec![0.0; n_paths * stride];
        values
            .par_chunks_mut(stride)
            .enumerate()
            .for_each(|(i, chunk)| self.sample_into(seed, i as u64, chunk));
        PathBundle::from_parts(n_paths, self.dim, self.terminal, self.step, values, seed)
    }

    /// Terminal states `x_i(T)` only, `n_paths x dim` row-major. Identical to
    /// the last grid column of [`PathSampler::simulate`] for the same seed.
    pub fn simulate_terminal(&self, n_paths: usize, seed: u64) -> Result<Vec<f64>> {
        if n_paths == 0 {
            return Err(OuError::invalid("n_paths must be at least 1"));
        }
        let d = self.dim;
        let stride = self.grid_len * d;
        let mut out = vec![0.0; n_paths * d];
        out.par_chunks_mut(d).enumerate().for_each_init(
            || vec![0.0; stride],
            |buf, (i, dst)| {
                self.sample_into(seed, i as u64, buf);
                dst.copy_from_slice(&buf[stride - d..]);
            },
        );
        Ok(out)
    }
}

fn matvec(m: &[f64], x: &[f64], out: &mut [f64]) {
    let d = x.len();
    for (r, o) in out.iter_mut().enumerate() {
        *o = (0..d).map(|c| m[r * d + c] * x[c]).sum();
    }
}

/// Euler-Maruyama paths: `x_{k+1} = x_k + δ A x_k + √δ z_k`.
pub fn simulate_euler(
    drift: &DriftMatrix,
    law: &InitialLaw,
    n_paths: usize,
    terminal: f64,
    step: f64,
    seed: u64,
) -> Result<PathBundle> {
    PathSampler::new(drift, law, terminal, step, Scheme::EulerMaruyama)?.simulate(n_paths, seed)
}

/// Exact-transition paths: `x_{k+1} = e^{δA} x_k + η_k`, `η_k ~ N(0, V(δ))`.
pub fn simulate_exact(
    drift: &DriftMatrix,
    law: &InitialLaw,
    n_paths: usize,
    terminal: f64,
    step: f64,
    seed: u64,
) -> Result<PathBundle> {
    PathSampler::new(drift, law, terminal, step, Scheme::Exact)?.simulate(n_paths, seed)
}
