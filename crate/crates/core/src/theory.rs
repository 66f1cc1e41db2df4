//! Population quantities of the OU design and Monte Carlo checks of the
//! concentration, rate and information bounds.

use nalgebra::{Complex, DMatrix};
use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{OuError, Result};
use crate::experiments::{generate_drift, ExperimentPlan};
use crate::linalg::{self, matrix_rows};
use crate::model_select::{self, CvGrid, CvPenalty};
use crate::ou_process::{
    matrix_exponential, van_loan, DriftMatrix, InitialLaw, PathSampler, Scheme,
};
use crate::rng;
use crate::solvers::SolverConfig;
use crate::suffstats::compute_suffstats;

/// Relative Frobenius change between successive Simpson refinements.
pub const QUADRATURE_TOL: f64 = 1e-8;
const MIN_INTERVALS: usize = 8;
const MAX_INTERVALS: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryQuantities {
    #[serde(with = "matrix_rows")]
    pub c_infty: DMatrix<f64>,
    pub kappa_min: f64,
    pub kappa_max: f64,
    /// `kappa_max + kappa_min / 2`
    pub kappa_star: f64,
    /// `max |Re λ|` over the eigenvalues of the drift.
    pub spectral_abscissa_abs: f64,
    /// `||P||_op ||P⁻¹||_op` for unit-column eigenvectors `P`.
    pub eigvec_condition: f64,
    pub quadrature_intervals: usize,
}

/// Composite Simpson on `[t0, t1]`, doubling the number of intervals until
/// two successive estimates differ by at most `rel_tol` in Frobenius norm
/// relative to the newer one. Returns the estimate and the final interval
/// count.
pub fn simpson_matrix<F>(f: F, t0: f64, t1: f64, rel_tol: f64) -> Result<(DMatrix<f64>, usize)>
where
    F: Fn(f64) -> Result<DMatrix<f64>>,
{
    if !(t1 > t0) {
        return Err(OuError::invalid("integration interval is empty"));
    }
    let ends = f(t0)? + f(t1)?;
    let mut n = 2usize;
    let mut h = (t1 - t0) / n as f64;
    let mut interior = DMatrix::zeros(ends.nrows(), ends.ncols());
    let mut odd = f(t0 + h)?;
    let mut prev = (&ends + &odd * 4.0) * (h / 3.0);
    loop {
        interior += &odd;
        n *= 2;
        h /= 2.0;
        odd.fill(0.0);
        for k in (1..n).step_by(2) {
            odd += f(t0 + k as f64 * h)?;
        }
        let est = (&ends + &odd * 4.0 + &interior * 2.0) * (h / 3.0);
        let change = (&est - &prev).norm();
        if n >= MIN_INTERVALS && change <= rel_tol * est.norm() {
            return Ok((est, n));
        }
        if n >= MAX_INTERVALS {
            return Err(OuError::numerical(format!(
                "quadrature did not converge with {n} intervals (last change {change:.3e})"
            )));
        }
        prev = est;
    }
}

fn check_inputs(drift: &DriftMatrix, sigma: &DMatrix<f64>, terminal: f64) -> Result<()> {
    let d = drift.dim();
    if sigma.shape() != (d, d) {
        return Err(OuError::invalid(format!("sigma must be {d}x{d}")));
    }
    if !(terminal > 0.0 && terminal.is_finite()) {
        return Err(OuError::invalid(format!("terminal must be positive, got {terminal}")));
    }
    InitialLaw::gaussian(sigma.clone())?;
    Ok(())
}

/// `∫₀ᵀ (e^{tA} Σ e^{tAᵀ} + V(t)) dt` with `V(t) = ∫₀ᵗ e^{sA} e^{sAᵀ} ds`,
/// without any spectral checks on `A`.
pub fn integrate_c_infty(
    drift: &DriftMatrix,
    sigma: &DMatrix<f64>,
    terminal: f64,
) -> Result<(DMatrix<f64>, usize)> {
    check_inputs(drift, sigma, terminal)?;
    let a = drift.entries();
    let (c, n) = simpson_matrix(
        |t| {
            let (f, v) = van_loan(a, t)?;
            Ok(&f * sigma * f.transpose() + v)
        },
        0.0,
        terminal,
        QUADRATURE_TOL,
    )?;
    Ok((linalg::symmetrize(&c), n))
}

/// Second-moment matrix `C∞` over `[0, T]` and its spectral summaries.
/// Defective (non-diagonalizable) drifts are rejected.
pub fn compute_c_infty(
    drift: &DriftMatrix,
    sigma: &DMatrix<f64>,
    terminal: f64,
) -> Result<TheoryQuantities> {
    check_inputs(drift, sigma, terminal)?;
    let spec = eigen_structure(drift.entries())?;
    let (c_infty, quadrature_intervals) = integrate_c_infty(drift, sigma, terminal)?;
    let (vals, _) = linalg::sym_eigen(&c_infty);
    let kappa_min = vals[0];
    let kappa_max = vals[vals.len() - 1];
    Ok(TheoryQuantities {
        c_infty,
        kappa_min,
        kappa_max,
        kappa_star: kappa_max + kappa_min / 2.0,
        spectral_abscissa_abs: spec.abscissa_abs,
        eigvec_condition: spec.condition,
        quadrature_intervals,
    })
}

#[derive(Clone, Debug)]
pub struct EigenStructure {
    pub eigenvalues: Vec<Complex<f64>>,
    pub abscissa_abs: f64,
    pub condition: f64,
    pub residual: f64,
}

/// Eigenvalues, eigenvector condition number and decomposition residual
/// `||AP - PΛ||_F / (max(1, ||A||_F) ||P||_F)`.
///
/// Eigenvalues closer than `1e-6 max(1, ||A||)` are grouped; each group of
/// size `k` must have a `k`-dimensional null space of `A - θI`, otherwise the
/// matrix is reported as defective.
pub fn eigen_structure(a: &DMatrix<f64>) -> Result<EigenStructure> {
    let d = a.nrows();
    if !a.is_square() || d == 0 || !linalg::all_finite(a) {
        return Err(OuError::invalid("eigen analysis needs a finite square matrix"));
    }
    let scale = a.norm().max(1.0);
    let mut eig: Vec<Complex<f64>> = a.complex_eigenvalues().iter().copied().collect();
    eig.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));

    let cluster_tol = 1e-6 * scale;
    let mut clusters: Vec<Vec<Complex<f64>>> = Vec::new();
    for z in eig.iter().copied() {
        match clusters
            .iter_mut()
            .find(|c| c.iter().any(|w| (w - z).norm() <= cluster_tol))
        {
            Some(c) => c.push(z),
            None => clusters.push(vec![z]),
        }
    }

    let ac: DMatrix<Complex<f64>> = a.map(|x| Complex::new(x, 0.0));
    let mut p = DMatrix::<Complex<f64>>::zeros(d, d);
    let mut lambda = Vec::with_capacity(d);
    let mut col = 0;
    for c in &clusters {
        let k = c.len();
        let theta = c.iter().sum::<Complex<f64>>() / k as f64;
        let m = &ac - DMatrix::<Complex<f64>>::identity(d, d) * theta;
        let svd = m.svd(false, true);
        let v_t = svd.v_t.ok_or_else(|| OuError::numerical("SVD failed"))?;
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
        let small = order
            .iter()
            .filter(|&&i| svd.singular_values[i] <= 1e-5 * scale)
            .count();
        if small < k {
            return Err(OuError::UnsupportedInput(format!(
                "drift is defective: eigenvalue {:.6}{:+.6}i has algebraic multiplicity {k} \
                 but geometric multiplicity {small}",
                theta.re, theta.im
            )));
        }
        for &i in order.iter().take(k) {
            let v = v_t.row(i).transpose().map(|z| z.conj());
            let n = v.norm();
            p.set_column(col, &(v / Complex::new(n, 0.0)));
            lambda.push(theta);
            col += 1;
        }
    }

    let pl = DMatrix::from_fn(d, d, |i, j| p[(i, j)] * lambda[j]);
    let residual = (&ac * &p - pl).norm() / (scale * p.norm());
    let sv = p.clone().svd(false, false).singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if !(smin > 1e-12 * smax) || residual >= 1e-8 {
        return Err(OuError::UnsupportedInput(format!(
            "drift is not numerically diagonalizable (eigenvector condition {:.3e}, residual {residual:.3e})",
            smax / smin
        )));
    }
    Ok(EigenStructure {
        abscissa_abs: eig.iter().map(|z| z.re.abs()).fold(0.0, f64::max),
        eigenvalues: eig,
        condition: smax / smin,
        residual,
    })
}

/// `∫₀ᵀ e^{A(T-t)} e^{Aᵀ(T-t)} dt` by adaptive Simpson quadrature.
pub fn exp_gram_integral(a: &DMatrix<f64>, terminal: f64) -> Result<DMatrix<f64>> {
    let (g, _) = simpson_matrix(
        |s| {
            let e = matrix_exponential(&(a * s))?;
            Ok(&e * e.transpose())
        },
        0.0,
        terminal,
        QUADRATURE_TOL,
    )?;
    Ok(linalg::symmetrize(&g))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConcentrationConfig {
    pub n_list: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub terminal: f64,
    pub step: f64,
}

impl Default for ConcentrationConfig {
    fn default() -> Self {
        Self {
            n_list: vec![250, 1000, 4000],
            reps: 20,
            seed: 7,
            terminal: 1.0,
            step: 0.005,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationPoint {
    pub n_paths: usize,
    /// Mean of `||Ĉ_N - C∞||_op` over replicates.
    pub mean_deviation: f64,
    pub std_deviation: f64,
    /// Fraction of replicates with every eigenvalue of `Ĉ_N` inside
    /// `[κ_min / 2, κ_max + κ_min / 2]`.
    pub sandwich_frequency: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub quantities: TheoryQuantities,
    pub points: Vec<ConcentrationPoint>,
}

/// Simulates `reps` bundles per `N` with the exact sampler and compares
/// `Ĉ_N` with `C∞`.
pub fn check_concentration(
    drift: &DriftMatrix,
    law: &InitialLaw,
    cfg: &ConcentrationConfig,
) -> Result<ConcentrationReport> {
    if cfg.n_list.is_empty() || cfg.n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(OuError::invalid("n_list must be nonempty and strictly ascending"));
    }
    if cfg.reps < 1 {
        return Err(OuError::invalid("reps must be >= 1"));
    }
    let d = drift.dim();
    let q = compute_c_infty(drift, &law.second_moment(d), cfg.terminal)?;
    let sampler = PathSampler::new(drift, law, cfg.terminal, cfg.step, Scheme::Exact)?;
    let (lo, hi) = (q.kappa_min / 2.0, q.kappa_star);
    let mut points = Vec::with_capacity(cfg.n_list.len());
    for &n in &cfg.n_list {
        let stats: Vec<(f64, bool)> = (0..cfg.reps)
            .into_par_iter()
            .map(|rep| {
                let seed = rng::derive_seed(cfg.seed, &[n as u64, rep as u64]);
                let s = compute_suffstats(&sampler.simulate(n, seed)?)?;
                let dev = linalg::op_norm(&(&s.c_hat - &q.c_infty));
                let (ev, _) = linalg::sym_eigen(&s.c_hat);
                let inside = ev[0] >= lo && ev[ev.len() - 1] <= hi;
                Ok((dev, inside))
            })
            .collect::<Result<_>>()?;
        let devs: Vec<f64> = stats.iter().map(|s| s.0).collect();
        let (mean, std) = mean_std(&devs);
        points.push(ConcentrationPoint {
            n_paths: n,
            mean_deviation: mean,
            std_deviation: std,
            sandwich_frequency: stats.iter().filter(|s| s.1).count() as f64 / cfg.reps as f64,
        });
    }
    Ok(ConcentrationReport {
        quantities: q,
        points,
    })
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

/// Minimax scale `s^{1/p} sqrt(log(e d² / s) / N)`.
pub fn minimax_psi(s: usize, d: usize, n: usize, p: f64) -> f64 {
    let s = s as f64;
    let d2 = (d * d) as f64;
    s.powf(1.0 / p) * ((std::f64::consts::E * d2 / s).ln() / n as f64).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    N,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateConfig {
    pub dim: usize,
    pub n_list: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    /// Validation paths per point are `ceil(validation_fraction * N)`.
    pub validation_fraction: f64,
    pub terminal: f64,
    pub step: f64,
    pub grid: CvGrid,
    pub solver: SolverConfig,
    /// Exponent in the minimax scale; 2 gives the l2 rate.
    pub p: f64,
}

impl Default for RateConfig {
    fn default() -> Self {
        Self {
            dim: 8,
            n_list: vec![100, 200, 400, 800, 1600],
            reps: 5,
            seed: 11,
            validation_fraction: 0.25,
            terminal: 1.0,
            step: 0.01,
            grid: CvGrid::default(),
            solver: SolverConfig::default(),
            p: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n_paths: usize,
    pub mean_error: f64,
    pub psi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateCheckReport {
    pub sweep_axis: SweepAxis,
    pub drift: DriftMatrix,
    pub sparsity: usize,
    pub points: Vec<RatePoint>,
    pub fitted_exponent: f64,
    pub expected_exponent: f64,
}

/// Least-squares slope of `ys` against `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Mean Frobenius error of CV-Lasso against `N` for one drift drawn with the
/// experiment generator, and the fitted log-log slope.
pub fn rate_sweep(cfg: &RateConfig) -> Result<RateCheckReport> {
    if cfg.n_list.len() < 4 {
        return Err(OuError::invalid("rate sweep needs at least 4 points"));
    }
    if cfg.n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(OuError::invalid("n_list must be strictly ascending"));
    }
    if cfg.reps < 1 || !(cfg.validation_fraction > 0.0) || !(cfg.p > 0.0) {
        return Err(OuError::invalid("reps, validation_fraction and p must be positive"));
    }
    let plan = ExperimentPlan::default();
    let drift = generate_drift(cfg.dim, &plan, rng::derive_seed(cfg.seed, &[0]))?;
    let s = drift.nnz();
    let sampler = PathSampler::new(
        &drift,
        &InitialLaw::Zero,
        cfg.terminal,
        cfg.step,
        Scheme::EulerMaruyama,
    )?;
    let mut points = Vec::with_capacity(cfg.n_list.len());
    for &n in &cfg.n_list {
        let n_valid = ((cfg.validation_fraction * n as f64).ceil() as usize).max(1);
        let errors: Vec<f64> = (0..cfg.reps)
            .into_par_iter()
            .map(|rep| {
                let seed = rng::derive_seed(cfg.seed, &[n as u64, rep as u64, 1]);
                let paths = sampler.simulate(n + n_valid, seed)?;
                let (train, valid) = model_select::split_paths(&paths, n)?;
                let report = model_select::cross_validate(
                    &compute_suffstats(&train)?,
                    &compute_suffstats(&valid)?,
                    &cfg.grid,
                    CvPenalty::L1,
                    None,
                    &cfg.solver,
                )?;
                Ok((report.chosen_result.estimate.entries() - drift.entries()).norm())
            })
            .collect::<Result<_>>()?;
        points.push(RatePoint {
            n_paths: n,
            mean_error: errors.iter().sum::<f64>() / errors.len() as f64,
            psi: minimax_psi(s, cfg.dim, n, cfg.p),
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.n_paths as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.mean_error.ln()).collect();
    let fitted_exponent = ols_slope(&xs, &ys);
    if !fitted_exponent.is_finite() {
        return Err(OuError::numerical("rate fit produced a non-finite exponent"));
    }
    Ok(RateCheckReport {
        sweep_axis: SweepAxis::N,
        drift,
        sparsity: s,
        points,
        fitted_exponent,
        expected_exponent: -0.5,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimaxMember {
    pub drift: DriftMatrix,
    /// Antisymmetric sign pattern `B` with `A = -I/2 - wB`.
    #[serde(with = "matrix_rows")]
    pub pattern: DMatrix<f64>,
}

/// Largest even `r` with `r <= (s - d) / 2`.
pub fn minimax_r(d: usize, s: usize) -> usize {
    let r = (s - d) / 2;
    r - r % 2
}

/// `count` random members `-I/2 - wB` of the lower-bound family: `B`
/// antisymmetric in `{-1, 0, 1}` with exactly `r` nonzeros, `r` the largest
/// even integer not above `(s - d) / 2`.
pub fn minimax_family(d: usize, s: usize, w: f64, count: usize, seed: u64) -> Result<Vec<MinimaxMember>> {
    if d < 4 {
        return Err(OuError::invalid(format!("minimax family needs d >= 4, got {d}")));
    }
    if s < 2 * d || s > d * d {
        return Err(OuError::invalid(format!("need 2d <= s <= d², got s = {s}, d = {d}")));
    }
    if !(w > 0.0 && w.is_finite()) {
        return Err(OuError::invalid(format!("w must be positive, got {w}")));
    }
    let r = minimax_r(d, s);
    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|i| (i + 1..d).map(move |j| (i, j)))
        .collect();
    let mut gen = rng::seeded(seed);
    (0..count)
        .map(|_| {
            let mut b = DMatrix::zeros(d, d);
            for k in index::sample(&mut gen, pairs.len(), r / 2) {
                let (i, j) = pairs[k];
                let sign = if gen.random_bool(0.5) { 1.0 } else { -1.0 };
                b[(i, j)] = sign;
                b[(j, i)] = -sign;
            }
            let a = DMatrix::<f64>::identity(d, d) * -0.5 - &b * w;
            Ok(MinimaxMember {
                drift: DriftMatrix::new(a)?,
                pattern: b,
            })
        })
        .collect()
}

/// `α` with `(A + Aᵀ)/2 = -αI`, if `A` has that form.
fn dissipation_rate(a: &DMatrix<f64>) -> Option<f64> {
    let d = a.nrows();
    let sym = linalg::symmetrize(a);
    let alpha = -sym.trace() / d as f64;
    let off = linalg::max_abs(&(sym + DMatrix::<f64>::identity(d, d) * alpha));
    (alpha > 0.0 && off <= 1e-10 * alpha.max(1.0)).then_some(alpha)
}

/// `∫₀¹ (1 - e^{-2αt}) / (2α) dt`
pub fn kl_time_constant(alpha: f64) -> f64 {
    let two_a = 2.0 * alpha;
    (1.0 - (-(-two_a).exp_m1()) / two_a) / two_a
}

/// KL divergence between the laws of `N` paths on `[0, 1]` started at zero,
/// for drifts `-αI - B₁`, `-αI - B₂` with `B₁`, `B₂` antisymmetric:
/// `(N/2) ||A₁ - A₂||_F² ∫₀¹ (1 - e^{-2αt}) / (2α) dt`.
pub fn kl_between(a1: &DriftMatrix, a2: &DriftMatrix, n_paths: usize) -> Result<f64> {
    if a1.dim() != a2.dim() {
        return Err(OuError::invalid("drift dimensions differ"));
    }
    let not_family = || {
        OuError::UnsupportedInput(
            "kl_between needs drifts of the form -αI - B with B antisymmetric".into(),
        )
    };
    let alpha1 = dissipation_rate(a1.entries()).ok_or_else(not_family)?;
    let alpha2 = dissipation_rate(a2.entries()).ok_or_else(not_family)?;
    if (alpha1 - alpha2).abs() > 1e-10 * alpha1.max(1.0) {
        return Err(OuError::UnsupportedInput(format!(
            "drifts have different symmetric parts (-{alpha1} I vs -{alpha2} I)"
        )));
    }
    let diff = (a1.entries() - a2.entries()).norm_squared();
    Ok(0.5 * n_paths as f64 * diff * kl_time_constant(alpha1))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KlMonteCarlo {
    pub n_paths: usize,
    pub bundles: usize,
    pub step: f64,
    /// Mean of the bundle log-likelihood ratio.
    pub mean: f64,
    pub std_error: f64,
}

/// Mean discretized log-likelihood ratio `log dP_{A₁}/dP_{A₂}` of bundles of
/// `n_paths` exact-sampler paths drawn under `A₁` from zero on `[0, 1]`:
/// `Σ_k ((A₁-A₂)x_k)ᵀ Δx_k - (δ/2)(|A₁x_k|² - |A₂x_k|²)` summed over paths.
pub fn kl_monte_carlo(
    a1: &DriftMatrix,
    a2: &DriftMatrix,
    n_paths: usize,
    bundles: usize,
    step: f64,
    seed: u64,
) -> Result<KlMonteCarlo> {
    if a1.dim() != a2.dim() {
        return Err(OuError::invalid("drift dimensions differ"));
    }
    if n_paths < 1 || bundles < 2 {
        return Err(OuError::invalid("need n_paths >= 1 and bundles >= 2"));
    }
    let d = a1.dim();
    let sampler = PathSampler::new(a1, &InitialLaw::Zero, 1.0, step, Scheme::Exact)?;
    let m = sampler.grid_len();
    let (m1, m2) = (a1.entries(), a2.entries());
    let diff = m1 - m2;
    let llrs: Vec<f64> = (0..bundles)
        .into_par_iter()
        .map_init(
            || vec![0.0; m * d],
            |buf, b| {
                let mut total = 0.0;
                for i in 0..n_paths {
                    sampler.sample_into(seed, (b * n_paths + i) as u64, buf);
                    for k in 0..m - 1 {
                        let x = nalgebra::DVectorView::from_slice(&buf[k * d..(k + 1) * d], d);
                        let dx = nalgebra::DVector::from_fn(d, |j, _| {
                            buf[(k + 1) * d + j] - buf[k * d + j]
                        });
                        total += (&diff * x).dot(&dx)
                            - 0.5 * step * ((m1 * x).norm_squared() - (m2 * x).norm_squared());
                    }
                }
                total
            },
        )
        .collect();
    let (mean, std) = mean_std(&llrs);
    Ok(KlMonteCarlo {
        n_paths,
        bundles,
        step,
        mean,
        std_error: std / (bundles as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(x: f64) -> DriftMatrix {
        DriftMatrix::from_rows(&[vec![x]]).unwrap()
    }

    #[test]
    fn scalar_c_infty_closed_form() {
        let q = compute_c_infty(&scalar(-1.0), &DMatrix::zeros(1, 1), 1.0).unwrap();
        let exact = 0.5 - (1.0 - (-2f64).exp()) / 4.0;
        assert!((q.c_infty[(0, 0)] - exact).abs() < 1e-9);
        assert!((q.c_infty[(0, 0)] - 0.28383).abs() < 1e-5);
        assert_eq!(q.kappa_min, q.kappa_max);
        assert!((q.spectral_abscissa_abs - 1.0).abs() < 1e-12);
        assert!((q.eigvec_condition - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scalar_c_infty_matches_trapezoid_oracle() {
        // inner integral in closed form, outer by a fine trapezoid rule
        let n = 200_000;
        let h = 1.0 / n as f64;
        let g = |t: f64| (1.0 - (-2.0 * t).exp()) / 2.0;
        let trap: f64 = (0..n).map(|k| 0.5 * h * (g(k as f64 * h) + g((k + 1) as f64 * h))).sum();
        let (c, _) = integrate_c_infty(&scalar(-1.0), &DMatrix::zeros(1, 1), 1.0).unwrap();
        assert!((c[(0, 0)] - trap).abs() < 1e-9);
    }

    #[test]
    fn zero_drift_identity_sigma() {
        let q = compute_c_infty(&DriftMatrix::zeros(3), &DMatrix::identity(3, 3), 1.0).unwrap();
        assert!((&q.c_infty - DMatrix::<f64>::identity(3, 3) * 1.5).amax() < 1e-12);
        assert!((q.kappa_star - 2.25).abs() < 1e-12);
    }

    #[test]
    fn defective_drift_is_unsupported() {
        let a = DriftMatrix::from_rows(&[vec![-1.0, 1.0], vec![0.0, -1.0]]).unwrap();
        let err = compute_c_infty(&a, &DMatrix::zeros(2, 2), 1.0).unwrap_err();
        assert!(matches!(err, OuError::UnsupportedInput(_)), "{err}");
    }

    #[test]
    fn repeated_diagonalizable_eigenvalues_are_accepted() {
        let a = DMatrix::from_row_slice(3, 3, &[-0.5, 0.1, 0.0, -0.1, -0.5, 0.0, 0.0, 0.0, -0.5]);
        let e = eigen_structure(&a).unwrap();
        assert!(e.residual < 1e-12);
        assert!((e.abscissa_abs - 0.5).abs() < 1e-12);
        let e = eigen_structure(&(DMatrix::identity(4, 4) * -2.0)).unwrap();
        assert!((e.condition - 1.0).abs() < 1e-12);
    }

    #[test]
    fn simpson_is_exact_on_cubics() {
        let (v, n) = simpson_matrix(
            |t| Ok(DMatrix::from_element(1, 1, t * t * t - t)),
            0.0,
            2.0,
            1e-12,
        )
        .unwrap();
        assert!((v[(0, 0)] - 2.0).abs() < 1e-13);
        assert_eq!(n, MIN_INTERVALS);
    }

    #[test]
    fn minimax_shapes() {
        assert_eq!(minimax_r(4, 8), 2);
        assert_eq!(minimax_r(10, 30), 10);
        assert_eq!(minimax_r(10, 28), 8);
        let fam = minimax_family(4, 8, 0.1, 5, 3).unwrap();
        for m in &fam {
            assert_eq!(m.pattern.iter().filter(|x| **x != 0.0).count(), 2);
            assert_eq!(&m.pattern + m.pattern.transpose(), DMatrix::zeros(4, 4));
            let recon = m.drift.entries() + DMatrix::<f64>::identity(4, 4) * 0.5 + &m.pattern * 0.1;
            assert_eq!(recon.amax(), 0.0);
        }
        assert!(minimax_family(3, 8, 0.1, 1, 0).is_err());
        assert!(minimax_family(4, 7, 0.1, 1, 0).is_err());
        assert!(minimax_family(4, 8, 0.0, 1, 0).is_err());
    }

    #[test]
    fn kl_formula_examples() {
        let fam = minimax_family(4, 8, 0.1, 4, 5).unwrap();
        assert_eq!(kl_between(&fam[0].drift, &fam[0].drift, 100).unwrap(), 0.0);
        let k01 = kl_between(&fam[0].drift, &fam[1].drift, 100).unwrap();
        let k10 = kl_between(&fam[1].drift, &fam[0].drift, 100).unwrap();
        assert_eq!(k01, k10);
        assert!(k01 >= 0.0);

        // -I - wB: ||ΔA||² = 2w² with w = 0.1 and N = 100
        let mut b = DMatrix::zeros(4, 4);
        b[(0, 1)] = 1.0;
        b[(1, 0)] = -1.0;
        let a1 = DriftMatrix::new(DMatrix::<f64>::identity(4, 4) * -1.0).unwrap();
        let a2 = DriftMatrix::new(DMatrix::<f64>::identity(4, 4) * -1.0 - b * 0.1).unwrap();
        let k = kl_between(&a1, &a2, 100).unwrap();
        assert!((k - 0.28383).abs() < 1e-5, "{k}");
    }

    #[test]
    fn kl_time_constant_matches_quadrature() {
        for alpha in [0.5, 1.0, 2.0] {
            let n = 100_000;
            let h = 1.0 / n as f64;
            let g = |t: f64| (1.0 - (-2.0 * alpha * t).exp()) / (2.0 * alpha);
            let trap: f64 = (0..n).map(|k| 0.5 * h * (g(k as f64 * h) + g((k + 1) as f64 * h))).sum();
            assert!((kl_time_constant(alpha) - trap).abs() < 1e-10);
        }
        assert!((kl_time_constant(0.5) - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn kl_rejects_non_family() {
        let a = DriftMatrix::from_rows(&[vec![-1.0, 0.3], vec![0.0, -1.0]]).unwrap();
        let b = DriftMatrix::new(DMatrix::<f64>::identity(2, 2) * -1.0).unwrap();
        assert!(matches!(kl_between(&a, &b, 10), Err(OuError::UnsupportedInput(_))));
        let c = DriftMatrix::new(DMatrix::<f64>::identity(2, 2) * -0.5).unwrap();
        assert!(matches!(kl_between(&b, &c, 10), Err(OuError::UnsupportedInput(_))));
    }

    #[test]
    fn psi_formula() {
        let v = minimax_psi(19, 8, 400, 2.0);
        let direct = 19f64.sqrt() * ((std::f64::consts::E * 64.0 / 19.0).ln() / 400.0).sqrt();
        assert!((v - direct).abs() < 1e-15);
    }

    #[test]
    fn ols_recovers_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 0.5 * x).collect();
        assert!((ols_slope(&xs, &ys) + 0.5).abs() < 1e-15);
    }
}
