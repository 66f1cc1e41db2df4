use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparse_ou::linalg::op_norm;
use sparse_ou::ou_process::{simulate_exact, DriftMatrix, InitialLaw};
use sparse_ou::suffstats::compute_suffstats;
use sparse_ou::theory::*;

fn stable_drift(gen: &mut ChaCha8Rng, d: usize) -> DriftMatrix {
    let m = DMatrix::from_fn(d, d, |_, _| gen.random_range(-0.4..0.4));
    DriftMatrix::new(m - DMatrix::<f64>::identity(d, d)).unwrap()
}

#[test]
fn kappa_bounds_hold_on_random_drifts() {
    let mut gen = ChaCha8Rng::seed_from_u64(61);
    for _ in 0..50 {
        let d = gen.random_range(1..6);
        let a = DriftMatrix::new(DMatrix::from_fn(d, d, |_, _| gen.random_range(-1.0..1.0))).unwrap();
        let g = DMatrix::from_fn(d, d, |_, _| gen.random_range(-0.5..0.5));
        let sigma = &g * g.transpose();
        let t = gen.random_range(0.5..2.0);
        let q = compute_c_infty(&a, &sigma, t).unwrap();
        let (p, a0) = (q.eigvec_condition, q.spectral_abscissa_abs);
        let upper = p * p * (t + op_norm(&sigma)) * t * (2.0 * a0 * t).exp();
        let lower = 0.5 / (p * p) * t * t * (-2.0 * a0 * t).exp();
        assert!(q.kappa_max <= upper, "{} > {upper}", q.kappa_max);
        assert!(q.kappa_min >= lower, "{} < {lower}", q.kappa_min);
        assert!(q.kappa_min > 0.0 && q.kappa_max >= q.kappa_min);
    }
}

#[test]
fn rotation_dissipation_gram_integral_is_scalar() {
    let mut gen = ChaCha8Rng::seed_from_u64(62);
    for k in 0..20 {
        let d = gen.random_range(2..7);
        let alpha = [0.5, 1.0, 2.0][k % 3];
        let m = DMatrix::from_fn(d, d, |_, _| gen.random_range(-2.0..2.0));
        let b = &m - m.transpose();
        let a = -(DMatrix::<f64>::identity(d, d) * alpha + b);
        let t = gen.random_range(0.2..3.0);
        let g = exp_gram_integral(&a, t).unwrap();
        let expect = (1.0 - (-2.0 * alpha * t).exp()) / (2.0 * alpha);
        assert!((g - DMatrix::<f64>::identity(d, d) * expect).amax() <= 1e-8);
    }
}

#[test]
fn c_hat_converges_to_c_infty() {
    let mut gen = ChaCha8Rng::seed_from_u64(63);
    for d in 1..=3 {
        let a = stable_drift(&mut gen, d);
        let q = compute_c_infty(&a, &DMatrix::zeros(d, d), 1.0).unwrap();
        let paths = simulate_exact(&a, &InitialLaw::Zero, 10_000, 1.0, 0.005, 64 + d as u64).unwrap();
        let c = compute_suffstats(&paths).unwrap().c_hat;
        assert!(op_norm(&(&c - &q.c_infty)) < 0.1 * op_norm(&q.c_infty));
    }
}

#[test]
fn concentration_shrinks_and_sandwich_holds() {
    let mut gen = ChaCha8Rng::seed_from_u64(64);
    let a = stable_drift(&mut gen, 3);
    let r = check_concentration(&a, &InitialLaw::Zero, &ConcentrationConfig::default()).unwrap();
    let devs: Vec<f64> = r.points.iter().map(|p| p.mean_deviation).collect();
    assert!(devs.windows(2).all(|w| w[1] < w[0]), "{devs:?}");
    // quadrupling N should halve the deviation
    for w in devs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.2..=2.8).contains(&ratio), "ratio {ratio}");
    }
    assert!(r.points.last().unwrap().sandwich_frequency >= 0.95);
}

#[test]
fn lasso_error_rate_is_inverse_root_n() {
    let r = rate_sweep(&RateConfig::default()).unwrap();
    assert!(r.points.iter().all(|p| p.mean_error.is_finite() && p.mean_error > 0.0));
    for p in &r.points {
        assert!((p.psi - minimax_psi(r.sparsity, 8, p.n_paths, 2.0)).abs() <= 1e-12);
    }
    assert!(
        (-0.65..=-0.35).contains(&r.fitted_exponent),
        "exponent {}",
        r.fitted_exponent
    );
}

#[test]
fn kl_formula_matches_girsanov_monte_carlo() {
    let fam = minimax_family(4, 8, 0.1, 8, 65).unwrap();
    let a1 = &fam[0].drift;
    let a2 = fam.iter().map(|m| &m.drift).find(|a| *a != a1).unwrap();
    let kl = kl_between(a1, a2, 100).unwrap();
    let mc = kl_monte_carlo(a1, a2, 100, 10_000, 0.01, 66).unwrap();
    assert!((mc.mean - kl).abs() <= 0.1 * kl, "mc {} ± {} vs {kl}", mc.mean, mc.std_error);
}
