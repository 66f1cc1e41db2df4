use nalgebra::DMatrix;
use sparse_ou::experiments::{generate_drift, ExperimentPlan};
use sparse_ou::linalg::op_norm;
use sparse_ou::model_select::{split_paths, validation_score};
use sparse_ou::ou_process::{simulate_euler, DriftMatrix, InitialLaw};
use sparse_ou::suffstats::{compute_suffstats, martingale_term};
use sparse_ou::theory::integrate_c_infty;

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

#[test]
fn expected_c_hat_matches_c_infty_at_protocol_settings() {
    let plan = ExperimentPlan::default();
    let d = 15;
    let a = generate_drift(d, &plan, plan.drift_seed(d)).unwrap();
    let (c_inf, _) = integrate_c_infty(&a, &DMatrix::zeros(d, d), 1.0).unwrap();
    let reps = 10;
    let mut mean = DMatrix::zeros(d, d);
    for r in 0..reps {
        let paths = simulate_euler(&a, &InitialLaw::Zero, 400, 1.0, 0.01, 900 + r).unwrap();
        mean += compute_suffstats(&paths).unwrap().c_hat / reps as f64;
    }
    let dev = op_norm(&(&mean - &c_inf));
    assert!(dev <= 0.15 * op_norm(&c_inf), "deviation {dev} vs {}", op_norm(&c_inf));
}

#[test]
fn martingale_term_has_zero_mean_and_root_n_scaling() {
    let a = DriftMatrix::from_rows(&[vec![-1.0]]).unwrap();
    let sample = |n: usize, base: u64| -> Vec<f64> {
        (0..50)
            .map(|r| {
                let paths = simulate_euler(&a, &InitialLaw::Zero, n, 1.0, 0.01, base + r).unwrap();
                martingale_term(&compute_suffstats(&paths).unwrap(), &a).unwrap()[(0, 0)]
            })
            .collect()
    };
    let big = sample(10_000, 0);
    let (m, s) = mean_std(&big);
    assert!(m.abs() <= 4.0 * s / (big.len() as f64).sqrt(), "mean {m}, std {s}");
    let (_, s_small) = mean_std(&sample(2_500, 1000));
    let ratio = s_small / s;
    assert!((1.4..=2.6).contains(&ratio), "std ratio {ratio}");
}

#[test]
fn validation_score_equals_direct_path_sums() {
    let a0 = DriftMatrix::from_rows(&[
        vec![-0.8, 0.2, 0.0],
        vec![0.0, -0.4, 0.1],
        vec![0.3, 0.0, -1.0],
    ])
    .unwrap();
    let paths = simulate_euler(&a0, &InitialLaw::Zero, 12, 1.0, 0.05, 4).unwrap();
    let a = DMatrix::from_row_slice(3, 3, &[-0.5, 0.1, 0.2, 0.0, -0.9, 0.0, 0.4, -0.1, -0.3]);
    let (m, d) = (paths.grid_len(), 3);
    let mut direct = 0.0;
    for i in 0..paths.n_paths() {
        for k in 0..m - 1 {
            let x = nalgebra::DVector::from_column_slice(paths.state(i, k));
            let xn = nalgebra::DVector::from_column_slice(paths.state(i, k + 1));
            let ax = &a * &x;
            direct += -ax.dot(&(xn - &x)) + 0.5 * ax.norm_squared() * paths.step();
        }
    }
    direct /= paths.n_paths() as f64;
    let score = validation_score(&compute_suffstats(&paths).unwrap(), &DriftMatrix::new(a).unwrap())
        .unwrap();
    assert!((score - direct).abs() <= 1e-10 * direct.abs().max(1.0), "{score} vs {direct}");
    assert_eq!(d, paths.dim());
}

#[test]
fn true_drift_scores_better_than_doubled_drift() {
    let plan = ExperimentPlan::default();
    let d = 10;
    let a0 = generate_drift(d, &plan, plan.drift_seed(d)).unwrap();
    let paths = simulate_euler(&a0, &InitialLaw::Zero, 500, 1.0, 0.01, 77).unwrap();
    let (_, valid) = split_paths(&paths, 400).unwrap();
    let v = compute_suffstats(&valid).unwrap();
    let twice = DriftMatrix::new(a0.entries() * 2.0).unwrap();
    assert!(validation_score(&v, &a0).unwrap() <= validation_score(&v, &twice).unwrap());
}

#[test]
fn split_then_concatenate_is_identity() {
    let a0 = DriftMatrix::from_rows(&[vec![-1.0, 0.0], vec![0.5, -0.2]]).unwrap();
    let paths = simulate_euler(&a0, &InitialLaw::Zero, 500, 1.0, 0.01, 5).unwrap();
    let (t, v) = split_paths(&paths, 400).unwrap();
    assert_eq!((t.n_paths(), v.n_paths()), (400, 100));
    let joined: Vec<f64> = t.values().iter().chain(v.values()).copied().collect();
    assert_eq!(joined, paths.values());
    let (_, last) = split_paths(&paths, 499).unwrap();
    assert_eq!(last.n_paths(), 1);
    assert!(split_paths(&paths, 500).is_err());
    assert!(split_paths(&paths, 0).is_err());
}
