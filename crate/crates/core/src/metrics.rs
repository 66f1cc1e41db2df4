//! Error metrics between an estimate and the true drift.

use std::collections::BTreeSet;

use nalgebra::DMatrix;

use crate::ou_process::DriftMatrix;

/// Magnitude above which an entry counts as part of an estimated support.
pub const SUPPORT_THRESHOLD: f64 = 1e-6;

/// `d⁻¹ Σ_ij (Â_ij - A_ij)²`
pub fn scaled_l2sq(estimate: &DMatrix<f64>, truth: &DMatrix<f64>) -> f64 {
    (estimate - truth).norm_squared() / truth.nrows() as f64
}

/// `d⁻¹ Σ_ij |Â_ij - A_ij|`
pub fn scaled_l1(estimate: &DMatrix<f64>, truth: &DMatrix<f64>) -> f64 {
    (estimate - truth).iter().map(|x| x.abs()).sum::<f64>() / truth.nrows() as f64
}

/// Frobenius (vectorized l2) distance.
pub fn l2_distance(estimate: &DMatrix<f64>, truth: &DMatrix<f64>) -> f64 {
    (estimate - truth).norm()
}

/// F1 score of `supp(estimate, threshold)` against the exact support of
/// `truth`. Two empty supports score 1.
pub fn support_f1(estimate: &DriftMatrix, truth: &DriftMatrix, threshold: f64) -> f64 {
    let est = estimate.support(threshold);
    let tru = truth.true_support();
    f1(&est, &tru)
}

fn f1(est: &BTreeSet<(usize, usize)>, tru: &BTreeSet<(usize, usize)>) -> f64 {
    if est.is_empty() && tru.is_empty() {
        return 1.0;
    }
    let tp = est.intersection(tru).count() as f64;
    2.0 * tp / (est.len() + tru.len()) as f64
}

/// Count of entries with `|x| > threshold`.
pub fn count_nonzero(m: &DMatrix<f64>, threshold: f64) -> usize {
    m.iter().filter(|x| x.abs() > threshold).count()
}

/// Heatmap display transform `sign(x) log(1 + |x| / 0.01)`.
pub fn display_scale(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum() * (x.abs() / 0.01).ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaled_distances() {
        let t = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let e = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.0, -1.0]);
        assert_eq!(scaled_l2sq(&e, &t), 0.25);
        assert_eq!(scaled_l1(&e, &t), 0.5);
    }

    #[test]
    fn f1_cases() {
        let t = DriftMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(support_f1(&t, &t, SUPPORT_THRESHOLD), 1.0);
        let e = DriftMatrix::from_rows(&[vec![1.0, 1e-7], vec![0.3, 0.0]]).unwrap();
        // est {(0,0),(1,0)}, true {(0,0),(1,1)}: tp = 1
        assert_eq!(support_f1(&e, &t, SUPPORT_THRESHOLD), 0.5);
        let z = DriftMatrix::zeros(2);
        assert_eq!(support_f1(&z, &z, SUPPORT_THRESHOLD), 1.0);
        assert_eq!(support_f1(&z, &t, SUPPORT_THRESHOLD), 0.0);
    }

    #[test]
    fn display_transform_is_odd_and_monotone() {
        assert_eq!(display_scale(0.0), 0.0);
        let xs: Vec<f64> = (-200..=200).map(|k| k as f64 * 0.013).collect();
        for w in xs.windows(2) {
            assert!(display_scale(w[1]) > display_scale(w[0]));
        }
        for &x in &xs {
            assert_eq!(display_scale(-x), -display_scale(x));
        }
        assert!((display_scale(0.01) - 2f64.ln()).abs() < 1e-15);
    }
}
