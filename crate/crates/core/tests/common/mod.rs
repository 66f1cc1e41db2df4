#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparse_ou::prox::{sorted_l1_norm, WeightVector};
use sparse_ou::SuffStats;

pub fn gen(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_matrix(gen: &mut impl Rng, rows: usize, cols: usize, r: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| gen.random_range(-r..r))
}

/// Statistics with `C = GGᵀ/(3d) + 0.2 I`, condition number at most ~20.
pub fn well_conditioned_stats(gen: &mut impl Rng, d: usize) -> SuffStats {
    let g = uniform_matrix(gen, d, 3 * d, 1.0);
    let c = &g * g.transpose() / (3 * d) as f64 + DMatrix::identity(d, d) * 0.2;
    let c = (&c + c.transpose()) * 0.5;
    let b = uniform_matrix(gen, d, d, 1.0);
    SuffStats::from_matrices(c, b, 100, 1.0, 0.01).unwrap()
}

/// Noiseless statistics `B = A C` for a given drift.
pub fn noiseless_stats(gen: &mut impl Rng, a: &DMatrix<f64>) -> SuffStats {
    let d = a.nrows();
    let g = uniform_matrix(gen, d, 3 * d, 1.0);
    let c = &g * g.transpose() / (3 * d) as f64 + DMatrix::identity(d, d) * 0.2;
    let c = (&c + c.transpose()) * 0.5;
    let b = a * &c;
    SuffStats::from_matrices(c, b, 100, 1.0, 0.01).unwrap()
}

/// Row-wise cyclic coordinate descent for
/// `½ tr(A C Aᵀ) - <A, B> + λ ||A||₁`, run to a stationary sweep.
pub fn lasso_coordinate_descent(stats: &SuffStats, lambda: f64) -> DMatrix<f64> {
    let d = stats.dim;
    let (c, b) = (&stats.c_hat, &stats.b_hat);
    let mut a = DMatrix::<f64>::zeros(d, d);
    for _ in 0..200_000 {
        let mut delta = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let mut r = b[(i, j)];
                for k in 0..d {
                    if k != j {
                        r -= c[(j, k)] * a[(i, k)];
                    }
                }
                let new = soft(r, lambda) / c[(j, j)];
                delta = delta.max((new - a[(i, j)]).abs());
                a[(i, j)] = new;
            }
        }
        if delta < 1e-15 {
            break;
        }
    }
    a
}

pub fn soft(x: f64, t: f64) -> f64 {
    x.signum() * (x.abs() - t).max(0.0)
}

pub fn prox_objective(x: &[f64], v: &[f64], w: &WeightVector, t: f64) -> f64 {
    let q: f64 = x.iter().zip(v).map(|(a, b)| 0.5 * (a - b).powi(2)).sum();
    q + t * sorted_l1_norm(x, w).unwrap()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Exhaustive minimizer over every candidate active set: a ranking of the
/// coordinates, a partition of the ranks into consecutive blocks that share a
/// level, and a number of trailing ranks pinned to zero.
pub fn brute_force(v: &[f64], w: &WeightVector, t: f64) -> (Vec<f64>, f64) {
    let p = v.len();
    let ws = w.as_slice();
    let mut best = (vec![0.0; p], f64::INFINITY);
    let mut x = vec![0.0; p];
    for perm in permutations(p) {
        for cuts in 0u32..(1 << (p.saturating_sub(1))) {
            for zeros in 0..=p {
                let active = p - zeros;
                let mut start = 0;
                while start < p {
                    let mut end = start + 1;
                    while end < p && cuts & (1 << (end - 1)) == 0 {
                        end += 1;
                    }
                    for r in start..end {
                        x[perm[r]] = 0.0;
                    }
                    if start < active {
                        let hi = end.min(active);
                        let level = (start..hi)
                            .map(|r| v[perm[r]].abs() - t * ws[r])
                            .sum::<f64>()
                            / (hi - start) as f64;
                        for r in start..hi {
                            x[perm[r]] = level.abs().copysign(v[perm[r]]);
                        }
                    }
                    start = end;
                }
                let f = prox_objective(&x, v, w, t);
                if f < best.1 {
                    best = (x.clone(), f);
                }
            }
        }
    }
    best
}
