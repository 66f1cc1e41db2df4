//! Matrix exponential by scaling and squaring with diagonal Padé
//! approximants (degrees 3, 5, 7, 9, 13), and the Van Loan block identity for
//! the covariance integral of a linear SDE.

use nalgebra::DMatrix;

use crate::error::{OuError, Result};
use crate::linalg::{all_finite, symmetrize};

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

// 1-norm thresholds below which the degree-m approximant is accurate to
// unit round-off (Higham 2005).
const THETA3: f64 = 1.495585217958292e-2;
const THETA5: f64 = 2.53939833006323e-1;
const THETA7: f64 = 9.504178996162932e-1;
const THETA9: f64 = 2.097847961257068;
const THETA13: f64 = 5.371920351148152;

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Padé approximant of degree `b.len() - 1 <= 9` from the even/odd split.
fn pade_low(a: &DMatrix<f64>, b: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let ident = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;
    let mut powers = vec![ident.clone(), a2.clone()];
    let half = (b.len() - 1) / 2;
    for _ in 2..=half {
        let next = powers.last().unwrap() * &a2;
        powers.push(next);
    }
    let mut u = DMatrix::zeros(n, n);
    let mut v = DMatrix::zeros(n, n);
    for (k, p) in powers.iter().enumerate() {
        u += p * b[2 * k + 1];
        v += p * b[2 * k];
    }
    (a * u, v)
}

fn pade13(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let b = &PADE13;
    let n = a.nrows();
    let ident = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]);
    let u = a * (inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &ident * b[1]);
    let inner_v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]);
    let v = inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &ident * b[0];
    (u, v)
}

fn pade_solve(u: DMatrix<f64>, v: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = &v + &u;
    let q = v - u;
    q.lu()
        .solve(&p)
        .ok_or_else(|| OuError::numerical("singular Padé denominator in matrix exponential"))
}

/// `exp(m)` for a square real matrix.
pub fn matrix_exponential(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(OuError::invalid("matrix exponential needs a square matrix"));
    }
    if !all_finite(m) {
        return Err(OuError::invalid("matrix exponential of non-finite entries"));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let norm = one_norm(m);
    for (theta, coeffs) in [
        (THETA3, &PADE3[..]),
        (THETA5, &PADE5[..]),
        (THETA7, &PADE7[..]),
        (THETA9, &PADE9[..]),
    ] {
        if norm <= theta {
            let (u, v) = pade_low(m, coeffs);
            return pade_solve(u, v);
        }
    }
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scaled = m * 2f64.powi(-squarings);
    let (u, v) = pade13(&scaled);
    let mut r = pade_solve(u, v)?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    if !all_finite(&r) {
        return Err(OuError::numerical("matrix exponential overflowed"));
    }
    Ok(r)
}

/// `(exp(t A), ∫₀ᵗ exp(sA) exp(sAᵀ) ds)` from one exponential of the block
/// matrix `[[A, I], [0, -Aᵀ]] t`.
///
/// With `exp(.) = [[F, G], [0, exp(-Aᵀt)]]` the integral equals `G Fᵀ`.
pub fn van_loan(a: &DMatrix<f64>, t: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let d = a.nrows();
    let mut block = DMatrix::zeros(2 * d, 2 * d);
    block.view_mut((0, 0), (d, d)).copy_from(a);
    block
        .view_mut((0, d), (d, d))
        .copy_from(&DMatrix::<f64>::identity(d, d));
    block.view_mut((d, d), (d, d)).copy_from(&(-a.transpose()));
    let e = matrix_exponential(&(block * t))?;
    let f = e.view((0, 0), (d, d)).into_owned();
    let g = e.view((0, d), (d, d)).into_owned();
    let gram = symmetrize(&(g * f.transpose()));
    Ok((f, gram))
}
