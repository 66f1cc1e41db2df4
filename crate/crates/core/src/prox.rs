//! Proximal operators for the l1 and sorted-l1 (Slope) penalties.

use serde::{Deserialize, Serialize};

use crate::error::{OuError, Result};

/// Nonincreasing positive weights `w_1 >= w_2 >= ... >= w_p > 0` of a
/// sorted-l1 norm `Σ_i w_i |v|_(i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(OuError::invalid("weight vector is empty"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(OuError::invalid("weights must be positive and finite"));
        }
        if weights.windows(2).any(|p| p[0] < p[1]) {
            return Err(OuError::invalid("weights must be nonincreasing"));
        }
        Ok(Self(weights))
    }

    /// `p` copies of `c`.
    pub fn constant(p: usize, c: f64) -> Result<Self> {
        Self::new(vec![c; p])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = OuError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Self {
        w.0
    }
}

/// `w_i = sqrt(log(2p / i))`, `i = 1..p`.
///
/// For a `d x d` drift the vectorized length is `p = d²`.
pub fn slope_weights(p: usize) -> Result<WeightVector> {
    if p < 1 {
        return Err(OuError::invalid("slope weights need p >= 1"));
    }
    let two_p = 2.0 * p as f64;
    WeightVector::new((1..=p).map(|i| (two_p / i as f64).ln().sqrt()).collect())
}

/// `Σ_i |v_i|`
pub fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// `Σ_i w_i |v|_(i)` with `|v|_(1) >= |v|_(2) >= ...`.
pub fn sorted_l1_norm(v: &[f64], w: &WeightVector) -> Result<f64> {
    if v.len() != w.len() {
        return Err(OuError::invalid(format!(
            "vector length {} does not match weight length {}",
            v.len(),
            w.len()
        )));
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    Ok(mags.iter().zip(w.as_slice()).map(|(m, wi)| m * wi).sum())
}

/// Soft thresholding `sign(v) max(|v| - t, 0)`.
pub fn prox_l1(v: &[f64], t: f64) -> Result<Vec<f64>> {
    if !(t >= 0.0) {
        return Err(OuError::invalid(format!("threshold must be >= 0, got {t}")));
    }
    Ok(v.iter().map(|&x| soft(x, t)).collect())
}

#[inline]
pub(crate) fn soft(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// `argmin_x ½||x - v||² + t Σ_i w_i |x|_(i)`.
///
/// Sorts `|v|` in decreasing order (stable, so ties keep index order),
/// subtracts `t w`, projects onto the nonincreasing cone with a single
/// stack-based pool-adjacent-violators pass, clips at zero, and restores the
/// original order and signs.
pub fn prox_sorted_l1(v: &[f64], w: &WeightVector, t: f64) -> Result<Vec<f64>> {
    if v.len() != w.len() {
        return Err(OuError::invalid(format!(
            "vector length {} does not match weight length {}",
            v.len(),
            w.len()
        )));
    }
    if !(t >= 0.0) {
        return Err(OuError::invalid(format!("threshold must be >= 0, got {t}")));
    }
    let mut out = vec![0.0; v.len()];
    prox_sorted_l1_into(v, w.as_slice(), t, &mut out, &mut Scratch::default());
    Ok(out)
}

/// Reusable buffers for repeated prox evaluations inside a solver loop.
#[derive(Default)]
pub(crate) struct Scratch {
    order: Vec<usize>,
    // (sum, count) blocks of the PAV stack
    blocks: Vec<(f64, usize)>,
}

pub(crate) fn prox_sorted_l1_into(
    v: &[f64],
    w: &[f64],
    t: f64,
    out: &mut [f64],
    scratch: &mut Scratch,
) {
    let p = v.len();
    let order = &mut scratch.order;
    order.clear();
    order.extend(0..p);
    order.sort_by(|&a, &b| v[b].abs().total_cmp(&v[a].abs()));

    let blocks = &mut scratch.blocks;
    blocks.clear();
    for (rank, &idx) in order.iter().enumerate() {
        let mut sum = v[idx].abs() - t * w[rank];
        let mut count = 1usize;
        // merge while the previous block mean does not exceed the new one
        while let Some(&(psum, pcount)) = blocks.last() {
            if psum * count as f64 <= sum * pcount as f64 {
                sum += psum;
                count += pcount;
                blocks.pop();
            } else {
                break;
            }
        }
        blocks.push((sum, count));
    }

    let mut rank = 0;
    for &(sum, count) in blocks.iter() {
        let level = (sum / count as f64).max(0.0);
        for &idx in &order[rank..rank + count] {
            out[idx] = level.copysign(v[idx]);
            if level == 0.0 {
                out[idx] = 0.0;
            }
        }
        rank += count;
    }
}
