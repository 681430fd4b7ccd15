//! Squared-ReLU bump functions `R_i(x) = [r_i (e_i - x)_+ (x - s_i)_+]^2`
//! centred on grid points, with widths that follow the local grid spacing.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::grid::Grid;
use super::LocalBasis;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RBasisParams {
    pub starts: Vec<f64>,
    pub ends: Vec<f64>,
    pub norms: Vec<f64>,
    pub p: usize,
    pub k: usize,
}

impl RBasisParams {
    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    pub fn center(&self, i: usize) -> f64 {
        0.5 * (self.starts[i] + self.ends[i])
    }

    pub fn width(&self, i: usize) -> f64 {
        self.ends[i] - self.starts[i]
    }
}

/// Builds one bump per grid point.
///
/// The grid is first extended by `p` points at each end; every new end point
/// sits `1/k` of the distance to its `k`-th neighbour beyond the current end.
/// Bump `i` is then centred on grid point `i` and spans the distance between
/// its `p`-th neighbours on either side.
pub fn build_r_basis(grid: &Grid, p: usize, k: usize) -> Result<RBasisParams> {
    let g = grid.intervals();
    if p == 0 || k == 0 {
        return Err(Error::InvalidArgument(format!(
            "R basis needs p >= 1 and k >= 1, got p={p}, k={k}"
        )));
    }
    if k > g {
        return Err(Error::InvalidArgument(format!(
            "R basis edge augmentation needs k <= G, got k={k}, G={g}"
        )));
    }
    let mut ext: Vec<f64> = grid.knots().to_vec();
    let kf = k as f64;
    for _ in 0..p {
        let last = ext.len() - 1;
        let p_s = ext[0] - (ext[k] - ext[0]) / kf;
        let p_e = ext[last] + (ext[last] - ext[last - k]) / kf;
        ext.insert(0, p_s);
        ext.push(p_e);
    }
    let mut starts = Vec::with_capacity(g + 1);
    let mut ends = Vec::with_capacity(g + 1);
    let mut norms = Vec::with_capacity(g + 1);
    for i in p..=g + p {
        let s = ext[i] - 0.5 * (ext[i + p] - ext[i - p]);
        let e = 2.0 * ext[i] - s;
        starts.push(s);
        ends.push(e);
        norms.push(4.0 / ((e - s) * (e - s)));
    }
    Ok(RBasisParams {
        starts,
        ends,
        norms,
        p,
        k,
    })
}

#[inline]
fn bump(s: f64, e: f64, r: f64, x: f64) -> [f64; 4] {
    if !(x > s && x < e) {
        return [0.0; 4];
    }
    let q = (e - x) * (x - s);
    let dq = e + s - 2.0 * x;
    let r2 = r * r;
    [
        r2 * q * q,
        2.0 * r2 * q * dq,
        2.0 * r2 * (dq * dq - 2.0 * q),
        -12.0 * r2 * dq,
    ]
}

/// Fills `out` with the bumps that are nonzero at `x`, as one contiguous
/// index range (interior zeros are kept).
pub fn eval_r_local(params: &RBasisParams, x: f64, orders: usize, out: &mut LocalBasis) {
    out.clear(orders);
    let n = params.len();
    let inside = |i: usize| x > params.starts[i] && x < params.ends[i];
    let Some(first) = (0..n).find(|&i| inside(i)) else {
        return;
    };
    let last = (first..n).rev().find(|&i| inside(i)).unwrap_or(first);
    out.start = first;
    for i in first..=last {
        out.push(bump(params.starts[i], params.ends[i], params.norms[i], x));
    }
}

fn dense(params: &RBasisParams, xs: &[f64], order: usize) -> Result<DMatrix<f64>> {
    if let Some(index) = xs.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            index,
            value: xs[index],
        });
    }
    let mut m = DMatrix::zeros(xs.len(), params.len());
    for (row, &x) in xs.iter().enumerate() {
        for i in 0..params.len() {
            m[(row, i)] = bump(params.starts[i], params.ends[i], params.norms[i], x)[order];
        }
    }
    Ok(m)
}

pub fn eval_r_basis(params: &RBasisParams, xs: &[f64]) -> Result<DMatrix<f64>> {
    dense(params, xs, 0)
}

/// First or second derivative of every bump. The second derivative jumps at
/// each `s_i` and `e_i`.
pub fn eval_r_basis_derivs(params: &RBasisParams, xs: &[f64], order: usize) -> Result<DMatrix<f64>> {
    if order == 0 || order > 2 {
        return Err(Error::InvalidArgument(format!(
            "derivative order must be 1 or 2, got {order}"
        )));
    }
    dense(params, xs, order)
}
