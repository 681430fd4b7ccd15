//! B-spline evaluation on augmented grids.
//!
//! Values and derivatives come from the iterative triangular Cox-de Boor
//! scheme (only the `k + 1` functions that are nonzero at `x` are touched).

use nalgebra::DMatrix;

use super::grid::{Grid, MAX_DEGREE};
use super::LocalBasis;
use crate::error::{Error, Result};

const W: usize = MAX_DEGREE + 1;

/// Span index `s` in `knots` with `knots[s] <= x < knots[s + 1]`.
fn find_span(knots: &[f64], x: f64) -> Option<usize> {
    let last = knots.len() - 1;
    if !(x >= knots[0]) || x >= knots[last] {
        return None;
    }
    // first index whose knot is > x, minus one
    Some(knots.partition_point(|&t| t <= x) - 1)
}

/// Derivatives up to order `n` of the `k + 1` functions that can be nonzero
/// at `x`, by the triangular Cox-de Boor scheme. Returns the augmented
/// index of the first of them, which may be negative near the left end.
fn de_boor(grid: &Grid, x: f64, n: usize, ders: &mut [[f64; W]; W]) -> Option<isize> {
    let p = grid.degree();
    let knots = grid.padded_knots();
    let span = find_span(knots, x)?;
    // padded function index j maps to augmented index j - p
    let first = span as isize - 2 * p as isize;

    let mut ndu = [[0.0f64; W]; W];
    let mut left = [0.0f64; W];
    let mut right = [0.0f64; W];
    ndu[0][0] = 1.0;
    for j in 1..=p {
        left[j] = x - knots[span + 1 - j];
        right[j] = knots[span + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }

    let n = n.min(p);
    *ders = [[0.0; W]; W];
    for j in 0..=p {
        ders[0][j] = ndu[j][p];
    }
    let mut a = [[0.0f64; W]; 2];
    for r in 0..=p {
        let (mut s1, mut s2) = (0usize, 1usize);
        a[0][0] = 1.0;
        for k in 1..=n {
            let mut d = 0.0;
            let rk = r as isize - k as isize;
            let pk = p - k;
            if r >= k {
                let rk = rk as usize;
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
                d = a[s2][0] * ndu[rk][pk];
            }
            let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2 = if r as isize - 1 <= pk as isize { k - 1 } else { p - r };
            for j in j1..=j2 {
                let idx = (rk + j as isize) as usize;
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                d += a[s2][j] * ndu[idx][pk];
            }
            if r <= pk {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            ders[k][r] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut factor = p as f64;
    for k in 1..=n {
        for v in ders[k].iter_mut().take(p + 1) {
            *v *= factor;
        }
        factor *= (p - k) as f64;
    }
    Some(first)
}

/// Functions of the augmented grid that exist, among the `k + 1` starting
/// at `first`.
fn clip(grid: &Grid, first: isize) -> (usize, usize) {
    let p = grid.degree() as isize;
    let lo = first.max(0) as usize;
    let hi = ((first + p + 1).min(grid.num_spline_basis() as isize)).max(lo as isize) as usize;
    (lo, hi)
}

/// Nonzero functions of every augmented knot span, as polynomials in the
/// offset from the span's left knot.
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct SpanTable {
    starts: Vec<usize>,
    counts: Vec<usize>,
    // span-major, then function, then power; `(k + 1)^2` per span
    coeffs: Vec<f64>,
}

impl SpanTable {
    pub(crate) fn build(grid: &Grid) -> Self {
        let p = grid.degree();
        let aug = grid.augmented_knots();
        let spans = aug.len() - 1;
        let stride = (p + 1) * (p + 1);
        let mut t = Self {
            starts: Vec::with_capacity(spans),
            counts: Vec::with_capacity(spans),
            coeffs: vec![0.0; spans * stride],
        };
        let mut ders = [[0.0; W]; W];
        for s in 0..spans {
            let first = de_boor(grid, aug[s], p, &mut ders).expect("span start lies inside the padded grid");
            let (lo, hi) = clip(grid, first);
            t.starts.push(lo);
            t.counts.push(hi - lo);
            for (f, idx) in (lo..hi).enumerate() {
                let j = (idx as isize - first) as usize;
                let row = &mut t.coeffs[s * stride + f * (p + 1)..][..p + 1];
                let mut fact = 1.0;
                for (m, c) in row.iter_mut().enumerate() {
                    if m > 0 {
                        fact *= m as f64;
                    }
                    *c = ders[m][j] / fact;
                }
            }
        }
        t
    }
}

/// Fills `out` with the nonzero degree-`k` basis functions at `x` and their
/// derivatives up to `orders` (at most 3). Indices refer to the `G + k`
/// functions of the augmented grid.
pub fn eval_spline_local(grid: &Grid, x: f64, orders: usize, out: &mut LocalBasis) {
    out.clear(orders);
    // every function vanishes outside the augmented range
    let aug = grid.augmented_knots();
    if !(x >= aug[0] && x < aug[aug.len() - 1]) {
        return;
    }
    let s = aug.partition_point(|&t| t <= x) - 1;
    let h = x - aug[s];
    let p = grid.degree();
    let t = grid.span_table();
    let stride = (p + 1) * (p + 1);
    out.start = t.starts[s];
    for f in 0..t.counts[s] {
        let c = &t.coeffs[s * stride + f * (p + 1)..][..p + 1];
        // Horner with derivatives
        let (mut v, mut d1, mut d2, mut d3) = (c[p], 0.0, 0.0, 0.0);
        for &cm in c[..p].iter().rev() {
            d3 = d3 * h + d2;
            d2 = d2 * h + d1;
            d1 = d1 * h + v;
            v = v * h + cm;
        }
        out.push([v, d1, 2.0 * d2, 6.0 * d3]);
    }
}

/// Same as [`eval_spline_local`], straight from the de Boor recurrences.
#[cfg(test)]
fn eval_spline_local_direct(grid: &Grid, x: f64, orders: usize, out: &mut LocalBasis) {
    out.clear(orders);
    let aug = grid.augmented_knots();
    if !(x >= aug[0] && x < aug[aug.len() - 1]) {
        return;
    }
    let mut ders = [[0.0; W]; W];
    let Some(first) = de_boor(grid, x, orders.min(3), &mut ders) else {
        return;
    };
    let (lo, hi) = clip(grid, first);
    out.start = lo;
    for idx in lo..hi {
        let j = (idx as isize - first) as usize;
        out.push([ders[0][j], ders[1][j], ders[2][j], ders[3][j]]);
    }
}

fn check_finite(xs: &[f64]) -> Result<()> {
    match xs.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite {
            index,
            value: xs[index],
        }),
        None => Ok(()),
    }
}

fn dense(grid: &Grid, xs: &[f64], order: usize) -> Result<DMatrix<f64>> {
    check_finite(xs)?;
    let mut m = DMatrix::zeros(xs.len(), grid.num_spline_basis());
    let mut local = LocalBasis::default();
    for (row, &x) in xs.iter().enumerate() {
        eval_spline_local(grid, x, order, &mut local);
        for (i, v) in local.iter_order(order) {
            m[(row, i)] = v;
        }
    }
    Ok(m)
}

/// Basis values, one row per input and one column per spline function.
pub fn eval_spline_basis(grid: &Grid, xs: &[f64]) -> Result<DMatrix<f64>> {
    dense(grid, xs, 0)
}

/// First or second derivatives of every basis function.
pub fn eval_spline_basis_derivs(grid: &Grid, xs: &[f64], order: usize) -> Result<DMatrix<f64>> {
    if order == 0 || order > 2 {
        return Err(Error::InvalidArgument(format!(
            "derivative order must be 1 or 2, got {order}"
        )));
    }
    if order > grid.degree() {
        return Err(Error::InvalidArgument(format!(
            "derivative order {order} exceeds spline degree {}",
            grid.degree()
        )));
    }
    dense(grid, xs, order)
}
