use nalgebra::{DMatrix, DVector};

use super::grid::{build_adapted_grid, Grid, GridMixConfig};
use super::spline::eval_spline_basis;
use crate::error::{Error, Result};

/// Tikhonov term added to the Gram diagonal when the plain solve is
/// rank-deficient.
pub const REFIT_DAMPING: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct RefitOutcome {
    /// One coefficient vector per right-hand side.
    pub coeffs: Vec<Vec<f64>>,
    /// Whether the damped fallback was needed.
    pub damped: bool,
}

fn well_conditioned(chol: &nalgebra::Cholesky<f64, nalgebra::Dyn>, gram: &DMatrix<f64>) -> bool {
    let max_diag = gram.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let l = chol.l_dirty();
    (0..gram.nrows()).all(|i| {
        let p = l[(i, i)];
        p.is_finite() && p * p > 1e-13 * max_diag
    })
}

/// Solves `gram * x = rhs_j` for every column of `rhs` by Cholesky, adding
/// [`REFIT_DAMPING`] to the diagonal (and growing it if needed) when the
/// plain factorization is singular or numerically rank-deficient.
pub fn solve_normal_equations(gram: &DMatrix<f64>, rhs: &DMatrix<f64>) -> (DMatrix<f64>, bool) {
    if let Some(chol) = gram.clone().cholesky() {
        if well_conditioned(&chol, gram) {
            return (chol.solve(rhs), false);
        }
    }
    let mut damping = REFIT_DAMPING;
    loop {
        let mut g = gram.clone();
        for i in 0..g.nrows() {
            g[(i, i)] += damping;
        }
        if let Some(chol) = g.cholesky() {
            return (chol.solve(rhs), true);
        }
        damping *= 100.0;
    }
}

/// Least-squares coefficients on the `new` basis that reproduce, at the
/// sample points, the expansions `old * c` for every `c` in `old_coeffs`.
/// Both matrices hold one row per sample point.
pub fn refit_coefficients(
    old: &DMatrix<f64>,
    new: &DMatrix<f64>,
    old_coeffs: &[&[f64]],
) -> Result<RefitOutcome> {
    if old.nrows() != new.nrows() {
        return Err(Error::InvalidArgument(format!(
            "basis matrices evaluated on different batches ({} vs {} rows)",
            old.nrows(),
            new.nrows()
        )));
    }
    let mut targets = DMatrix::zeros(old.nrows(), old_coeffs.len());
    for (j, c) in old_coeffs.iter().enumerate() {
        if c.len() != old.ncols() {
            return Err(Error::InvalidArgument(format!(
                "coefficient vector has length {}, basis has {} functions",
                c.len(),
                old.ncols()
            )));
        }
        let y = old * DVector::from_column_slice(c);
        targets.set_column(j, &y);
    }
    let nt = new.transpose();
    let gram = &nt * new;
    let rhs = &nt * targets;
    let (sol, damped) = solve_normal_equations(&gram, &rhs);
    let coeffs = (0..old_coeffs.len())
        .map(|j| sol.column(j).iter().copied().collect())
        .collect();
    Ok(RefitOutcome { coeffs, damped })
}

/// Adapts (and optionally enlarges) a spline grid to `inputs`, then refits
/// `old_coeffs` so the new expansion matches the old one on those inputs.
pub fn extend_and_refit(
    old_grid: &Grid,
    old_coeffs: &[f64],
    inputs: &[f64],
    new_intervals: usize,
    cfg: &GridMixConfig,
) -> Result<(Grid, Vec<f64>)> {
    if new_intervals < old_grid.intervals() {
        return Err(Error::GridShrink {
            from: old_grid.intervals(),
            to: new_intervals,
        });
    }
    let new_grid = build_adapted_grid(inputs, new_intervals, old_grid.degree(), cfg)?;
    let old_b = eval_spline_basis(old_grid, inputs)?;
    let new_b = eval_spline_basis(&new_grid, inputs)?;
    let mut out = refit_coefficients(&old_b, &new_b, &[old_coeffs])?;
    Ok((new_grid, out.coeffs.remove(0)))
}
