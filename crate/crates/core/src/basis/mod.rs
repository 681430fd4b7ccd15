//! Grid-dependent basis families: degree-`k` B-splines and the grid-adaptive
//! squared-ReLU `R` basis, plus grid adaptation and least-squares refits.

mod grid;
mod refit;
mod relu;
mod spline;

pub use grid::{build_adapted_grid, grid_candidates, Grid, GridCandidates, GridMixConfig, MAX_DEGREE};
#[allow(unused_imports)]
pub(crate) use grid::{linspace, quantile_sorted};
pub use refit::{extend_and_refit, refit_coefficients, solve_normal_equations, RefitOutcome};
pub use relu::{build_r_basis, eval_r_basis, eval_r_basis_derivs, eval_r_local, RBasisParams};
pub use spline::{eval_spline_basis, eval_spline_basis_derivs, eval_spline_local};

/// Nonzero slice of a basis family at one point: values and derivatives up
/// to third order for functions `start..start + len()`.
#[derive(Debug, Clone, Default)]
pub struct LocalBasis {
    pub start: usize,
    pub d0: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    pub d3: Vec<f64>,
    orders: usize,
}

impl LocalBasis {
    pub(crate) fn clear(&mut self, orders: usize) {
        self.start = 0;
        self.orders = orders;
        self.d0.clear();
        self.d1.clear();
        self.d2.clear();
        self.d3.clear();
    }

    pub(crate) fn push(&mut self, d: [f64; 4]) {
        self.d0.push(d[0]);
        self.d1.push(d[1]);
        self.d2.push(d[2]);
        self.d3.push(d[3]);
    }

    pub fn len(&self) -> usize {
        self.d0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d0.is_empty()
    }

    /// Highest derivative order that was requested when this was filled.
    pub fn orders(&self) -> usize {
        self.orders
    }

    pub fn order(&self, order: usize) -> &[f64] {
        match order {
            0 => &self.d0,
            1 => &self.d1,
            2 => &self.d2,
            3 => &self.d3,
            _ => panic!("basis derivative order {order} not tracked"),
        }
    }

    /// `(function index, value)` pairs for one derivative order.
    pub fn iter_order(&self, order: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let start = self.start;
        self.order(order)
            .iter()
            .enumerate()
            .map(move |(j, &v)| (start + j, v))
    }
}
