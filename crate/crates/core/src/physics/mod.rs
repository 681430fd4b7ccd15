//! PDE problems, physics-informed losses, attention weights, adaptive
//! resampling and error metrics.

mod loss;
mod problem;
mod rad;
mod reference;
mod sobol;

pub use loss::{
    fit_loss, fit_loss_and_grad, loss_from_residuals, pde_residual, physics_loss, physics_loss_and_grad, rba_update,
    residuals, residuals_of_field, LossBreakdown, RbaWeights,
};
pub use problem::{
    builtin_problems, AnalyticReference, Axis, BoundarySpec, BoundaryTarget, CollocationSet, FieldScalar, Fields,
    FitTask, PdeKind, PdeProblem, Task, DEFAULT_N_B, DEFAULT_N_F,
};
pub use rad::{draw_without_replacement, fraction_in_box, rad_probabilities, rad_resample, RadConfig, RadOutcome};
pub use reference::{
    eval_lattice, relative_l2, relative_l2_values, relative_l2_with, GridTable, ReferenceSolution, EVAL_LATTICE,
};
pub use sobol::{sobol_sample, Sobol, SOBOL_MAX_DIM};
