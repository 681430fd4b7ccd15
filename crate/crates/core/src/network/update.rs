use serde::{Deserialize, Serialize};

use super::{KanModel, NodeBasis, ParamBlock, PointSet};
use crate::basis::{build_adapted_grid, LocalBasis, refit_coefficients, Grid, GridMixConfig};
use crate::error::{Error, Result};

/// A node whose grid could not be adapted and was carried over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridWarning {
    pub layer: usize,
    pub node: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GridUpdateReport {
    pub warnings: Vec<GridWarning>,
    /// Least-squares refits that needed the damped fallback.
    pub damped_solves: usize,
}

/// Re-adapts every node grid to the inputs it sees on `points` and, when
/// `new_intervals` is given, enlarges it. Basis coefficients are refit by
/// least squares so each edge keeps its shape on the batch; `c_r` and `c_B`
/// are untouched. Layers are processed front to back, each one adapting to
/// the inputs produced by the layers already updated before it.
///
/// A node whose inputs are all equal keeps its previous knot range (re-meshed
/// uniformly if the size changes) and is reported as a warning.
pub fn update_grids(
    model: &KanModel,
    points: &PointSet,
    new_intervals: Option<usize>,
    cfg: &GridMixConfig,
) -> Result<(KanModel, GridUpdateReport)> {
    cfg.validate()?;
    if points.dim() != model.input_dim() {
        return Err(Error::InvalidShape(format!(
            "model expects {}-dimensional inputs, got {}",
            model.input_dim(),
            points.dim()
        )));
    }
    let family = model.family();
    let mut report = GridUpdateReport::default();
    let mut out = model.clone();
    // inputs of the current layer, produced by the already-updated layers
    let mut current = points.clone();
    let mut local = LocalBasis::default();

    for (l, layer) in out.layers.iter_mut().enumerate() {
        let old_g = layer.intervals();
        let g = new_intervals.unwrap_or(old_g);
        if g < old_g {
            return Err(Error::GridShrink { from: old_g, to: g });
        }
        family.validate(g)?;
        let n_basis = family.num_basis(g);
        let mut params = ParamBlock::zeros(layer.n_in(), layer.n_out(), n_basis);
        params.res_w.copy_from_slice(&layer.params.res_w);
        params.basis_w.copy_from_slice(&layer.params.basis_w);
        let mut nodes = Vec::with_capacity(layer.n_in());

        for (i, old_node) in layer.nodes.iter().enumerate() {
            let xs = current.column(i);
            let grid = match build_adapted_grid(&xs, g, family.grid_degree(), cfg) {
                Ok(grid) => grid,
                Err(err @ (Error::DegenerateRange { .. } | Error::InvalidArgument(_))) => {
                    report.warnings.push(GridWarning {
                        layer: l,
                        node: i,
                        reason: err.to_string(),
                    });
                    if g == old_g {
                        for j in 0..layer.n_out() {
                            let e = params.edge(j, i);
                            params
                                .edge_coeffs_mut(e)
                                .copy_from_slice(layer.params.edge_coeffs(e));
                        }
                        nodes.push(old_node.clone());
                        continue;
                    }
                    let old = old_node.grid();
                    Grid::uniform(old.lo(), old.hi(), g, family.grid_degree())?
                }
                Err(err) => return Err(err),
            };
            let node = NodeBasis::from_grid(family, grid)?;
            let old_b = old_node.eval_dense(&xs)?;
            let new_b = node.eval_dense(&xs)?;
            let edges: Vec<usize> = (0..layer.n_out()).map(|j| params.edge(j, i)).collect();
            let old_coeffs: Vec<&[f64]> = edges.iter().map(|&e| layer.params.edge_coeffs(e)).collect();
            let fit = refit_coefficients(&old_b, &new_b, &old_coeffs)?;
            if fit.damped {
                report.damped_solves += 1;
            }
            for (&e, c) in edges.iter().zip(fit.coeffs) {
                params.edge_coeffs_mut(e).copy_from_slice(&c);
            }
            nodes.push(node);
        }
        layer.nodes = nodes;
        layer.params = params;

        let mut next = PointSet::with_capacity(layer.n_out(), current.len());
        let mut row = vec![0.0; layer.n_out()];
        for x in current.iter() {
            layer.apply(x, &mut row, &mut local);
            next.push(&row);
        }
        current = next;
    }
    Ok((out, report))
}
