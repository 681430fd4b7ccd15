use serde::{Deserialize, Serialize};

use super::problem::{CollocationSet, Fields, PdeProblem};
use crate::diffengine::{accumulate_loss_gradient, eval_jets, JetSpec, Lin};
use crate::error::{Error, Result};
use crate::network::{KanModel, ParamSet, PointSet};

/// Residual-based attention weights, one vector per residual family
/// (interior first, then the boundary families in problem order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbaWeights {
    pub alpha: Vec<Vec<f64>>,
    pub eta: f64,
}

impl RbaWeights {
    /// All weights start at one.
    pub fn new(sizes: &[usize], eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidArgument(format!("RBA eta must lie in [0, 1], got {eta}")));
        }
        Ok(Self {
            alpha: sizes.iter().map(|&n| vec![1.0; n]).collect(),
            eta,
        })
    }

    pub fn for_collocation(colloc: &CollocationSet, eta: f64) -> Result<Self> {
        Self::new(&colloc.family_sizes(), eta)
    }

    fn check_sizes(&self, sizes: &[usize]) -> Result<()> {
        let own: Vec<usize> = self.alpha.iter().map(Vec::len).collect();
        if own != sizes {
            return Err(Error::InvalidShape(format!(
                "RBA weights sized {own:?} do not match residual families {sizes:?}"
            )));
        }
        Ok(())
    }
}

/// `alpha' = (1 - eta) alpha + eta |r| / max|r|` within every family.
/// A family whose residuals are all zero keeps its weights.
pub fn rba_update(rba: &RbaWeights, residuals: &[Vec<f64>]) -> Result<RbaWeights> {
    let sizes: Vec<usize> = residuals.iter().map(Vec::len).collect();
    rba.check_sizes(&sizes)?;
    let mut out = rba.clone();
    for (alpha, r) in out.alpha.iter_mut().zip(residuals) {
        let max = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if max == 0.0 {
            continue;
        }
        if !max.is_finite() {
            return Err(Error::NonFinite {
                index: r.iter().position(|v| !v.is_finite()).unwrap_or(0),
                value: max,
            });
        }
        for (a, v) in alpha.iter_mut().zip(r) {
            *a = (1.0 - rba.eta) * *a + rba.eta * (v.abs() / max);
        }
    }
    Ok(out)
}

/// Loss value with its individual terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    /// Mean squared (weighted) interior residual, before `w_f`.
    pub interior: f64,
    /// Mean squared (weighted) residual of each boundary family, before `w_b`.
    pub boundary: Vec<f64>,
}

fn mean_square(r: &[f64], alpha: Option<&[f64]>) -> f64 {
    if r.is_empty() {
        return 0.0;
    }
    let s: f64 = match alpha {
        Some(a) => r.iter().zip(a).map(|(r, a)| (a * r) * (a * r)).sum(),
        None => r.iter().map(|r| r * r).sum(),
    };
    s / r.len() as f64
}

/// Assembles the loss from residual families, each residual scaled by its
/// attention weight before squaring when `rba` is given.
pub fn loss_from_residuals(problem: &PdeProblem, residuals: &[Vec<f64>], rba: Option<&RbaWeights>) -> Result<LossBreakdown> {
    if residuals.len() != problem.boundaries.len() + 1 {
        return Err(Error::InvalidShape(format!(
            "expected {} residual families, got {}",
            problem.boundaries.len() + 1,
            residuals.len()
        )));
    }
    if let Some(w) = rba {
        w.check_sizes(&residuals.iter().map(Vec::len).collect::<Vec<_>>())?;
    }
    let alpha = |k: usize| rba.map(|w| w.alpha[k].as_slice());
    let interior = mean_square(&residuals[0], alpha(0));
    let boundary: Vec<f64> = (1..residuals.len()).map(|k| mean_square(&residuals[k], alpha(k))).collect();
    let total = problem.w_f * interior
        + problem.boundaries.iter().zip(&boundary).map(|(b, l)| b.weight * l).sum::<f64>();
    Ok(LossBreakdown { total, interior, boundary })
}

fn check_model(problem: &PdeProblem, model: &KanModel) -> Result<()> {
    if model.input_dim() != problem.dim() || model.output_dim() != 1 {
        return Err(Error::InvalidShape(format!(
            "problem '{}' needs a {} -> 1 model, got {} -> {}",
            problem.name,
            problem.dim(),
            model.input_dim(),
            model.output_dim()
        )));
    }
    Ok(())
}

/// Interior residual `F(u) - f` at `points` given in problem coordinates.
pub fn pde_residual(problem: &PdeProblem, model: &KanModel, points: &PointSet) -> Result<Vec<f64>> {
    check_model(problem, model)?;
    let jets = eval_jets(model, &problem.to_inputs(points), problem.residual_spec())?;
    points
        .iter()
        .zip(&jets)
        .map(|(x, j)| Ok(problem.residual(x, &Fields::from_jet(j)?).value))
        .collect()
}

/// Residuals of every family, interior first.
pub fn residuals(problem: &PdeProblem, model: &KanModel, colloc: &CollocationSet) -> Result<Vec<Vec<f64>>> {
    let mut out = vec![pde_residual(problem, model, &colloc.interior)?];
    for ((b, pts), inp) in problem.boundaries.iter().zip(&colloc.boundary).zip(&colloc.boundary_input) {
        let u = model.forward(inp)?;
        out.push(pts.iter().zip(u.as_slice()).map(|(x, u)| u - b.target.eval(x)).collect());
    }
    Ok(out)
}

/// Residuals of a closed-form field, for checking operators and boundary
/// data without a network.
pub fn residuals_of_field<F>(problem: &PdeProblem, colloc: &CollocationSet, field: F) -> Vec<Vec<f64>>
where
    F: Fn(&[f64]) -> Fields<f64>,
{
    let mut out = vec![colloc.interior.iter().map(|x| problem.residual(x, &field(x))).collect()];
    for (b, pts) in problem.boundaries.iter().zip(&colloc.boundary) {
        out.push(pts.iter().map(|x| field(x).u - b.target.eval(x)).collect());
    }
    out
}

pub fn physics_loss(
    problem: &PdeProblem,
    model: &KanModel,
    colloc: &CollocationSet,
    rba: Option<&RbaWeights>,
) -> Result<LossBreakdown> {
    loss_from_residuals(problem, &residuals(problem, model, colloc)?, rba)
}

/// Loss, residuals and parameter gradient in one pass. Attention weights
/// are treated as constants.
pub fn physics_loss_and_grad(
    problem: &PdeProblem,
    model: &KanModel,
    colloc: &CollocationSet,
    rba: Option<&RbaWeights>,
) -> Result<(LossBreakdown, Vec<Vec<f64>>, ParamSet)> {
    check_model(problem, model)?;
    if let Some(w) = rba {
        w.check_sizes(&colloc.family_sizes())?;
    }
    let mut grads = model.params().zeros_like();
    let mut res = Vec::with_capacity(problem.boundaries.len() + 1);

    let n = colloc.interior.len().max(1) as f64;
    let mut r0 = vec![0.0; colloc.interior.len()];
    accumulate_loss_gradient(
        model,
        &colloc.interior_input,
        problem.residual_spec(),
        &mut grads,
        |i, jet, seed| {
            let r = problem.residual(colloc.interior.row(i), &Fields::from_jet(jet)?);
            r0[i] = r.value;
            let a = rba.map_or(1.0, |w| w.alpha[0][i]);
            let w = problem.w_f * a * a / n;
            seed.add_lin(0, 2.0 * w * r.value, &r);
            Ok(w * r.value * r.value)
        },
    )?;
    res.push(r0);

    for (k, ((b, pts), inp)) in problem
        .boundaries
        .iter()
        .zip(&colloc.boundary)
        .zip(&colloc.boundary_input)
        .enumerate()
    {
        let n = pts.len().max(1) as f64;
        let mut rk = vec![0.0; pts.len()];
        accumulate_loss_gradient(model, inp, JetSpec::values(), &mut grads, |i, jet, seed| {
            let r: Lin = jet.lin_value(0) - b.target.eval(pts.row(i));
            rk[i] = r.value;
            let a = rba.map_or(1.0, |w| w.alpha[k + 1][i]);
            let w = b.weight * a * a / n;
            seed.add_lin(0, 2.0 * w * r.value, &r);
            Ok(w * r.value * r.value)
        })?;
        res.push(rk);
    }
    let breakdown = loss_from_residuals(problem, &res, rba)?;
    Ok((breakdown, res, grads))
}

/// Mean squared error of a regression fit and its parameter gradient.
pub fn fit_loss_and_grad(model: &KanModel, x: &PointSet, y: &[f64]) -> Result<(f64, ParamSet)> {
    if x.len() != y.len() || model.output_dim() != 1 {
        return Err(Error::InvalidShape(format!(
            "{} inputs, {} targets, {} model outputs",
            x.len(),
            y.len(),
            model.output_dim()
        )));
    }
    let n = x.len().max(1) as f64;
    let mut grads = model.params().zeros_like();
    let loss = accumulate_loss_gradient(model, x, JetSpec::values(), &mut grads, |i, jet, seed| {
        let r = jet.value(0) - y[i];
        *seed.value_mut(0) = 2.0 * r / n;
        Ok(r * r / n)
    })?;
    Ok((loss, grads))
}

/// Mean squared error of a regression fit.
pub fn fit_loss(model: &KanModel, x: &PointSet, y: &[f64]) -> Result<f64> {
    let u = model.forward(x)?;
    if u.len() != y.len() {
        return Err(Error::InvalidShape(format!("{} predictions, {} targets", u.len(), y.len())));
    }
    Ok(u.as_slice().iter().zip(y).map(|(u, y)| (u - y) * (u - y)).sum::<f64>() / y.len().max(1) as f64)
}
