//! Kolmogorov-Arnold layers and networks.
//!
//! Every edge `(j, i)` of a layer carries a learnable univariate function
//! `phi(x) = c_r * silu(x) + c_B * sum_m c_m B_m(x)`; output node `j` sums the
//! edge functions applied to its inputs. The basis functions `B_m` live on a
//! grid shared by all edges reading the same input node.

mod checkpoint;
mod params;
mod points;
mod update;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::basis::{build_r_basis, eval_r_local, eval_spline_local, Grid, LocalBasis, RBasisParams};
use crate::error::{Error, Result};

pub use params::{ParamBlock, ParamSet};
pub use points::PointSet;
pub use update::{update_grids, GridUpdateReport, GridWarning};

/// Standard deviation of the Gaussian used for initial basis coefficients.
pub const INIT_COEFF_STD: f64 = 0.1;

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `x / (1 + exp(-x))`.
pub fn silu(x: f64) -> f64 {
    x * sigmoid(x)
}

/// SiLU and its first three derivatives.
#[inline]
pub fn silu_derivs(x: f64) -> [f64; 4] {
    let s = sigmoid(x);
    let s1 = s * (1.0 - s);
    let s2 = s1 * (1.0 - 2.0 * s);
    let s3 = s2 * (1.0 - 2.0 * s) - 2.0 * s1 * s1;
    [x * s, s + x * s1, 2.0 * s1 + x * s2, 3.0 * s2 + x * s3]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BasisFamily {
    /// Degree-`k` B-splines, `G + k` functions per grid.
    Spline { k: usize },
    /// Grid-adaptive squared-ReLU bumps, `G + 1` functions per grid.
    ReluR { p: usize, k: usize },
}

impl BasisFamily {
    pub fn num_basis(&self, intervals: usize) -> usize {
        match *self {
            BasisFamily::Spline { k } => intervals + k,
            BasisFamily::ReluR { .. } => intervals + 1,
        }
    }

    /// Knot augmentation degree carried by this family's grids.
    pub(crate) fn grid_degree(&self) -> usize {
        match *self {
            BasisFamily::Spline { k } => k,
            BasisFamily::ReluR { .. } => 0,
        }
    }

    /// Highest input-derivative order with a continuous value everywhere.
    pub fn smooth_order(&self) -> usize {
        match *self {
            BasisFamily::Spline { k } => k.saturating_sub(1),
            BasisFamily::ReluR { .. } => 1,
        }
    }

    pub fn validate(&self, intervals: usize) -> Result<()> {
        match *self {
            BasisFamily::Spline { k } if k > crate::basis::MAX_DEGREE => Err(Error::InvalidArgument(
                format!("spline degree {k} exceeds {}", crate::basis::MAX_DEGREE),
            )),
            BasisFamily::ReluR { p, k } if p == 0 || k == 0 || k > intervals => {
                Err(Error::InvalidArgument(format!(
                    "R basis needs p >= 1 and 1 <= k <= G, got p={p}, k={k}, G={intervals}"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Grid of one input node, with the basis built on it.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeBasis {
    grid: Grid,
    relu: Option<RBasisParams>,
}

impl NodeBasis {
    pub fn new(family: BasisFamily, knots: Vec<f64>) -> Result<Self> {
        let grid = Grid::new(knots, family.grid_degree())?;
        Self::from_grid(family, grid)
    }

    pub fn from_grid(family: BasisFamily, grid: Grid) -> Result<Self> {
        family.validate(grid.intervals())?;
        let grid = if grid.degree() == family.grid_degree() {
            grid
        } else {
            grid.with_degree(family.grid_degree())?
        };
        let relu = match family {
            BasisFamily::Spline { .. } => None,
            BasisFamily::ReluR { p, k } => Some(build_r_basis(&grid, p, k)?),
        };
        Ok(Self { grid, relu })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn r_basis(&self) -> Option<&RBasisParams> {
        self.relu.as_ref()
    }

    pub fn num_basis(&self) -> usize {
        match &self.relu {
            Some(r) => r.len(),
            None => self.grid.num_spline_basis(),
        }
    }

    #[inline]
    pub fn eval_local(&self, x: f64, orders: usize, out: &mut LocalBasis) {
        match &self.relu {
            Some(r) => eval_r_local(r, x, orders, out),
            None => eval_spline_local(&self.grid, x, orders, out),
        }
    }

    /// Dense basis matrix, one row per sample.
    pub fn eval_dense(&self, xs: &[f64]) -> Result<nalgebra::DMatrix<f64>> {
        match &self.relu {
            Some(r) => crate::basis::eval_r_basis(r, xs),
            None => crate::basis::eval_spline_basis(&self.grid, xs),
        }
    }
}

/// View of one edge's activation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivationParams<'a> {
    pub c_r: f64,
    pub c_b: f64,
    pub c: &'a [f64],
}

#[derive(Debug, Clone, PartialEq)]
pub struct KanLayer {
    pub(crate) nodes: Vec<NodeBasis>,
    pub params: ParamBlock,
}

impl KanLayer {
    pub fn n_in(&self) -> usize {
        self.params.n_in
    }

    pub fn n_out(&self) -> usize {
        self.params.n_out
    }

    pub fn nodes(&self) -> &[NodeBasis] {
        &self.nodes
    }

    pub fn intervals(&self) -> usize {
        self.nodes[0].grid.intervals()
    }

    pub fn activation(&self, j: usize, i: usize) -> ActivationParams<'_> {
        let e = self.params.edge(j, i);
        ActivationParams {
            c_r: self.params.res_w[e],
            c_b: self.params.basis_w[e],
            c: self.params.edge_coeffs(e),
        }
    }

    /// Applies this layer alone to one input vector.
    pub fn apply(&self, x: &[f64], out: &mut [f64], local: &mut LocalBasis) {
        let p = &self.params;
        out.iter_mut().for_each(|v| *v = 0.0);
        for (i, (&xi, node)) in x.iter().zip(&self.nodes).enumerate() {
            let r = silu(xi);
            node.eval_local(xi, 0, local);
            for (j, o) in out.iter_mut().enumerate() {
                let e = j * p.n_in + i;
                let c = &p.coeffs[e * p.n_basis + local.start..];
                let s: f64 = local.d0.iter().zip(c).map(|(b, c)| b * c).sum();
                *o += p.res_w[e] * r + p.basis_w[e] * s;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KanModel {
    shape: Vec<usize>,
    family: BasisFamily,
    seed: u64,
    pub(crate) layers: Vec<KanLayer>,
}

fn check_shape(shape: &[usize]) -> Result<()> {
    if shape.len() < 2 {
        return Err(Error::InvalidShape(format!(
            "shape needs at least two entries, got {shape:?}"
        )));
    }
    if shape.contains(&0) {
        return Err(Error::InvalidShape(format!("zero-width layer in {shape:?}")));
    }
    Ok(())
}

/// Builds a model with uniform `[-1, 1]` grids of `intervals` cells,
/// `c_r = c_B = 1` and basis coefficients drawn from `N(0, 0.1^2)`.
pub fn init_model(shape: &[usize], family: BasisFamily, intervals: usize, seed: u64) -> Result<KanModel> {
    check_shape(shape)?;
    if intervals == 0 {
        return Err(Error::InvalidArgument("initial grid needs G >= 1".into()));
    }
    family.validate(intervals)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, INIT_COEFF_STD).expect("valid normal");
    let grid = Grid::uniform(-1.0, 1.0, intervals, family.grid_degree())?;
    let node = NodeBasis::from_grid(family, grid)?;
    let n_basis = node.num_basis();
    let layers = shape
        .windows(2)
        .map(|w| {
            let mut params = ParamBlock::zeros(w[0], w[1], n_basis);
            params.res_w.fill(1.0);
            params.basis_w.fill(1.0);
            for c in params.coeffs.iter_mut() {
                *c = normal.sample(&mut rng);
            }
            KanLayer {
                nodes: vec![node.clone(); w[0]],
                params,
            }
        })
        .collect();
    Ok(KanModel {
        shape: shape.to_vec(),
        family,
        seed,
        layers,
    })
}

impl KanModel {
    /// Assembles a model from explicit layers.
    pub fn from_layers(family: BasisFamily, seed: u64, layers: Vec<KanLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidShape("model needs at least one layer".into()));
        }
        let mut shape = vec![layers[0].n_in()];
        for (l, layer) in layers.iter().enumerate() {
            if layer.n_in() != *shape.last().unwrap() {
                return Err(Error::InvalidShape(format!(
                    "layer {l} expects {} inputs, previous layer gives {}",
                    layer.n_in(),
                    shape.last().unwrap()
                )));
            }
            if layer.nodes.len() != layer.n_in() {
                return Err(Error::InvalidShape(format!("layer {l} has {} grids for {} inputs", layer.nodes.len(), layer.n_in())));
            }
            if layer.nodes.iter().any(|n| n.num_basis() != layer.params.n_basis) {
                return Err(Error::InvalidShape(format!("layer {l} grid sizes disagree with coefficients")));
            }
            shape.push(layer.n_out());
        }
        Ok(Self {
            shape,
            family,
            seed,
            layers,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn family(&self) -> BasisFamily {
        self.family
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn layers(&self) -> &[KanLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [KanLayer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.shape[0]
    }

    pub fn output_dim(&self) -> usize {
        self.shape[self.shape.len() - 1]
    }

    /// Interval count `G` of each layer's grids.
    pub fn grid_sizes(&self) -> Vec<usize> {
        self.layers.iter().map(KanLayer::intervals).collect()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.params.len()).sum()
    }

    /// Copies of all trainable parameters.
    pub fn params(&self) -> ParamSet {
        ParamSet {
            layers: self.layers.iter().map(|l| l.params.clone()).collect(),
        }
    }

    pub fn set_params(&mut self, params: ParamSet) -> Result<()> {
        self.params().check_congruent(&params)?;
        for (layer, block) in self.layers.iter_mut().zip(params.layers) {
            layer.params = block;
        }
        Ok(())
    }

    pub fn param_blocks_mut(&mut self) -> impl Iterator<Item = &mut ParamBlock> {
        self.layers.iter_mut().map(|l| &mut l.params)
    }

    pub fn param_blocks(&self) -> impl Iterator<Item = &ParamBlock> {
        self.layers.iter().map(|l| &l.params)
    }

    fn check_input(&self, points: &PointSet) -> Result<()> {
        if points.dim() != self.input_dim() {
            return Err(Error::InvalidShape(format!(
                "model expects {}-dimensional inputs, got {}",
                self.input_dim(),
                points.dim()
            )));
        }
        Ok(())
    }

    /// Evaluates one point, writing every layer's output into `scratch`.
    fn eval_point(&self, x: &[f64], scratch: &mut [Vec<f64>], local: &mut LocalBasis) {
        for (l, layer) in self.layers.iter().enumerate() {
            let (done, rest) = scratch.split_at_mut(l + 1);
            let input: &[f64] = if l == 0 { x } else { &done[l] };
            layer.apply(input, &mut rest[0], local);
        }
    }

    fn scratch(&self) -> Vec<Vec<f64>> {
        self.shape.iter().map(|&n| vec![0.0; n]).collect()
    }

    /// Network outputs for a batch of inputs.
    pub fn forward(&self, points: &PointSet) -> Result<PointSet> {
        self.check_input(points)?;
        let mut out = PointSet::with_capacity(self.output_dim(), points.len());
        let mut scratch = self.scratch();
        let mut local = LocalBasis::default();
        for x in points.iter() {
            self.eval_point(x, &mut scratch[..], &mut local);
            out.push(&scratch[self.shape.len() - 1]);
        }
        Ok(out)
    }

    /// Scalar output for a single input vector.
    pub fn eval_scalar(&self, x: &[f64]) -> f64 {
        let mut scratch = self.scratch();
        let mut local = LocalBasis::default();
        self.eval_point(x, &mut scratch, &mut local);
        scratch[self.shape.len() - 1][0]
    }

    /// Inputs seen by every layer, followed by the network output:
    /// element `l` feeds layer `l`, the last element is `forward(points)`.
    pub fn layer_inputs(&self, points: &PointSet) -> Result<Vec<PointSet>> {
        self.check_input(points)?;
        let mut sets: Vec<PointSet> = self
            .shape
            .iter()
            .map(|&n| PointSet::with_capacity(n, points.len()))
            .collect();
        let mut scratch = self.scratch();
        let mut local = LocalBasis::default();
        for x in points.iter() {
            self.eval_point(x, &mut scratch[..], &mut local);
            sets[0].push(x);
            for l in 1..self.shape.len() {
                sets[l].push(&scratch[l]);
            }
        }
        Ok(sets)
    }
}
