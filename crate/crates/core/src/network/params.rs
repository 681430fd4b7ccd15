use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Trainable parameters of one layer, or any buffer congruent with them
/// (gradients, optimizer moments).
///
/// Edge `(j, i)` connects input node `i` to output node `j` and has flat
/// index `e = j * n_in + i`. Its basis coefficients live in
/// `coeffs[e * n_basis..(e + 1) * n_basis]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBlock {
    pub n_in: usize,
    pub n_out: usize,
    pub n_basis: usize,
    /// `c_r`, weight of the SiLU residual branch, one per edge.
    pub res_w: Vec<f64>,
    /// `c_B`, weight of the basis expansion, one per edge.
    pub basis_w: Vec<f64>,
    pub coeffs: Vec<f64>,
}

impl ParamBlock {
    pub fn zeros(n_in: usize, n_out: usize, n_basis: usize) -> Self {
        let edges = n_in * n_out;
        Self {
            n_in,
            n_out,
            n_basis,
            res_w: vec![0.0; edges],
            basis_w: vec![0.0; edges],
            coeffs: vec![0.0; edges * n_basis],
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.n_in, self.n_out, self.n_basis)
    }

    pub fn edges(&self) -> usize {
        self.n_in * self.n_out
    }

    pub fn edge(&self, j: usize, i: usize) -> usize {
        j * self.n_in + i
    }

    pub fn edge_coeffs(&self, e: usize) -> &[f64] {
        &self.coeffs[e * self.n_basis..(e + 1) * self.n_basis]
    }

    pub fn edge_coeffs_mut(&mut self, e: usize) -> &mut [f64] {
        &mut self.coeffs[e * self.n_basis..(e + 1) * self.n_basis]
    }

    pub fn len(&self) -> usize {
        self.res_w.len() + self.basis_w.len() + self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn same_layout(&self, other: &Self) -> bool {
        self.n_in == other.n_in && self.n_out == other.n_out && self.n_basis == other.n_basis
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.res_w.iter().chain(&self.basis_w).chain(&self.coeffs)
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.res_w
            .iter_mut()
            .chain(self.basis_w.iter_mut())
            .chain(self.coeffs.iter_mut())
    }
}

/// Layer-by-layer collection of [`ParamBlock`]s mirroring a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub layers: Vec<ParamBlock>,
}

impl ParamSet {
    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self.layers.iter().map(ParamBlock::zeros_like).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.layers.iter().map(ParamBlock::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.iter())
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers.iter_mut().flat_map(|l| l.iter_mut())
    }

    pub fn fill(&mut self, value: f64) {
        self.iter_mut().for_each(|v| *v = value);
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &Self) -> Result<()> {
        self.check_congruent(other)?;
        for (x, y) in self.iter_mut().zip(other.iter()) {
            *x += a * y;
        }
        Ok(())
    }

    pub fn scale(&mut self, a: f64) {
        self.iter_mut().for_each(|v| *v *= a);
    }

    pub fn check_congruent(&self, other: &Self) -> Result<()> {
        let ok = self.layers.len() == other.layers.len()
            && self.layers.iter().zip(&other.layers).all(|(a, b)| a.same_layout(b));
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidShape("parameter buffers are not congruent".into()))
        }
    }

    /// Name of the first block holding a non-finite entry, if any.
    pub fn first_non_finite(&self) -> Option<String> {
        for (l, b) in self.layers.iter().enumerate() {
            if b.res_w.iter().any(|v| !v.is_finite()) {
                return Some(format!("layer {l} c_r"));
            }
            if b.basis_w.iter().any(|v| !v.is_finite()) {
                return Some(format!("layer {l} c_B"));
            }
            if let Some(pos) = b.coeffs.iter().position(|v| !v.is_finite()) {
                let e = pos / b.n_basis.max(1);
                return Some(format!(
                    "layer {l} basis coefficients of edge (out {}, in {})",
                    e / b.n_in,
                    e % b.n_in
                ));
            }
        }
        None
    }
}
