//! Adam with optional Nesterov momentum, multiplicative learning-rate
//! schedules and the carry-over of optimizer moments across grid
//! extensions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{KanModel, ParamBlock, ParamSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub nesterov: bool,
}

fn default_beta1() -> f64 {
    0.9
}

fn default_beta2() -> f64 {
    0.999
}

fn default_eps() -> f64 {
    1e-8
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_eps(),
            nesterov: false,
        }
    }
}

impl AdamConfig {
    pub fn nesterov() -> Self {
        Self {
            nesterov: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |b: f64| (0.0..1.0).contains(&b);
        if !unit(self.beta1) || !unit(self.beta2) || !(self.eps > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "Adam needs beta1, beta2 in [0, 1) and eps > 0, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Step count and moment buffers, congruent with the model parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub t: u64,
    pub m: ParamSet,
    pub v: ParamSet,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(params: &ParamSet, config: AdamConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            t: 0,
            m: params.zeros_like(),
            v: params.zeros_like(),
            config,
        })
    }

    /// Updates `params` in place.
    ///
    /// With Nesterov momentum the step direction is
    /// `beta1 m_t / (1 - beta1^(t+1)) + (1 - beta1) g / (1 - beta1^t)`
    /// in place of the bias-corrected first moment.
    pub fn step(&mut self, params: &mut ParamSet, grads: &ParamSet, lr: f64) -> Result<()> {
        if let Some(block) = grads.first_non_finite() {
            return Err(Error::NonFiniteGradient { block });
        }
        params.check_congruent(grads)?;
        params.check_congruent(&self.m)?;
        let AdamConfig {
            beta1: b1,
            beta2: b2,
            eps,
            nesterov,
        } = self.config;
        let t = self.t + 1;
        let c1 = 1.0 - b1.powi(t as i32);
        let c1_next = 1.0 - b1.powi(t as i32 + 1);
        let c2 = 1.0 - b2.powi(t as i32);
        let it = params
            .iter_mut()
            .zip(grads.iter())
            .zip(self.m.iter_mut().zip(self.v.iter_mut()));
        for ((p, &g), (m, v)) in it {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = if nesterov {
                b1 * *m / c1_next + (1.0 - b1) * g / c1
            } else {
                *m / c1
            };
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        self.t = t;
        Ok(())
    }
}

/// One optimizer step on a copy of the model and state.
pub fn adam_step(model: &KanModel, state: &AdamState, grads: &ParamSet, lr: f64) -> Result<(KanModel, AdamState)> {
    let mut params = model.params();
    let mut state = state.clone();
    state.step(&mut params, grads, lr)?;
    let mut model = model.clone();
    model.set_params(params)?;
    Ok((model, state))
}

/// Base learning rate scaled by a factor at each listed epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrSchedule {
    pub base_lr: f64,
    /// `(epoch, factor)` pairs; each factor applies from its epoch onward.
    #[serde(default)]
    pub events: Vec<(u64, f64)>,
}

impl LrSchedule {
    pub fn constant(base_lr: f64) -> Self {
        Self {
            base_lr,
            events: Vec::new(),
        }
    }

    pub fn new(base_lr: f64, events: Vec<(u64, f64)>) -> Result<Self> {
        let s = Self { base_lr, events };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base_lr > 0.0 && self.base_lr.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {}",
                self.base_lr
            )));
        }
        if self.events.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidArgument(
                "learning-rate event epochs must be strictly increasing".into(),
            ));
        }
        if let Some(&(e, f)) = self.events.iter().find(|(_, f)| !(*f > 0.0 && f.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "learning-rate factor at epoch {e} must be positive, got {f}"
            )));
        }
        Ok(())
    }

    pub fn lr_at(&self, epoch: u64) -> f64 {
        self.events
            .iter()
            .take_while(|(e, _)| *e <= epoch)
            .fold(self.base_lr, |lr, (_, f)| lr * f)
    }
}

/// Resamples `old` onto `new_len` points by linear interpolation, with
/// both index sets mapped evenly onto `[0, 1]`.
pub fn interp_normalized(old: &[f64], new_len: usize) -> Vec<f64> {
    let n = old.len();
    if n == new_len {
        return old.to_vec();
    }
    if n == 1 {
        return vec![old[0]; new_len];
    }
    (0..new_len)
        .map(|j| {
            let s = if new_len == 1 {
                0.0
            } else {
                j as f64 / (new_len - 1) as f64
            };
            let pos = s * (n - 1) as f64;
            let i = (pos.floor() as usize).min(n - 2);
            let w = pos - i as f64;
            if w == 0.0 {
                old[i]
            } else if w == 1.0 {
                old[i + 1]
            } else {
                (1.0 - w) * old[i] + w * old[i + 1]
            }
        })
        .collect()
}

fn transition_block(old: &ParamBlock, layout: &ParamBlock) -> Result<ParamBlock> {
    if old.n_in != layout.n_in || old.n_out != layout.n_out {
        return Err(Error::InvalidShape(format!(
            "layer shape changed from {}x{} to {}x{}",
            old.n_out, old.n_in, layout.n_out, layout.n_in
        )));
    }
    if layout.n_basis < old.n_basis {
        return Err(Error::GridShrink {
            from: old.n_basis,
            to: layout.n_basis,
        });
    }
    let mut out = ParamBlock::zeros(old.n_in, old.n_out, layout.n_basis);
    out.res_w.copy_from_slice(&old.res_w);
    out.basis_w.copy_from_slice(&old.basis_w);
    for e in 0..old.edges() {
        out.edge_coeffs_mut(e)
            .copy_from_slice(&interp_normalized(old.edge_coeffs(e), layout.n_basis));
    }
    Ok(out)
}

/// Carries Adam moments over to a model whose grids were extended: moments
/// of `c_r` and `c_B` are copied, those of each edge's basis coefficients
/// are interpolated to the new length. The step count is kept.
pub fn transition_state(state: &AdamState, new_layout: &ParamSet) -> Result<AdamState> {
    if state.m.layers.len() != new_layout.layers.len() {
        return Err(Error::InvalidShape("layer count changed across grid extension".into()));
    }
    let map = |buf: &ParamSet| -> Result<ParamSet> {
        Ok(ParamSet {
            layers: buf
                .layers
                .iter()
                .zip(&new_layout.layers)
                .map(|(o, l)| transition_block(o, l))
                .collect::<Result<_>>()?,
        })
    };
    Ok(AdamState {
        t: state.t,
        m: map(&state.m)?,
        v: map(&state.v)?,
        config: state.config,
    })
}
