use serde::{Deserialize, Serialize};

use crate::basis::GridMixConfig;
use crate::error::{Error, Result};
use crate::network::{init_model, BasisFamily, KanModel};
use crate::optim::{AdamConfig, LrSchedule};

/// Network architecture and initial grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub shape: Vec<usize>,
    pub basis: BasisFamily,
    /// Initial number of grid intervals.
    pub grid: usize,
}

impl ModelSpec {
    pub fn build(&self, seed: u64) -> Result<KanModel> {
        init_model(&self.shape, self.basis, self.grid, seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RbaPlan {
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadPlan {
    pub epochs: Vec<u64>,
    pub a: f64,
    pub c: f64,
    #[serde(default = "default_dense_factor")]
    pub dense_factor: usize,
}

fn default_dense_factor() -> usize {
    16
}

fn default_true() -> bool {
    true
}

fn default_eval_every() -> u64 {
    1000
}

fn default_skip() -> u64 {
    1
}

/// Every schedule of a training run. Events listed for epoch `E` run at
/// the end of epoch `E`, after that epoch's optimizer step; learning-rate
/// factors for `E` already apply to the step of epoch `E`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainPlan {
    pub epochs: u64,
    pub lr: LrSchedule,
    #[serde(default)]
    pub adam: AdamConfig,
    /// Grid adaptation period in epochs; 0 disables regular adaptation.
    #[serde(default)]
    pub adapt_every: u64,
    /// Last epoch at which a regular adaptation may run.
    #[serde(default)]
    pub adapt_until: u64,
    /// `(epoch, new grid size)` pairs.
    #[serde(default)]
    pub extensions: Vec<(u64, usize)>,
    /// Carry optimizer moments across extensions; otherwise they restart
    /// from zero.
    #[serde(default = "default_true")]
    pub transition: bool,
    #[serde(default)]
    pub grid_mix: GridMixConfig,
    #[serde(default)]
    pub rba: Option<RbaPlan>,
    #[serde(default)]
    pub rad: Option<RadPlan>,
    #[serde(default)]
    pub seed: u64,
    /// Relative-error evaluation period in epochs.
    #[serde(default = "default_eval_every")]
    pub eval_every: u64,
    /// Leading Sobol points skipped when drawing collocation points.
    #[serde(default = "default_skip")]
    pub sobol_skip: u64,
}

impl TrainPlan {
    /// Constant learning rate, no adaptive features.
    pub fn plain(epochs: u64, lr: f64, seed: u64) -> Self {
        Self {
            epochs,
            lr: LrSchedule::constant(lr),
            adam: AdamConfig::default(),
            adapt_every: 0,
            adapt_until: 0,
            extensions: Vec::new(),
            transition: true,
            grid_mix: GridMixConfig::default(),
            rba: None,
            rad: None,
            seed,
            eval_every: default_eval_every(),
            sobol_skip: default_skip(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        self.lr.validate()?;
        self.adam.validate()?;
        self.grid_mix.validate()?;
        if self.adapt_until > self.epochs {
            return bad(format!(
                "adapt_until ({}) exceeds the number of epochs ({})",
                self.adapt_until, self.epochs
            ));
        }
        if self.extensions.windows(2).any(|w| w[0].0 >= w[1].0 || w[0].1 >= w[1].1) {
            return bad("extension epochs and grid sizes must be strictly increasing".into());
        }
        if let Some(rba) = &self.rba {
            if !(0.0..=1.0).contains(&rba.eta) {
                return bad(format!("RBA eta must lie in [0, 1], got {}", rba.eta));
            }
        }
        if let Some(rad) = &self.rad {
            if rad.epochs.windows(2).any(|w| w[0] >= w[1]) {
                return bad("RAD epochs must be strictly increasing".into());
            }
            if let Some(e) = rad.epochs.iter().find(|e| self.extensions.iter().any(|(x, _)| x == *e)) {
                return bad(format!("epoch {e} schedules both a grid extension and RAD"));
            }
            crate::physics::RadConfig {
                a: rad.a,
                c: rad.c,
                dense_factor: rad.dense_factor,
            }
            .validate()?;
        }
        if self.eval_every == 0 {
            return bad("eval_every must be positive".into());
        }
        Ok(())
    }

    pub fn extension_at(&self, epoch: u64) -> Option<usize> {
        self.extensions.iter().find(|(e, _)| *e == epoch).map(|&(_, g)| g)
    }

    pub fn rad_at(&self, epoch: u64) -> bool {
        self.rad.as_ref().is_some_and(|r| r.epochs.contains(&epoch))
    }

    /// Regular adaptation, skipped where an extension or RAD already
    /// re-adapts the grids.
    pub fn adapt_at(&self, epoch: u64) -> bool {
        self.adapt_every > 0
            && epoch > 0
            && epoch.is_multiple_of(self.adapt_every)
            && epoch <= self.adapt_until
            && self.extension_at(epoch).is_none()
            && !self.rad_at(epoch)
    }
}
