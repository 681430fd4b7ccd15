use serde::{Deserialize, Serialize};

use super::plan::{ModelSpec, RadPlan, RbaPlan, TrainPlan};
use crate::basis::GridMixConfig;
use crate::error::{Error, Result};
use crate::network::BasisFamily;
use crate::optim::{AdamConfig, LrSchedule};

/// What a preset trains on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetTask {
    Pde(String),
    Fit,
}

/// A published experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub task: PresetTask,
    pub model: ModelSpec,
    pub plan: TrainPlan,
}

const NAMES: [&str; 17] = [
    "diffusion-baseline",
    "diffusion-adaptive",
    "helmholtz-baseline",
    "helmholtz-adaptive",
    "burgers-baseline",
    "burgers-adaptive",
    "allen_cahn-baseline",
    "allen_cahn-adaptive",
    "burgers-extension-transition",
    "burgers-extension-reset",
    "allen_cahn-rba",
    "allen_cahn-no-rba",
    "function_fit-adaptive",
    "function_fit-baseline",
    "helmholtz-relu-static",
    "helmholtz-relu-uniform",
    "helmholtz-relu-adaptive",
];

pub fn preset_names() -> &'static [&'static str] {
    &NAMES
}

const SPLINE: BasisFamily = BasisFamily::Spline { k: 3 };
const RELU: BasisFamily = BasisFamily::ReluR { p: 2, k: 2 };
const ETA: f64 = 1e-4;

fn pikan(basis: BasisFamily) -> ModelSpec {
    ModelSpec {
        shape: vec![2, 8, 8, 1],
        basis,
        grid: 3,
    }
}

fn schedule(events: &[(u64, f64)]) -> LrSchedule {
    LrSchedule {
        base_lr: 1e-3,
        events: events.to_vec(),
    }
}

/// Constant learning rate 1e-3, no grid updates, no attention weights.
fn baseline(epochs: u64) -> TrainPlan {
    TrainPlan::plain(epochs, 1e-3, 0)
}

fn adaptive(lr: &[(u64, f64)], every: u64, until: u64, ext: &[(u64, usize)]) -> TrainPlan {
    TrainPlan {
        lr: schedule(lr),
        adam: AdamConfig::nesterov(),
        adapt_every: every,
        adapt_until: until,
        extensions: ext.to_vec(),
        rba: Some(RbaPlan { eta: ETA }),
        ..baseline(100_000)
    }
}

fn pde(name: &str) -> PresetTask {
    PresetTask::Pde(name.into())
}

pub fn preset(name: &str) -> Result<Preset> {
    let (summary, task, model, plan) = match name {
        "diffusion-baseline" => ("diffusion, no adaptive features", pde("diffusion"), pikan(SPLINE), baseline(100_000)),
        "diffusion-adaptive" => (
            "diffusion, extensions 3->8->14, adaptation, attention weights",
            pde("diffusion"),
            pikan(SPLINE),
            adaptive(
                &[(8_000, 0.7), (20_000, 0.5), (50_000, 0.5), (75_000, 0.5)],
                275,
                70_000,
                &[(8_000, 8), (20_000, 14)],
            ),
        ),
        "helmholtz-baseline" => ("Helmholtz, no adaptive features", pde("helmholtz"), pikan(SPLINE), baseline(100_000)),
        "helmholtz-adaptive" => (
            "Helmholtz, extensions 3->7->15, adaptation, attention weights",
            pde("helmholtz"),
            pikan(SPLINE),
            adaptive(
                &[(20_000, 0.2), (40_000, 0.5), (60_000, 0.5), (80_000, 0.5)],
                200,
                70_000,
                &[(20_000, 7), (40_000, 15)],
            ),
        ),
        "burgers-baseline" => ("Burgers, no adaptive features", pde("burgers"), pikan(SPLINE), baseline(100_000)),
        "burgers-adaptive" => {
            let mut p = adaptive(
                &[(8_000, 0.7), (20_000, 0.7), (25_000, 0.7), (50_000, 0.8), (75_000, 0.8), (85_000, 0.6)],
                300,
                75_000,
                &[(8_000, 8), (20_000, 14)],
            );
            p.rad = Some(RadPlan {
                epochs: vec![50_000, 75_000],
                a: 1.0,
                c: 1.0,
                dense_factor: 16,
            });
            (
                "Burgers, extensions 3->8->14, adaptation, attention weights, resampling",
                pde("burgers"),
                pikan(SPLINE),
                p,
            )
        }
        "allen_cahn-baseline" => ("Allen-Cahn, no adaptive features", pde("allen_cahn"), pikan(SPLINE), baseline(100_000)),
        "allen_cahn-adaptive" => {
            let mut p = adaptive(
                &[(15_000, 0.6), (25_000, 0.8), (50_000, 0.7), (75_000, 0.7)],
                275,
                70_000,
                &[(8_000, 8), (20_000, 12)],
            );
            // the first resampling would coincide with the second extension
            p.rad = Some(RadPlan {
                epochs: vec![20_001, 30_000, 40_000, 50_000, 60_000],
                a: 1.0,
                c: 1.0,
                dense_factor: 16,
            });
            (
                "Allen-Cahn, extensions 3->8->12, adaptation, attention weights, resampling",
                pde("allen_cahn"),
                pikan(SPLINE),
                p,
            )
        }
        "burgers-extension-transition" | "burgers-extension-reset" => {
            let transition = name.ends_with("transition");
            let plan = TrainPlan {
                adam: if transition { AdamConfig::nesterov() } else { AdamConfig::default() },
                adapt_every: if transition { 275 } else { 0 },
                adapt_until: if transition { 2_500 } else { 0 },
                extensions: vec![(2_500, 10)],
                transition,
                ..TrainPlan::plain(3_480, 5e-4, 0)
            };
            let summary = if transition {
                "Burgers, extension 3->10 at 2500 with moment transition and adaptation"
            } else {
                "Burgers, extension 3->10 at 2500 with fresh optimizer state"
            };
            (summary, pde("burgers"), pikan(SPLINE), plan)
        }
        "allen_cahn-rba" | "allen_cahn-no-rba" => {
            let plan = TrainPlan {
                adam: AdamConfig::nesterov(),
                adapt_every: 275,
                adapt_until: 8_000,
                extensions: vec![(8_000, 8)],
                rba: (name == "allen_cahn-rba").then_some(RbaPlan { eta: ETA }),
                ..TrainPlan::plain(10_000, 1e-3, 0)
            };
            let summary = if plan.rba.is_some() {
                "Allen-Cahn, extension 3->8 at 8000, attention weights"
            } else {
                "Allen-Cahn, extension 3->8 at 8000, no attention weights"
            };
            (summary, pde("allen_cahn"), pikan(SPLINE), plan)
        }
        "function_fit-adaptive" | "function_fit-baseline" => {
            let adaptive = name.ends_with("adaptive");
            let model = ModelSpec {
                shape: vec![4, 5, 2, 1],
                basis: SPLINE,
                grid: 3,
            };
            let plan = TrainPlan {
                lr: if adaptive {
                    LrSchedule {
                        base_lr: 0.02,
                        events: vec![(200, 0.5), (400, 0.2), (600, 0.5)],
                    }
                } else {
                    LrSchedule::constant(0.02)
                },
                adam: if adaptive { AdamConfig::nesterov() } else { AdamConfig::default() },
                extensions: vec![(200, 6), (400, 10), (600, 24)],
                transition: adaptive,
                grid_mix: GridMixConfig::new(0.02),
                ..TrainPlan::plain(800, 0.02, 0)
            };
            let summary = if adaptive {
                "regression, extensions 3->6->10->24 with moment transition"
            } else {
                "regression, extensions 3->6->10->24 with fresh optimizer state"
            };
            (summary, PresetTask::Fit, model, plan)
        }
        "helmholtz-relu-static" => {
            let plan = TrainPlan {
                adam: AdamConfig::nesterov(),
                grid_mix: GridMixConfig::new(1.0),
                rba: Some(RbaPlan { eta: ETA }),
                ..baseline(100_000)
            };
            ("Helmholtz, R basis, fixed uniform grid", pde("helmholtz"), pikan(RELU), plan)
        }
        "helmholtz-relu-uniform" => {
            let mut plan = adaptive(
                &[(8_000, 0.5), (15_000, 0.5), (30_000, 0.4), (50_000, 0.7), (70_000, 0.7)],
                200,
                70_000,
                &[(8_000, 6), (15_000, 12)],
            );
            plan.grid_mix = GridMixConfig::new(1.0);
            ("Helmholtz, R basis, extensions 3->6->12 on uniform grids", pde("helmholtz"), pikan(RELU), plan)
        }
        "helmholtz-relu-adaptive" => (
            "Helmholtz, R basis, extensions 3->6->12 on adapted grids",
            pde("helmholtz"),
            pikan(RELU),
            adaptive(
                &[(20_000, 0.6), (35_000, 0.8), (50_000, 0.7), (70_000, 0.7)],
                200,
                70_000,
                &[(20_000, 6), (35_000, 12)],
            ),
        ),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "unknown preset '{name}'; known presets: {}",
                NAMES.join(", ")
            )))
        }
    };
    Ok(Preset {
        name: NAMES.iter().find(|n| **n == name).expect("listed"),
        summary,
        task,
        model,
        plan,
    })
}
