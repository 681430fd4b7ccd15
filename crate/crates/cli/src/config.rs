use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use pikan::physics::{FitTask, GridTable, PdeProblem, ReferenceSolution, Task};
use pikan::trainer::{preset, ModelSpec, PresetTask, TrainPlan};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// One training run, as written in a TOML file.
///
/// Either `preset` or both `model` and `plan` must be given. Sections
/// given next to a preset replace the preset's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Physical constant overrides, e.g. `nu`, `k`, `D`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub constants: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_f: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_b: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<TrainPlan>,
    /// CSV table with header `axis1,axis2,u`, for problems without an
    /// analytic solution.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<PathBuf>,
    /// Log the relative L2 error every `plan.eval_every` epochs.
    #[serde(default = "default_true")]
    pub rel_l2: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Periodic checkpoint interval in epochs; 0 keeps only the final one.
    #[serde(default = "default_checkpoint_every")]
    pub checkpoint_every: u64,
}

fn default_true() -> bool {
    true
}

fn default_checkpoint_every() -> u64 {
    10_000
}

/// Run manifest written next to the metrics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub tool_version: String,
    pub library_version: String,
    pub checkpoint_format: String,
    #[serde(default)]
    pub resumed_from: Option<PathBuf>,
    pub config: RunConfig,
}

/// A config with every default filled in.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub task: Task,
    pub model: ModelSpec,
    pub plan: TrainPlan,
}

/// Reads a TOML config, or the config stored in a run manifest (`.json`).
pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        let m: Manifest = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: not a run manifest: {e}", path.display())))?;
        return Ok(m.config);
    }
    parse(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

pub fn resolve(cfg: RunConfig, seed_override: Option<u64>) -> Result<Resolved, CliError> {
    resolve_with(cfg, seed_override, true)
}

/// Like [`resolve`], but keeps whatever reference is available and never
/// requires one.
pub fn resolve_for_eval(cfg: RunConfig) -> Result<Resolved, CliError> {
    resolve_with(cfg, None, false)
}

fn resolve_with(mut cfg: RunConfig, seed_override: Option<u64>, training: bool) -> Result<Resolved, CliError> {
    let base = cfg
        .preset
        .as_deref()
        .map(|name| preset(name).map_err(CliError::from))
        .transpose()?;
    let task_name = match (&cfg.problem, &base) {
        (Some(p), Some(b)) => {
            let from_preset = preset_task_name(&b.task);
            if *p != from_preset {
                return Err(CliError::Config(format!(
                    "problem '{p}' does not match preset '{}' (problem '{from_preset}')",
                    b.name
                )));
            }
            p.clone()
        }
        (Some(p), None) => p.clone(),
        (None, Some(b)) => preset_task_name(&b.task),
        (None, None) => return Err(CliError::Config("config needs 'problem' or 'preset'".into())),
    };
    let model = match (cfg.model.take(), &base) {
        (Some(m), _) => m,
        (None, Some(b)) => b.model.clone(),
        (None, None) => return Err(CliError::Config("config without a preset needs a [model] section".into())),
    };
    let mut plan = match (cfg.plan.take(), &base) {
        (Some(p), _) => p,
        (None, Some(b)) => b.plan.clone(),
        (None, None) => return Err(CliError::Config("config without a preset needs a [plan] section".into())),
    };
    let seed = seed_override.or(cfg.seed).unwrap_or(plan.seed);
    plan.seed = seed;
    plan.validate()?;

    let task = if task_name == FitTask::default().name {
        if !cfg.constants.is_empty() || cfg.n_b.is_some() || cfg.reference.is_some() {
            return Err(CliError::Config(
                "'constants', 'n_b' and 'reference' apply to PDE problems only".into(),
            ));
        }
        let mut t = FitTask::default();
        if let Some(n) = cfg.n_f {
            t.n_points = n;
        }
        Task::Fit(t)
    } else {
        Task::Pde(Box::new(build_problem(&task_name, &mut cfg, training)?))
    };

    cfg.problem = Some(task_name);
    cfg.model = Some(model.clone());
    cfg.plan = Some(plan.clone());
    cfg.seed = Some(seed);
    Ok(Resolved {
        config: cfg,
        task,
        model,
        plan,
    })
}

fn preset_task_name(t: &PresetTask) -> String {
    match t {
        PresetTask::Pde(name) => name.clone(),
        PresetTask::Fit => FitTask::default().name,
    }
}

fn build_problem(name: &str, cfg: &mut RunConfig, training: bool) -> Result<PdeProblem, CliError> {
    let mut p = PdeProblem::by_name(name)?;
    for (k, v) in &cfg.constants {
        p.set_constant(k, *v)?;
    }
    if let Some(n) = cfg.n_f {
        p.n_f = n;
    }
    if let Some(n) = cfg.n_b {
        p.n_b = n;
    }
    if let Some(path) = &cfg.reference {
        let table = GridTable::from_csv(path)
            .map_err(|e| CliError::Data(format!("field 'reference' ({}): {e}", path.display())))?;
        let r = ReferenceSolution::Table(table);
        r.check_covers(&p)
            .map_err(|e| CliError::Data(format!("field 'reference' ({}): {e}", path.display())))?;
        p.reference = Some(r);
        if let Ok(abs) = std::fs::canonicalize(path) {
            cfg.reference = Some(abs);
        }
    }
    if !training {
        return Ok(p);
    }
    if !cfg.rel_l2 {
        p.reference = None;
    } else if p.reference.is_none() {
        return Err(CliError::Data(format!(
            "field 'reference' is required: problem '{name}' has no analytic solution \
             (set rel_l2 = false to train without error tracking)"
        )));
    }
    Ok(p)
}
