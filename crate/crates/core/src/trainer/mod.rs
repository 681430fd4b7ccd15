//! Training loops with scheduled grid adaptation, grid extension,
//! attention weights and collocation resampling.

mod plan;
mod presets;

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use plan::{ModelSpec, RadPlan, RbaPlan, TrainPlan};
pub use presets::{preset, preset_names, Preset, PresetTask};

use crate::error::{Error, Result};
use crate::network::{update_grids, KanModel, ParamSet, PointSet};
use crate::optim::{transition_state, AdamState};
use crate::physics::{
    eval_lattice, fit_loss_and_grad, loss_from_residuals, physics_loss_and_grad, rad_resample, rba_update,
    relative_l2_values, CollocationSet, FitTask, PdeProblem, RadConfig, RbaWeights, EVAL_LATTICE,
};

/// Metrics of one epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: u64,
    /// Objective minimized at this epoch, attention weights included.
    pub loss: f64,
    /// Interior term before its global weight.
    pub loss_f: f64,
    /// Boundary terms before their global weights.
    pub loss_b: Vec<f64>,
    /// The same objective with every attention weight set to one.
    pub loss_plain: f64,
    pub lr: f64,
    /// Largest grid size over the layers, after this epoch's events.
    pub grid: usize,
    /// Grid and resampling events run at the end of this epoch.
    pub events: Vec<String>,
    pub rel_l2: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub records: Vec<EpochRecord>,
}

impl RunLog {
    pub fn record(&self, epoch: u64) -> Option<&EpochRecord> {
        let first = self.records.first()?.epoch;
        self.records.get(epoch.checked_sub(first)? as usize)
    }

    pub fn loss_at(&self, epoch: u64) -> Option<f64> {
        self.record(epoch).map(|r| r.loss)
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }

    /// Last relative error logged.
    pub fn final_rel_l2(&self) -> Option<f64> {
        self.records.iter().rev().find_map(|r| r.rel_l2)
    }
}

/// Everything that evolves during training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainState {
    /// Number of completed epochs, which is also the next epoch's index.
    pub epoch: u64,
    pub model: KanModel,
    pub adam: AdamState,
    pub rba: Option<RbaWeights>,
    /// Interior collocation points in problem coordinates.
    pub interior: Option<PointSet>,
    pub boundary: Vec<PointSet>,
    pub rng: ChaCha8Rng,
    pub rad_round: u64,
}

pub const TRAIN_FORMAT: &str = "pikan-train";
pub const TRAIN_VERSION: u32 = 1;

/// Resumable snapshot of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub task: String,
    pub plan: TrainPlan,
    pub state: TrainState,
}

impl Checkpoint {
    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(file, self)?;
        Ok(())
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        let c: Self = serde_json::from_reader(file)?;
        if c.format != TRAIN_FORMAT || c.version != TRAIN_VERSION {
            return Err(Error::Data(format!(
                "unsupported checkpoint container {} v{}",
                c.format, c.version
            )));
        }
        Ok(c)
    }
}

#[derive(Debug, Clone)]
struct EvalData {
    inputs: PointSet,
    reference: Vec<f64>,
}

#[derive(Debug, Clone)]
enum Objective {
    Pde {
        problem: Box<PdeProblem>,
        colloc: CollocationSet,
        eval: Option<EvalData>,
    },
    Fit {
        name: String,
        x: PointSet,
        y: Vec<f64>,
    },
}

fn eval_data(problem: &PdeProblem, resolution: usize) -> Result<Option<EvalData>> {
    let Some(r) = &problem.reference else {
        return Ok(None);
    };
    r.check_covers(problem)?;
    let points = eval_lattice(problem, resolution);
    let reference = points.iter().map(|x| r.eval(x)).collect::<Result<Vec<_>>>()?;
    let inputs = problem.to_inputs(&points);
    Ok(Some(EvalData {
        inputs,
        reference,
    }))
}

fn rad_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

fn max_grid(model: &KanModel) -> usize {
    model.grid_sizes().into_iter().max().unwrap_or(0)
}

/// Epoch-by-epoch driver. A failed epoch leaves the state at the last
/// completed epoch.
#[derive(Debug, Clone)]
pub struct Trainer {
    plan: TrainPlan,
    objective: Objective,
    state: TrainState,
    log: RunLog,
}

impl Trainer {
    pub fn new_pde(problem: PdeProblem, model: KanModel, plan: TrainPlan) -> Result<Self> {
        plan.validate()?;
        let colloc = problem.collocation(plan.sobol_skip)?;
        let rba = plan
            .rba
            .map(|r| RbaWeights::for_collocation(&colloc, r.eta))
            .transpose()?;
        let state = TrainState {
            epoch: 0,
            adam: AdamState::new(&model.params(), plan.adam)?,
            model,
            rba,
            interior: Some(colloc.interior.clone()),
            boundary: colloc.boundary.clone(),
            rng: rad_rng(plan.seed),
            rad_round: 0,
        };
        Self::assemble_pde(problem, plan, state)
    }

    fn assemble_pde(problem: PdeProblem, plan: TrainPlan, state: TrainState) -> Result<Self> {
        let model = &state.model;
        if model.input_dim() != problem.dim() || model.output_dim() != 1 {
            return Err(Error::InvalidShape(format!(
                "problem '{}' needs a {} -> 1 model, got shape {:?}",
                problem.name,
                problem.dim(),
                model.shape()
            )));
        }
        check_extensions(&plan, &state)?;
        let interior = state
            .interior
            .clone()
            .ok_or_else(|| Error::Data("checkpoint lacks collocation points".into()))?;
        let colloc = problem.collocation_from(interior, state.boundary.clone());
        let eval = eval_data(&problem, EVAL_LATTICE)?;
        Ok(Self {
            plan,
            objective: Objective::Pde {
                problem: Box::new(problem),
                colloc,
                eval,
            },
            state,
            log: RunLog::default(),
        })
    }

    /// Regression on `task`'s data drawn with the plan seed.
    pub fn new_fit(task: &FitTask, model: KanModel, plan: TrainPlan) -> Result<Self> {
        plan.validate()?;
        if plan.rba.is_some() || plan.rad.is_some() {
            return Err(Error::InvalidArgument(
                "attention weights and resampling apply to PDE problems only".into(),
            ));
        }
        let state = TrainState {
            epoch: 0,
            adam: AdamState::new(&model.params(), plan.adam)?,
            model,
            rba: None,
            interior: None,
            boundary: Vec::new(),
            rng: rad_rng(plan.seed),
            rad_round: 0,
        };
        Self::assemble_fit(task, plan, state)
    }

    fn assemble_fit(task: &FitTask, plan: TrainPlan, state: TrainState) -> Result<Self> {
        if state.model.input_dim() != task.dim || state.model.output_dim() != 1 {
            return Err(Error::InvalidShape(format!(
                "task '{}' needs a {} -> 1 model, got shape {:?}",
                task.name,
                task.dim,
                state.model.shape()
            )));
        }
        check_extensions(&plan, &state)?;
        let (x, y) = task.sample(plan.seed);
        Ok(Self {
            plan,
            objective: Objective::Fit {
                name: task.name.clone(),
                x,
                y,
            },
            state,
            log: RunLog::default(),
        })
    }

    pub fn resume_pde(problem: PdeProblem, ckpt: Checkpoint) -> Result<Self> {
        check_task(&ckpt, &problem.name)?;
        ckpt.plan.validate()?;
        Self::assemble_pde(problem, ckpt.plan, ckpt.state)
    }

    pub fn resume_fit(task: &FitTask, ckpt: Checkpoint) -> Result<Self> {
        check_task(&ckpt, &task.name)?;
        ckpt.plan.validate()?;
        Self::assemble_fit(task, ckpt.plan, ckpt.state)
    }

    pub fn plan(&self) -> &TrainPlan {
        &self.plan
    }

    pub fn state(&self) -> &TrainState {
        &self.state
    }

    pub fn model(&self) -> &KanModel {
        &self.state.model
    }

    pub fn log(&self) -> &RunLog {
        &self.log
    }

    pub fn into_parts(self) -> (KanModel, RunLog) {
        (self.state.model, self.log)
    }

    pub fn task_name(&self) -> &str {
        match &self.objective {
            Objective::Pde { problem, .. } => &problem.name,
            Objective::Fit { name, .. } => name,
        }
    }

    pub fn is_finished(&self) -> bool {
        self.state.epoch >= self.plan.epochs
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            format: TRAIN_FORMAT.into(),
            version: TRAIN_VERSION,
            task: self.task_name().to_string(),
            plan: self.plan.clone(),
            state: self.state.clone(),
        }
    }

    /// Current collocation points, if this is a PDE run.
    pub fn collocation(&self) -> Option<&CollocationSet> {
        match &self.objective {
            Objective::Pde { colloc, .. } => Some(colloc),
            Objective::Fit { .. } => None,
        }
    }

    /// Relative L2 error on the evaluation lattice, when a reference exists.
    pub fn rel_l2(&self) -> Result<Option<f64>> {
        self.rel_l2_of(&self.state.model)
    }

    fn rel_l2_of(&self, model: &KanModel) -> Result<Option<f64>> {
        let Objective::Pde { eval: Some(ev), .. } = &self.objective else {
            return Ok(None);
        };
        let u = model.forward(&ev.inputs)?;
        let (mut num, mut den) = (0.0, 0.0);
        for (u, r) in u.as_slice().iter().zip(&ev.reference) {
            num += (r - u) * (r - u);
            den += r * r;
        }
        if den == 0.0 {
            return Err(Error::ZeroReference);
        }
        Ok(Some((num / den).sqrt()))
    }

    /// Runs one epoch: loss and gradient, attention update, optimizer
    /// step, then the plan's events for this epoch.
    pub fn step(&mut self) -> Result<&EpochRecord> {
        let epoch = self.state.epoch;
        let abort = |reason: String| Error::NumericAbort {
            epoch: epoch as usize,
            reason,
        };
        let lr = self.plan.lr.lr_at(epoch);
        let mut next = self.state.clone();

        let (loss, loss_f, loss_b, loss_plain, residuals, grads): (f64, f64, Vec<f64>, f64, _, ParamSet) =
            match &self.objective {
                Objective::Pde { problem, colloc, .. } => {
                    let (l, res, g) = physics_loss_and_grad(problem, &next.model, colloc, next.rba.as_ref())?;
                    let plain = if next.rba.is_some() {
                        loss_from_residuals(problem, &res, None)?.total
                    } else {
                        l.total
                    };
                    (l.total, l.interior, l.boundary, plain, Some(res), g)
                }
                Objective::Fit { x, y, .. } => {
                    let (l, g) = fit_loss_and_grad(&next.model, x, y)?;
                    (l, l, Vec::new(), l, None, g)
                }
            };
        if !loss.is_finite() {
            return Err(abort(format!("loss is {loss}")));
        }

        if let (Some(rba), Some(res)) = (&next.rba, &residuals) {
            next.rba = Some(rba_update(rba, res)?);
        }
        let mut params = next.model.params();
        next.adam.step(&mut params, &grads, lr).map_err(|e| match e {
            Error::NonFiniteGradient { block } => abort(format!("non-finite gradient in {block}")),
            other => other,
        })?;
        next.model.set_params(params)?;
        if let Some(block) = next.model.params().first_non_finite() {
            return Err(abort(format!("non-finite parameters in {block}")));
        }

        let mut events = Vec::new();
        let mut new_colloc = None;
        let grid_points = match &self.objective {
            Objective::Pde { colloc, .. } => &colloc.interior_input,
            Objective::Fit { x, .. } => x,
        };
        if let Some(g) = self.plan.extension_at(epoch) {
            let (model, report) = update_grids(&next.model, grid_points, Some(g), &self.plan.grid_mix)?;
            next.adam = if self.plan.transition {
                transition_state(&next.adam, &model.params())?
            } else {
                AdamState::new(&model.params(), self.plan.adam)?
            };
            next.model = model;
            events.push(format!("extend(G={g})"));
            warn_grid(epoch, &report.warnings);
        }
        if self.plan.rad_at(epoch) {
            let Objective::Pde { problem, colloc, .. } = &self.objective else {
                unreachable!("RAD plans are rejected for regression tasks")
            };
            let rad = self.plan.rad.as_ref().expect("RAD epoch implies a RAD plan");
            let cfg = RadConfig {
                a: rad.a,
                c: rad.c,
                dense_factor: rad.dense_factor,
            };
            let out = rad_resample(
                problem,
                &next.model,
                colloc,
                next.rba.as_ref(),
                &cfg,
                &self.plan.grid_mix,
                next.rad_round,
                &mut next.rng,
            )
            .map_err(|e| match e {
                Error::NonFinite { value, .. } => abort(format!("non-finite residual {value} during resampling")),
                other => other,
            })?;
            next.rad_round += 1;
            next.model = out.model;
            next.rba = out.rba;
            next.interior = Some(out.colloc.interior.clone());
            new_colloc = Some(out.colloc);
            events.push("rad".into());
            warn_grid(epoch, &out.grid_report.warnings);
        }
        if self.plan.adapt_at(epoch) {
            let (model, report) = update_grids(&next.model, grid_points, None, &self.plan.grid_mix)?;
            next.model = model;
            events.push("adapt".into());
            warn_grid(epoch, &report.warnings);
        }

        next.epoch = epoch + 1;
        let evaluate = next.epoch.is_multiple_of(self.plan.eval_every) || next.epoch == self.plan.epochs;
        let rel_l2 = if evaluate { self.rel_l2_of(&next.model)? } else { None };

        let record = EpochRecord {
            epoch,
            loss,
            loss_f,
            loss_b,
            loss_plain,
            lr,
            grid: max_grid(&next.model),
            events,
            rel_l2,
        };
        if let (Some(c), Objective::Pde { colloc, .. }) = (new_colloc, &mut self.objective) {
            *colloc = c;
        }
        self.state = next;
        self.log.records.push(record);
        Ok(self.log.records.last().expect("just pushed"))
    }

    /// Runs the remaining epochs of the plan.
    pub fn run(&mut self) -> Result<()> {
        while !self.is_finished() {
            self.step()?;
        }
        Ok(())
    }
}

fn warn_grid(epoch: u64, warnings: &[crate::network::GridWarning]) {
    for w in warnings {
        log::warn!(
            "epoch {epoch}: grid of layer {} node {} kept: {}",
            w.layer,
            w.node,
            w.reason
        );
    }
}

fn check_task(ckpt: &Checkpoint, name: &str) -> Result<()> {
    if ckpt.task != name {
        return Err(Error::Data(format!(
            "checkpoint belongs to task '{}', not '{name}'",
            ckpt.task
        )));
    }
    Ok(())
}

/// Extensions still ahead of the run must not shrink the grids.
fn check_extensions(plan: &TrainPlan, state: &TrainState) -> Result<()> {
    let g = max_grid(&state.model);
    match plan.extensions.iter().find(|(e, _)| *e >= state.epoch) {
        Some(&(_, to)) if to < g => Err(Error::GridShrink { from: g, to }),
        _ => Ok(()),
    }
}

/// Trains `model` on `problem` for the whole plan.
pub fn train(problem: &PdeProblem, model: KanModel, plan: &TrainPlan) -> Result<(KanModel, RunLog)> {
    let mut t = Trainer::new_pde(problem.clone(), model, plan.clone())?;
    t.run()?;
    Ok(t.into_parts())
}

/// Trains `model` on the regression task for the whole plan.
pub fn train_function_fit(task: &FitTask, model: KanModel, plan: &TrainPlan) -> Result<(KanModel, RunLog)> {
    let mut t = Trainer::new_fit(task, model, plan.clone())?;
    t.run()?;
    Ok(t.into_parts())
}

/// Model field on a lattice with its error against the reference.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub points: PointSet,
    pub u: Vec<f64>,
    pub reference: Option<Vec<f64>>,
    pub rel_l2: Option<f64>,
}

/// Evaluates the model on a `resolution`-per-axis lattice. Without a
/// reference only the field is returned.
pub fn evaluate(model: &KanModel, problem: &PdeProblem, resolution: usize) -> Result<Evaluation> {
    if resolution == 0 {
        return Err(Error::InvalidArgument("lattice resolution must be positive".into()));
    }
    let points = eval_lattice(problem, resolution);
    let u = model.forward(&problem.to_inputs(&points))?.as_slice().to_vec();
    let (reference, rel_l2) = match &problem.reference {
        Some(r) => {
            r.check_covers(problem)?;
            let vals = points.iter().map(|x| r.eval(x)).collect::<Result<Vec<_>>>()?;
            let e = relative_l2_values(&u, r, &points)?;
            (Some(vals), Some(e))
        }
        None => (None, None),
    };
    Ok(Evaluation {
        points,
        u,
        reference,
        rel_l2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{init_model, BasisFamily};
    use crate::physics::{AnalyticReference, ReferenceSolution};

    fn small_problem() -> PdeProblem {
        let mut p = PdeProblem::diffusion();
        p.n_f = 64;
        p.n_b = 8;
        p
    }

    fn busy_plan() -> TrainPlan {
        TrainPlan {
            adam: crate::optim::AdamConfig::nesterov(),
            adapt_every: 4,
            adapt_until: 20,
            extensions: vec![(9, 5)],
            rba: Some(RbaPlan { eta: 0.01 }),
            rad: Some(RadPlan {
                epochs: vec![15],
                a: 1.0,
                c: 1.0,
                dense_factor: 4,
            }),
            eval_every: 10,
            ..TrainPlan::plain(24, 1e-2, 3)
        }
    }

    fn model() -> KanModel {
        init_model(&[2, 3, 1], BasisFamily::Spline { k: 3 }, 3, 3).unwrap()
    }

    #[test]
    fn zero_epochs_leave_model_untouched() {
        let m = model();
        let (out, log) = train(&small_problem(), m.clone(), &TrainPlan::plain(0, 1e-3, 0)).unwrap();
        assert_eq!(out, m);
        assert!(log.records.is_empty());
    }

    #[test]
    fn runs_are_deterministic_and_follow_the_calendar() {
        let (m1, l1) = train(&small_problem(), model(), &busy_plan()).unwrap();
        let (m2, l2) = train(&small_problem(), model(), &busy_plan()).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(l1, l2);
        assert_eq!(l1.records.len(), 24);
        let ev = |e: u64| l1.record(e).unwrap().events.clone();
        assert_eq!(ev(4), vec!["adapt"]);
        assert_eq!(ev(9), vec!["extend(G=5)"]);
        assert_eq!(ev(15), vec!["rad"]);
        assert_eq!(ev(16), vec!["adapt"]);
        assert!(ev(17).is_empty());
        assert!(ev(24 - 1).is_empty());
        assert_eq!(l1.record(8).unwrap().grid, 3);
        assert_eq!(l1.record(9).unwrap().grid, 5);
        assert!(l1.record(9).unwrap().rel_l2.is_some());
        assert!(l1.record(23).unwrap().rel_l2.is_some());
        assert!(l1.record(10).unwrap().rel_l2.is_none());
        assert!(l1.records.iter().all(|r| r.loss <= r.loss_plain));
    }

    #[test]
    fn resume_matches_uninterrupted_run() {
        let p = small_problem();
        let mut full = Trainer::new_pde(p.clone(), model(), busy_plan()).unwrap();
        full.run().unwrap();

        let mut first = Trainer::new_pde(p.clone(), model(), busy_plan()).unwrap();
        for _ in 0..12 {
            first.step().unwrap();
        }
        let dir = std::env::temp_dir().join(format!("pikan-train-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("ckpt.json");
        first.checkpoint().save_json(&path).unwrap();
        let mut second = Trainer::resume_pde(p, Checkpoint::load_json(&path).unwrap()).unwrap();
        second.run().unwrap();
        std::fs::remove_dir_all(&dir).ok();

        assert_eq!(second.model(), full.model());
        assert_eq!(second.log().records[..], full.log().records[12..]);
        assert!(Trainer::resume_pde(PdeProblem::burgers(), first.checkpoint()).is_err());
    }

    #[test]
    fn non_finite_loss_aborts_and_keeps_last_state() {
        let mut m = model();
        let mut params = m.params();
        params.layers[0].coeffs[0] = f64::NAN;
        m.set_params(params).unwrap();
        let mut t = Trainer::new_pde(small_problem(), m.clone(), TrainPlan::plain(5, 1e-3, 0)).unwrap();
        match t.step() {
            Err(Error::NumericAbort { epoch: 0, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert_eq!(t.state().epoch, 0);
    }

    #[test]
    fn fit_runs_reject_pde_features() {
        let task = FitTask {
            n_points: 32,
            ..FitTask::default()
        };
        let m = init_model(&[4, 2, 1], BasisFamily::Spline { k: 3 }, 3, 0).unwrap();
        let mut plan = TrainPlan::plain(5, 1e-2, 0);
        plan.extensions = vec![(2, 5)];
        let (out, log) = train_function_fit(&task, m.clone(), &plan).unwrap();
        assert_eq!(out.grid_sizes(), vec![5, 5]);
        assert!(log.records.iter().all(|r| r.rel_l2.is_none()));
        plan.rba = Some(RbaPlan { eta: 0.1 });
        assert!(Trainer::new_fit(&task, m, plan).is_err());
    }

    #[test]
    fn shrinking_extension_is_rejected() {
        let mut plan = TrainPlan::plain(5, 1e-3, 0);
        plan.extensions = vec![(2, 2)];
        assert!(matches!(
            Trainer::new_pde(small_problem(), model(), plan),
            Err(Error::GridShrink { from: 3, to: 2 })
        ));
    }

    #[test]
    fn evaluation_lattices() {
        let p = PdeProblem::diffusion();
        let m = init_model(&[2, 1], BasisFamily::Spline { k: 3 }, 3, 0).unwrap();
        let e = evaluate(&m, &p, 16).unwrap();
        assert_eq!(e.u.len(), 256);
        assert!(e.rel_l2.is_some());
        let e1 = evaluate(&m, &p, 1).unwrap();
        assert_eq!(e1.u.len(), 1);
        let r = AnalyticReference::Diffusion.eval(e1.points.row(0));
        assert!((e1.rel_l2.unwrap() - ((r - e1.u[0]) / r).abs()).abs() < 1e-15);
        let mut b = PdeProblem::burgers();
        assert!(evaluate(&m, &b, 4).unwrap().rel_l2.is_none());
        b.reference = Some(ReferenceSolution::Analytic(AnalyticReference::Diffusion));
        assert!(evaluate(&m, &b, 4).is_ok());
    }
}
