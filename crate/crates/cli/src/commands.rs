use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use pikan::physics::{builtin_problems, PdeProblem, Task, EVAL_LATTICE};
use pikan::trainer::{evaluate, preset, preset_names, Checkpoint, EpochRecord, Trainer, TRAIN_FORMAT, TRAIN_VERSION};

use crate::config::{self, Manifest, Resolved};
use crate::error::CliError;

pub const METRICS_FILE: &str = "metrics.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const FINAL_CHECKPOINT: &str = "final.json";
pub const ABORT_CHECKPOINT: &str = "last_good.json";
pub const FIELD_FILE: &str = "field.csv";

pub struct TrainArgs {
    pub config: PathBuf,
    pub checkpoint: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed_override: Option<u64>,
}

pub fn train(args: &TrainArgs) -> Result<(), CliError> {
    let cfg = config::load(&args.config)?;
    let resolved = config::resolve(cfg, args.seed_override)?;
    let out = args
        .out
        .clone()
        .or_else(|| resolved.config.out.clone())
        .ok_or_else(|| CliError::Config("no output directory: pass --out or set 'out'".into()))?;
    fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;

    let mut trainer = build_trainer(&resolved, args.checkpoint.as_deref())?;
    write_manifest(&out, &resolved, args.checkpoint.as_deref())?;

    let columns = boundary_names(&resolved.task);
    let metrics_path = out.join(METRICS_FILE);
    let mut metrics = open_metrics(&metrics_path, &columns, args.checkpoint.is_some())?;
    let every = resolved.config.checkpoint_every;
    let report_every = resolved.plan.eval_every;
    log::info!(
        "training '{}' from epoch {} to {}",
        trainer.task_name(),
        trainer.state().epoch,
        resolved.plan.epochs
    );

    while !trainer.is_finished() {
        let rec = match trainer.step() {
            Ok(rec) => rec.clone(),
            Err(e) => {
                metrics.flush().map_err(|e| CliError::io(&metrics_path, e))?;
                let path = out.join(ABORT_CHECKPOINT);
                trainer.checkpoint().save_json(&path)?;
                let err = CliError::from(e);
                return Err(match err {
                    CliError::Numeric(m) => CliError::Numeric(format!(
                        "{m}; last good state (epoch {}) saved to {}",
                        trainer.state().epoch,
                        path.display()
                    )),
                    other => other,
                });
            }
        };
        write_row(&mut metrics, &rec).map_err(|e| CliError::io(&metrics_path, e))?;
        let done = rec.epoch + 1;
        if every > 0 && done % every == 0 && done < resolved.plan.epochs {
            let dir = out.join("checkpoints");
            fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
            trainer.checkpoint().save_json(dir.join(format!("epoch_{done:07}.json")))?;
        }
        if done % report_every == 0 || done == resolved.plan.epochs {
            match rec.rel_l2 {
                Some(e) => log::info!("epoch {done}: loss {:.6e}, G = {}, rel L2 {:.4e}", rec.loss, rec.grid, e),
                None => log::info!("epoch {done}: loss {:.6e}, G = {}", rec.loss, rec.grid),
            }
        }
    }
    metrics.flush().map_err(|e| CliError::io(&metrics_path, e))?;
    trainer.checkpoint().save_json(out.join(FINAL_CHECKPOINT))?;

    match trainer.log().last() {
        Some(last) => {
            println!("final loss: {:.6e}", last.loss);
            if let Some(e) = trainer.log().final_rel_l2() {
                println!("relative L2: {:.4e} ({:.4}%)", e, 100.0 * e);
            }
        }
        None => println!("no epochs to run"),
    }
    println!("outputs written to {}", out.display());
    Ok(())
}

fn build_trainer(r: &Resolved, checkpoint: Option<&Path>) -> Result<Trainer, CliError> {
    let ckpt = checkpoint
        .map(|p| Checkpoint::load_json(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display()))))
        .transpose()?;
    if let Some(c) = &ckpt {
        if c.plan != r.plan {
            return Err(CliError::Config(
                "the checkpoint was written under a different plan than the config resolves to".into(),
            ));
        }
    }
    let t = match (&r.task, ckpt) {
        (Task::Pde(p), None) => Trainer::new_pde((**p).clone(), r.model.build(r.plan.seed)?, r.plan.clone()),
        (Task::Pde(p), Some(c)) => Trainer::resume_pde((**p).clone(), c),
        (Task::Fit(f), None) => Trainer::new_fit(f, r.model.build(r.plan.seed)?, r.plan.clone()),
        (Task::Fit(f), Some(c)) => Trainer::resume_fit(f, c),
    };
    Ok(t?)
}

fn write_manifest(out: &Path, r: &Resolved, resumed_from: Option<&Path>) -> Result<(), CliError> {
    let m = Manifest {
        tool: "pikan".into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        library_version: pikan::VERSION.into(),
        checkpoint_format: format!("{TRAIN_FORMAT} v{TRAIN_VERSION}"),
        resumed_from: resumed_from.map(Path::to_path_buf),
        config: r.config.clone(),
    };
    let path = out.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&m).map_err(|e| CliError::io(&path, e))?;
    fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))
}

fn boundary_names(task: &Task) -> Vec<String> {
    match task {
        Task::Pde(p) => p.boundaries.iter().map(|b| format!("loss_b_{}", b.name)).collect(),
        Task::Fit(_) => Vec::new(),
    }
}

fn open_metrics(path: &Path, loss_b: &[String], append: bool) -> Result<csv::Writer<File>, CliError> {
    let mut header = vec!["epoch".to_string(), "total_loss".into(), "loss_f".into()];
    header.extend(loss_b.iter().cloned());
    header.extend(["lr", "G", "events", "rel_l2"].map(String::from));
    if append && path.exists() {
        let existing = csv::Reader::from_path(path)
            .and_then(|mut r| r.headers().cloned())
            .map_err(|e| CliError::io(path, e))?;
        if existing.iter().ne(header.iter().map(String::as_str)) {
            return Err(CliError::Data(format!("{}: columns do not match this run", path.display())));
        }
        let f = OpenOptions::new()
            .append(true)
            .open(path)
            .map_err(|e| CliError::io(path, e))?;
        return Ok(csv::WriterBuilder::new().has_headers(false).from_writer(f));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    w.write_record(&header).map_err(|e| CliError::io(path, e))?;
    Ok(w)
}

fn write_row(w: &mut csv::Writer<File>, r: &EpochRecord) -> csv::Result<()> {
    let mut row = vec![r.epoch.to_string(), fmt(r.loss), fmt(r.loss_f)];
    row.extend(r.loss_b.iter().map(|&v| fmt(v)));
    row.push(fmt(r.lr));
    row.push(r.grid.to_string());
    row.push(r.events.join(";"));
    row.push(r.rel_l2.map(fmt).unwrap_or_default());
    w.write_record(&row)
}

/// Shortest representation that parses back to the same value.
fn fmt(v: f64) -> String {
    format!("{v:e}")
}

pub struct EvalArgs {
    pub checkpoint: PathBuf,
    pub config: Option<PathBuf>,
    pub resolution: Option<usize>,
    pub out: Option<PathBuf>,
}

pub fn eval(args: &EvalArgs) -> Result<(), CliError> {
    let path = &args.checkpoint;
    let ckpt = Checkpoint::load_json(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let problem = match &args.config {
        Some(c) => {
            match config::resolve_for_eval(config::load(c)?)?.task {
                Task::Pde(p) => *p,
                Task::Fit(_) => return Err(fit_not_supported()),
            }
        }
        None => {
            if !builtin_problems().iter().any(|t| matches!(t, Task::Pde(p) if p.name == ckpt.task)) {
                return Err(fit_not_supported());
            }
            PdeProblem::by_name(&ckpt.task)?
        }
    };
    if problem.name != ckpt.task {
        return Err(CliError::Config(format!(
            "checkpoint belongs to '{}', config describes '{}'",
            ckpt.task, problem.name
        )));
    }
    let resolution = args.resolution.unwrap_or(EVAL_LATTICE);
    let ev = evaluate(&ckpt.state.model, &problem, resolution)?;

    let out = args
        .out
        .clone()
        .or_else(|| path.parent().map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    let field = out.join(FIELD_FILE);
    write_field(&field, &problem, &ev).map_err(|e| CliError::io(&field, e))?;

    println!("task: {}, epoch {}, lattice {resolution}x{resolution}", ckpt.task, ckpt.state.epoch);
    match ev.rel_l2 {
        Some(e) => println!("relative L2: {:.4e} ({:.4}%)", e, 100.0 * e),
        None => println!("relative L2: no reference, field only"),
    }
    println!("field written to {}", field.display());
    Ok(())
}

fn fit_not_supported() -> CliError {
    CliError::Config("eval exports fields of PDE problems only".into())
}

fn write_field(path: &Path, problem: &PdeProblem, ev: &pikan::trainer::Evaluation) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = problem.axes.iter().map(|a| a.name.as_str()).collect();
    header.push("u");
    if ev.reference.is_some() {
        header.push("abs_error");
    }
    w.write_record(&header)?;
    for (i, x) in ev.points.iter().enumerate() {
        let mut row: Vec<String> = x.iter().map(|&v| fmt(v)).collect();
        row.push(fmt(ev.u[i]));
        if let Some(r) = &ev.reference {
            row.push(fmt((ev.u[i] - r[i]).abs()));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn list() -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    let tasks = builtin_problems();
    let _ = writeln!(out, "problems ({}):", tasks.len());
    for t in &tasks {
        let _ = writeln!(out, "{}\n", t.describe());
    }
    let _ = writeln!(out, "presets:");
    for name in preset_names() {
        let p = preset(name)?;
        let _ = writeln!(out, "  {:<30} {}", p.name, p.summary);
    }
    Ok(())
}
