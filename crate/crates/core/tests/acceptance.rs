//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Criteria 1-7 always run. The experiment reproductions (8-13) take
//! minutes to hours and run only with `--ignored`:
//!
//! ```text
//! cargo test --release -p pikan --test acceptance -- --ignored [numbers...]
//! ```
//!
//! Bare numbers restrict the run to those criteria. Burgers and Allen-Cahn
//! error gates run when `PIKAN_BURGERS_REFERENCE` or
//! `PIKAN_ALLEN_CAHN_REFERENCE` name a reference CSV table.

use std::time::{Duration, Instant};

use pikan::basis::{build_adapted_grid, build_r_basis, eval_r_basis, eval_spline_basis, Grid, GridMixConfig};
use pikan::diffengine::eval_with_input_derivs;
use pikan::network::{init_model, BasisFamily, KanModel, ParamBlock, ParamSet};
use pikan::optim::{transition_state, AdamConfig, AdamState};
use pikan::physics::{
    draw_without_replacement, fraction_in_box, physics_loss, physics_loss_and_grad, rad_probabilities, rba_update,
    sobol_sample, AnalyticReference, FitTask, GridTable, PdeProblem, RbaWeights, ReferenceSolution,
};
use pikan::trainer::{preset, train, train_function_fit, PresetTask, RunLog};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    slow: bool,
    budget: Option<Duration>,
    run: fn() -> Check,
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let slow = args.iter().any(|a| a == "--ignored" || a == "--include-ignored");
    let only: Vec<u32> = args.iter().filter_map(|a| a.parse().ok()).collect();
    let secs = |s: u64| Some(Duration::from_secs(s));
    let criteria = [
        Criterion { id: 1, name: "spline partition of unity", slow: false, budget: secs(5), run: partition_of_unity },
        Criterion { id: 2, name: "derivative and gradient oracles", slow: false, budget: secs(30), run: derivative_oracles },
        Criterion { id: 3, name: "optimizer state transition identities", slow: false, budget: secs(1), run: transition_identities },
        Criterion { id: 4, name: "attention weight invariants", slow: false, budget: secs(5), run: rba_invariants },
        Criterion { id: 5, name: "resampling distribution", slow: false, budget: secs(10), run: rad_checks },
        Criterion { id: 6, name: "R basis shape", slow: false, budget: secs(1), run: r_basis_checks },
        Criterion { id: 7, name: "exact solutions annihilate residuals", slow: false, budget: secs(5), run: annihilation },
        Criterion { id: 8, name: "function fit with transition vs baseline", slow: true, budget: secs(120), run: function_fit },
        Criterion { id: 9, name: "Burgers loss jump at grid extension", slow: true, budget: secs(600), run: extension_jump },
        Criterion { id: 10, name: "Allen-Cahn with vs without attention weights", slow: true, budget: secs(1200), run: rba_speedup },
        Criterion { id: 11, name: "diffusion full runs", slow: true, budget: None, run: diffusion_full },
        Criterion { id: 12, name: "Helmholtz adaptive full run", slow: true, budget: None, run: helmholtz_full },
        Criterion { id: 13, name: "R basis staticity study", slow: true, budget: None, run: staticity },
        Criterion { id: 14, name: "Burgers and Allen-Cahn against reference tables", slow: true, budget: None, run: tabulated_references },
    ];

    let mut failed = 0;
    for c in &criteria {
        if !only.is_empty() && !only.contains(&c.id) {
            continue;
        }
        if c.slow && !slow {
            println!("SKIP criterion {:>2} ({}): slow, run with --ignored", c.id, c.name);
            continue;
        }
        let t0 = Instant::now();
        let outcome = (c.run)();
        let took = t0.elapsed();
        let over = c.budget.is_some_and(|b| took > b);
        let time = match c.budget {
            Some(b) => format!("{:.1}s of {:.0}s", took.as_secs_f64(), b.as_secs_f64()),
            None => format!("{:.1}s", took.as_secs_f64()),
        };
        match outcome {
            Ok(msg) if msg.starts_with("SKIP") => println!("SKIP criterion {:>2} ({}): {msg}", c.id, c.name),
            Ok(msg) if !over => println!("PASS criterion {:>2} ({}): {msg} [{time}]", c.id, c.name),
            Ok(msg) => {
                failed += 1;
                println!("FAIL criterion {:>2} ({}): over time budget; {msg} [{time}]", c.id, c.name);
            }
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {:>2} ({}): {msg} [{time}]", c.id, c.name);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: pikan::Error) -> String {
    e.to_string()
}

// 1

fn partition_of_unity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for g in 0..200 {
        let intervals = rng.random_range(1..=20);
        let lo: f64 = rng.random_range(-5.0..5.0);
        let width: f64 = rng.random_range(0.1..10.0);
        let knots = if g % 2 == 0 {
            (0..=intervals).map(|i| lo + width * i as f64 / intervals as f64).collect::<Vec<_>>()
        } else {
            // skewed samples give strongly non-uniform quantile grids
            let samples: Vec<f64> = (0..500).map(|_| lo + width * rng.random::<f64>().powi(3)).collect();
            let cfg = GridMixConfig::new(rng.random_range(0.0..1.0));
            build_adapted_grid(&samples, intervals, 0, &cfg).map_err(err)?.knots().to_vec()
        };
        for k in 1..=4 {
            let grid = Grid::new(knots.clone(), k).map_err(err)?;
            let (a, b) = (grid.lo(), grid.hi());
            let xs: Vec<f64> = (0..100).map(|_| rng.random_range(a..b)).collect();
            let m = eval_spline_basis(&grid, &xs).map_err(err)?;
            for r in 0..xs.len() {
                worst = worst.max((m.row(r).sum() - 1.0).abs());
            }
        }
    }
    ensure(worst <= 1e-10, || format!("max |sum - 1| = {worst:e}"))?;
    Ok(format!("200 grids x k=1..4 x 100 points, max |sum - 1| = {worst:.1e}"))
}

// 2

fn random_model(rng: &mut ChaCha8Rng, family: BasisFamily) -> Result<KanModel, String> {
    let width = rng.random_range(1..=3);
    let g = rng.random_range(3..=6);
    let mut m = init_model(&[2, width, 1], family, g, rng.random()).map_err(err)?;
    let mut p = m.params();
    p.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
    m.set_params(p).map_err(err)?;
    Ok(m)
}

/// True when an R-basis bump end point of some node lies between the layer
/// inputs at `x - h` and `x + h`, where the second derivative jumps.
fn straddles_kink(m: &KanModel, x: &[f64], dir: usize, h: f64) -> Result<bool, String> {
    let shifted = |d: f64| {
        let mut y = x.to_vec();
        y[dir] += d;
        pikan::network::PointSet::new(x.len(), y)
    };
    let lo = m.layer_inputs(&shifted(-h)).map_err(err)?;
    let hi = m.layer_inputs(&shifted(h)).map_err(err)?;
    for (l, layer) in m.layers().iter().enumerate() {
        for (i, node) in layer.nodes().iter().enumerate() {
            let Some(r) = node.r_basis() else { continue };
            let (a, b) = (lo[l].row(0)[i], hi[l].row(0)[i]);
            let (a, b) = (a.min(b), a.max(b));
            if r.starts.iter().chain(&r.ends).any(|&e| e >= a && e <= b) {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

fn derivative_oracles() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (h1, h2) = (1e-5, 1e-4);
    let (mut worst1, mut worst2, mut skipped) = (0.0f64, 0.0f64, 0);
    for family in [BasisFamily::Spline { k: 3 }, BasisFamily::ReluR { p: 2, k: 2 }] {
        for _ in 0..20 {
            let m = random_model(&mut rng, family)?;
            for _ in 0..5 {
                let x = [rng.random_range(-0.9..0.9), rng.random_range(-0.9..0.9)];
                for dir in 0..2 {
                    let d = eval_with_input_derivs(&m, &x, dir).map_err(err)?;
                    let f = |s: f64| {
                        let mut y = x;
                        y[dir] += s;
                        m.eval_scalar(&y)
                    };
                    let fd1 = (f(h1) - f(-h1)) / (2.0 * h1);
                    worst1 = worst1.max((d.du - fd1).abs() / fd1.abs().max(1.0));
                    if d.piecewise_second && straddles_kink(&m, &x, dir, 2.0 * h2)? {
                        skipped += 1;
                        continue;
                    }
                    let fd2 = (f(h2) - 2.0 * f(0.0) + f(-h2)) / (h2 * h2);
                    worst2 = worst2.max((d.d2u - fd2).abs() / fd2.abs().max(1.0));
                }
            }
        }
    }
    ensure(worst1 < 1e-5 && worst2 < 1e-3, || {
        format!("input derivatives: first {worst1:.1e}, second {worst2:.1e}")
    })?;

    let mut worst_g = 0.0f64;
    for p in [PdeProblem::diffusion(), PdeProblem::helmholtz(), PdeProblem::burgers(), PdeProblem::allen_cahn()] {
        let mut p = p;
        p.n_f = 8;
        p.n_b = 2;
        let c = p.collocation(1).map_err(err)?;
        let mut m = init_model(&[2, 3, 1], BasisFamily::Spline { k: 3 }, 4, 9).map_err(err)?;
        let mut t = m.params();
        t.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
        m.set_params(t).map_err(err)?;
        let (_, _, g) = physics_loss_and_grad(&p, &m, &c, None).map_err(err)?;
        let theta = m.params();
        let n = theta.len();
        let mut fd = Vec::with_capacity(n);
        for k in 0..n {
            let at = |d: f64| -> Result<f64, String> {
                let mut t = theta.clone();
                *t.iter_mut().nth(k).expect("in range") += d;
                let mut mm = m.clone();
                mm.set_params(t).map_err(err)?;
                Ok(physics_loss(&p, &mm, &c, None).map_err(err)?.total)
            };
            fd.push((at(1e-6)? - at(-1e-6)?) / 2e-6);
        }
        // relative to the largest component, so near-zero entries do not
        // measure finite-difference noise
        let floor = 1e-3 * fd.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (a, b) in g.iter().zip(&fd) {
            worst_g = worst_g.max((a - b).abs() / b.abs().max(floor));
        }
    }
    ensure(worst_g < 1e-4, || format!("parameter gradient rel. error {worst_g:.1e}"))?;
    Ok(format!(
        "input derivs first {worst1:.1e}, second {worst2:.1e} ({skipped} kink-straddling stencils excluded); \
         loss gradients {worst_g:.1e} on 4 PDEs"
    ))
}

// 3

fn moments(rng: &mut ChaCha8Rng, shape: &[usize], g: usize) -> Result<(AdamState, ParamSet), String> {
    let m = init_model(shape, BasisFamily::Spline { k: 3 }, g, 0).map_err(err)?;
    let mut s = AdamState::new(&m.params(), AdamConfig::default()).map_err(err)?;
    s.m.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
    s.v.iter_mut().for_each(|v| *v = rng.random_range(0.0..1.0));
    s.t = 17;
    Ok((s, m.params()))
}

fn transition_identities() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (s, layout) = moments(&mut rng, &[2, 4, 3, 1], 5)?;
    let same = transition_state(&s, &layout).map_err(err)?;
    ensure(same == s, || "G' = G changed the state".into())?;

    let (_, bigger) = moments(&mut rng, &[2, 4, 3, 1], 11)?;
    let mut c = s.clone();
    c.m.iter_mut().for_each(|v| *v = 0.625);
    let out = transition_state(&c, &bigger).map_err(err)?;
    ensure(out.m.iter().all(|&v| v == 0.625), || "constant moments not preserved".into())?;
    ensure(out.t == s.t, || "step count changed".into())?;

    let out = transition_state(&s, &bigger).map_err(err)?;
    for (a, b) in s.m.layers.iter().chain(&s.v.layers).zip(out.m.layers.iter().chain(&out.v.layers)) {
        ensure(a.res_w == b.res_w && a.basis_w == b.basis_w, || "c_r/c_B moments not copied".into())?;
    }

    // one edge with coefficient moments [0, 1] grown to three entries
    let mut small = ParamBlock::zeros(1, 1, 2);
    small.coeffs = vec![0.0, 1.0];
    let st = AdamState {
        t: 1,
        m: ParamSet { layers: vec![small.clone()] },
        v: ParamSet { layers: vec![small] },
        config: AdamConfig::default(),
    };
    let grown = ParamSet { layers: vec![ParamBlock::zeros(1, 1, 3)] };
    let out = transition_state(&st, &grown).map_err(err)?;
    ensure(out.m.layers[0].coeffs == [0.0, 0.5, 1.0], || format!("{:?}", out.m.layers[0].coeffs))?;
    Ok("identity, constants, [0,1] -> [0,0.5,1] and copied edge weights all exact".into())
}

// 4

fn rba_invariants() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut lo, mut hi) = (1.0f64, 0.0f64);
    for _ in 0..10_000 {
        let sizes = [rng.random_range(1..20), rng.random_range(1..5)];
        let eta = rng.random_range(1e-6..1.0);
        let mut w = RbaWeights::new(&sizes, eta).map_err(err)?;
        for _ in 0..rng.random_range(1..10) {
            let r: Vec<Vec<f64>> = sizes
                .iter()
                .map(|&n| (0..n).map(|_| rng.random_range(-10.0..10.0)).collect())
                .collect();
            w = rba_update(&w, &r).map_err(err)?;
            for &a in w.alpha.iter().flatten() {
                lo = lo.min(a);
                hi = hi.max(a);
            }
        }
    }
    ensure(lo > 0.0 && hi <= 1.0, || format!("alpha left (0, 1]: [{lo:e}, {hi}]"))?;

    let r = vec![vec![0.5, -2.0, 1.0], vec![3.0]];
    let mut w = RbaWeights::new(&[3, 1], 0.0).map_err(err)?;
    w.alpha = vec![vec![0.3, 0.9, 0.1], vec![0.7]];
    let same = rba_update(&w, &r).map_err(err)?;
    ensure(same.alpha == w.alpha, || "eta = 0 changed alpha".into())?;
    w.eta = 1.0;
    let once = rba_update(&w, &r).map_err(err)?;
    let twice = rba_update(&once, &r).map_err(err)?;
    ensure(once.alpha == vec![vec![0.25, 1.0, 0.5], vec![1.0]], || format!("{:?}", once.alpha))?;
    ensure(twice.alpha == once.alpha, || "eta = 1 is not a fixed point".into())?;
    Ok(format!("10^4 sequences, alpha in [{lo:.2e}, {hi}]; eta = 0 and eta = 1 exact"))
}

// 5

fn peak(x: &[f64]) -> f64 {
    let d = (x[0] - 0.75).powi(2) + (x[1] - 0.75).powi(2);
    (-d / 0.02).exp()
}

fn rad_checks() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(1..5000);
        let r: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0) * 10f64.powi(rng.random_range(-6..6))).collect();
        let a = rng.random_range(0.0..4.0);
        let c = rng.random_range(0.0..10.0);
        worst = worst.max((rad_probabilities(&r, a, c).iter().sum::<f64>() - 1.0).abs());
    }
    ensure(worst <= 1e-12, || format!("|sum p - 1| = {worst:e}"))?;

    let r: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
    let p = rad_probabilities(&r, 0.0, 0.7);
    ensure(p.iter().all(|&v| (v - 1e-3).abs() < 1e-15), || "a = 0 is not uniform".into())?;

    let n = 1024;
    let dense = sobol_sample(&[(0.0, 1.0); 2], 16 * n, 1).map_err(err)?;
    let r: Vec<f64> = dense.iter().map(peak).collect();
    let p = rad_probabilities(&r, 3.0, 1.0);
    let in_quadrant = |x: &[f64]| x[0] >= 0.5 && x[1] >= 0.5;
    // probability mass of the quadrant bounds what a draw can reach
    let mass: f64 = dense.iter().zip(&p).filter(|(x, _)| in_quadrant(x)).map(|(_, p)| p).sum();
    ensure(mass >= 0.5, || format!("quadrant carries only {mass:.3} of the mass"))?;
    let mut worst_frac = 1.0f64;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let idx = draw_without_replacement(&mut rng, &p, n).map_err(err)?;
        worst_frac = worst_frac.min(fraction_in_box(&dense.select(&idx), &[0.5, 0.5], &[1.0, 1.0]));
    }
    ensure(worst_frac >= 0.5, || format!("peak quadrant got {worst_frac:.3} of the samples"))?;
    Ok(format!(
        "|sum p - 1| <= {worst:.1e}; a = 0 uniform; peak quadrant mass {mass:.3}, drawn fraction >= {worst_frac:.3} over 20 seeds"
    ))
}

// 6

fn r_basis_checks() -> Check {
    let uniform = Grid::new(vec![0.0, 1.0, 2.0, 3.0, 4.0], 0).map_err(err)?;
    let skewed = Grid::new(vec![0.05, 0.14, 0.22, 1.20, 11.40], 0).map_err(err)?;
    for (grid, p, k) in [(&uniform, 2, 3), (&skewed, 2, 3), (&skewed, 1, 2), (&uniform, 3, 1)] {
        let r = build_r_basis(grid, p, k).map_err(err)?;
        for i in 0..r.len() {
            let c = r.center(i);
            ensure((c - grid.knots()[i]).abs() < 1e-12, || format!("centre {i} off its grid point"))?;
            let v = eval_r_basis(&r, &[c, r.starts[i], r.ends[i]]).map_err(err)?;
            ensure((v[(0, i)] - 1.0).abs() < 1e-12, || format!("R_{i}(centre) = {}", v[(0, i)]))?;
            ensure(v[(1, i)] == 0.0 && v[(2, i)] == 0.0, || format!("R_{i} nonzero at its ends"))?;
        }
        let (a, b) = (grid.lo(), grid.hi());
        let xs: Vec<f64> = (0..1000).map(|j| a + (b - a) * j as f64 / 999.0).collect();
        let m = eval_r_basis(&r, &xs).map_err(err)?;
        let min = (0..xs.len()).map(|j| m.row(j).sum()).fold(f64::INFINITY, f64::min);
        ensure(min > 0.0, || format!("dead zone: min sum {min:e} (p={p}, k={k})"))?;
    }
    let r = build_r_basis(&uniform, 2, 3).map_err(err)?;
    ensure((0..r.len()).all(|i| (r.width(i) - r.width(0)).abs() < 1e-12), || "uneven widths on the uniform grid".into())?;
    let r = build_r_basis(&skewed, 2, 3).map_err(err)?;
    let widths: Vec<f64> = (0..r.len()).map(|i| r.width(i)).collect();
    ensure(widths.windows(2).all(|w| w[1] > w[0]), || format!("widths {widths:?}"))?;
    Ok(format!("centres 1, ends 0, no dead zones; widths on the skewed grid {widths:.3?}"))
}

// 7

fn annihilation() -> Check {
    let mut out = Vec::new();
    for (p, r) in [
        (PdeProblem::diffusion(), AnalyticReference::Diffusion),
        (PdeProblem::helmholtz(), AnalyticReference::Helmholtz),
    ] {
        let pts = sobol_sample(&p.bounds(), 512, 1).map_err(err)?;
        let mut worst = 0.0f64;
        let mut worst_fd = 0.0f64;
        let h = 1e-4;
        for x in pts.iter() {
            let f = r.fields(x);
            worst = worst.max(p.residual(x, &f).abs());
            // the closed-form derivatives against differences of the solution
            for a in 0..2 {
                let at = |d: f64| {
                    let mut y = x.to_vec();
                    y[a] += d;
                    r.eval(&y)
                };
                let d1 = (at(h) - at(-h)) / (2.0 * h);
                let d2 = (at(h) - 2.0 * at(0.0) + at(-h)) / (h * h);
                worst_fd = worst_fd.max((f.d1[a] - d1).abs()).max((f.d2[a] - d2).abs() / 100.0);
            }
        }
        ensure(worst < 1e-8, || format!("{}: max |r| = {worst:e}", p.name))?;
        ensure(worst_fd < 1e-5, || format!("{}: analytic derivatives off by {worst_fd:e}", p.name))?;
        out.push(format!("{} max |r| = {worst:.1e}", p.name));
    }
    Ok(out.join(", "))
}

// 8-14: experiment reproductions

fn run_preset(name: &str) -> Result<RunLog, String> {
    run_preset_with(name, None)
}

fn run_preset_with(name: &str, reference: Option<ReferenceSolution>) -> Result<RunLog, String> {
    let p = preset(name).map_err(err)?;
    let model = p.model.build(p.plan.seed).map_err(err)?;
    let t0 = Instant::now();
    let log = match &p.task {
        PresetTask::Fit => train_function_fit(&FitTask::default(), model, &p.plan).map_err(err)?.1,
        PresetTask::Pde(problem) => {
            let mut problem = PdeProblem::by_name(problem).map_err(err)?;
            if reference.is_some() {
                problem.reference = reference;
            }
            train(&problem, model, &p.plan).map_err(err)?.1
        }
    };
    eprintln!(
        "  {name}: {} epochs in {:.0}s, final loss {:.4e}, rel L2 {:?}",
        log.records.len(),
        t0.elapsed().as_secs_f64(),
        log.last().map_or(f64::NAN, |r| r.loss),
        log.final_rel_l2()
    );
    Ok(log)
}

fn loss(log: &RunLog, epoch: u64) -> Result<f64, String> {
    log.loss_at(epoch).ok_or_else(|| format!("no record for epoch {epoch}"))
}

fn rel_l2(log: &RunLog) -> Result<f64, String> {
    log.final_rel_l2().ok_or_else(|| "no relative L2 recorded".to_string())
}

fn function_fit() -> Check {
    let ada = run_preset("function_fit-adaptive")?;
    let base = run_preset("function_fit-baseline")?;
    let (la, lb) = (ada.last().expect("800 epochs").loss, base.last().expect("800 epochs").loss);
    let mut jumps = Vec::new();
    for e in [200, 400, 600] {
        let ra = loss(&ada, e + 1)? / loss(&ada, e - 1)?;
        let rb = loss(&base, e + 1)? / loss(&base, e - 1)?;
        jumps.push(format!("{e}: {ra:.2}/{rb:.2}"));
        ensure(ra < 1.0 && rb > 1.0, || format!("at epoch {e} loss ratios adaptive {ra:.3}, baseline {rb:.3}"))?;
    }
    ensure(la <= lb / 3.0, || format!("final loss adaptive {la:.3e} vs baseline {lb:.3e}"))?;
    Ok(format!(
        "final loss {la:.3e} vs {lb:.3e} (x{:.1}); loss(E+1)/loss(E-1) adaptive/baseline {}",
        lb / la,
        jumps.join(", ")
    ))
}

fn extension_jump() -> Check {
    let with = run_preset("burgers-extension-transition")?;
    let reset = run_preset("burgers-extension-reset")?;
    let rw = loss(&with, 2501)? / loss(&with, 2499)?;
    let rr = loss(&reset, 2501)? / loss(&reset, 2499)?;
    ensure(rw < rr, || format!("jump ratio with transition {rw:.3} vs reset {rr:.3}"))?;
    Ok(format!("loss(2501)/loss(2499): transition {rw:.3}, reset {rr:.3}"))
}

fn rba_speedup() -> Check {
    let with = run_preset("allen_cahn-rba")?;
    let without = run_preset("allen_cahn-no-rba")?;
    // compare the unweighted loss; the weighted one is smaller by construction
    let plain = |log: &RunLog| {
        log.record(8000)
            .map(|r| r.loss_plain)
            .ok_or_else(|| "no record for epoch 8000".to_string())
    };
    let (a, b) = (plain(&with)?, plain(&without)?);
    ensure(a < b, || format!("loss at 8000 with RBA {a:.3e} vs without {b:.3e}"))?;
    Ok(format!("unweighted loss at epoch 8000: with RBA {a:.3e}, without {b:.3e}"))
}

fn diffusion_full() -> Check {
    let ada = rel_l2(&run_preset("diffusion-adaptive")?)?;
    let base = rel_l2(&run_preset("diffusion-baseline")?)?;
    let msg = format!("adaptive {:.4}% (gate 0.1%), baseline {:.4}% (gate 1%)", 100.0 * ada, 100.0 * base);
    ensure(ada <= 1e-3 && base <= 1e-2, || msg.clone())?;
    Ok(msg)
}

fn helmholtz_full() -> Check {
    let p = preset("helmholtz-adaptive").map_err(err)?;
    let PresetTask::Pde(name) = &p.task else {
        return Err("not a PDE preset".into());
    };
    let w_f = PdeProblem::by_name(name).map_err(err)?.w_f;
    ensure(w_f == 0.01, || format!("w_f = {w_f}"))?;
    let e = rel_l2(&run_preset("helmholtz-adaptive")?)?;
    let msg = format!("adaptive {:.4}% (gate 0.9%), w_f = {w_f}", 100.0 * e);
    ensure(e <= 9e-3, || msg.clone())?;
    Ok(msg)
}

fn staticity() -> Check {
    let s = rel_l2(&run_preset("helmholtz-relu-static")?)?;
    let u = rel_l2(&run_preset("helmholtz-relu-uniform")?)?;
    let a = rel_l2(&run_preset("helmholtz-relu-adaptive")?)?;
    let msg = format!(
        "static {:.3}% > non-fully-adaptive {:.3}% > fully-adaptive {:.3}% (gate 10%)",
        100.0 * s,
        100.0 * u,
        100.0 * a
    );
    ensure(s > u && u > a && a <= 0.1, || msg.clone())?;
    Ok(msg)
}

fn tabulated_references() -> Check {
    let mut done = Vec::new();
    for (var, name, gate) in [
        ("PIKAN_BURGERS_REFERENCE", "burgers-adaptive", 0.06),
        ("PIKAN_ALLEN_CAHN_REFERENCE", "allen_cahn-adaptive", 0.04),
    ] {
        let Ok(path) = std::env::var(var) else { continue };
        let table = GridTable::from_csv(&path).map_err(err)?;
        let e = rel_l2(&run_preset_with(name, Some(ReferenceSolution::Table(table)))?)?;
        let msg = format!("{name} {:.3}% (gate {}%)", 100.0 * e, 100.0 * gate);
        ensure(e <= gate, || msg.clone())?;
        done.push(msg);
    }
    if done.is_empty() {
        return Ok("SKIP: no reference table given (set PIKAN_BURGERS_REFERENCE / PIKAN_ALLEN_CAHN_REFERENCE)".into());
    }
    Ok(done.join(", "))
}
