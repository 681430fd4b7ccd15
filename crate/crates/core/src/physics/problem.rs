use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::reference::ReferenceSolution;
use super::sobol::sobol_sample;
use crate::diffengine::{JetSpec, Lin, NetJet, MAX_DIRS};
use crate::error::{Error, Result};
use crate::network::PointSet;

/// Arithmetic needed by residual operators, so they can run on plain
/// numbers (closed-form fields) and on [`Lin`] (network fields under
/// differentiation).
pub trait FieldScalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Mul<f64, Output = Self> + Sub<f64, Output = Self>
{
    fn powi(self, n: i32) -> Self;
}

impl FieldScalar for f64 {
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}

impl FieldScalar for Lin {
    fn powi(self, n: i32) -> Self {
        Lin::powi(self, n)
    }
}

/// A solution field and its first and second derivatives along each axis
/// at one point.
#[derive(Debug, Clone, Copy)]
pub struct Fields<S> {
    pub u: S,
    pub d1: [S; MAX_DIRS],
    pub d2: [S; MAX_DIRS],
}

impl Fields<Lin> {
    /// Output 0 of a jet that tracks every problem axis.
    pub fn from_jet(jet: &NetJet) -> Result<Self> {
        let mut f = Fields {
            u: jet.lin_value(0),
            d1: [Lin::constant(0.0); MAX_DIRS],
            d2: [Lin::constant(0.0); MAX_DIRS],
        };
        for k in 0..jet.dirs() {
            f.d1[k] = jet.lin_d1(0, k)?;
            f.d2[k] = jet.lin_d2(0, k)?;
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PdeKind {
    /// `u_t - u_xx = (pi^2 - 1) exp(-t) sin(pi x)` on axes `(t, x)`.
    Diffusion,
    /// `u_xx + u_yy + k^2 u = (k^2 - 17 pi^2) sin(pi x) sin(4 pi y)` on axes `(x, y)`.
    Helmholtz { k: f64 },
    /// `u_t + u u_x - nu u_xx = 0` on axes `(t, x)`.
    Burgers { nu: f64 },
    /// `u_t - D u_xx + 5 (u^3 - u) = 0` on axes `(t, x)`.
    AllenCahn { d: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

/// Prescribed boundary value as a function of the free coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryTarget {
    Constant(f64),
    /// `amp * sin(pi * x_axis)`.
    SinPi { axis: usize, amp: f64 },
    /// `x^2 cos(pi x)` with `x = x_axis`.
    SquareCosPi { axis: usize },
}

impl BoundaryTarget {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            BoundaryTarget::Constant(c) => c,
            BoundaryTarget::SinPi { axis, amp } => amp * (PI * x[axis]).sin(),
            BoundaryTarget::SquareCosPi { axis } => x[axis] * x[axis] * (PI * x[axis]).cos(),
        }
    }
}

/// Dirichlet condition `u = target` on the face `x_axis = at`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpec {
    pub name: String,
    pub axis: usize,
    pub at: f64,
    pub target: BoundaryTarget,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct PdeProblem {
    pub name: String,
    pub kind: PdeKind,
    pub axes: Vec<Axis>,
    pub boundaries: Vec<BoundarySpec>,
    pub w_f: f64,
    pub n_f: usize,
    pub n_b: usize,
    pub reference: Option<ReferenceSolution>,
}

/// Interior and boundary points, in problem coordinates and mapped to
/// network inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct CollocationSet {
    pub interior: PointSet,
    pub boundary: Vec<PointSet>,
    pub interior_input: PointSet,
    pub boundary_input: Vec<PointSet>,
}

impl CollocationSet {
    /// Number of points of every residual family, interior first.
    pub fn family_sizes(&self) -> Vec<usize> {
        std::iter::once(self.interior.len())
            .chain(self.boundary.iter().map(PointSet::len))
            .collect()
    }
}

fn axis(name: &str, lo: f64, hi: f64) -> Axis {
    Axis {
        name: name.into(),
        lo,
        hi,
    }
}

fn face(name: &str, axis: usize, at: f64, target: BoundaryTarget) -> BoundarySpec {
    BoundarySpec {
        name: name.into(),
        axis,
        at,
        target,
        weight: 1.0,
    }
}

/// Default collocation sizes.
pub const DEFAULT_N_F: usize = 1 << 12;
pub const DEFAULT_N_B: usize = 1 << 6;

impl PdeProblem {
    pub fn diffusion() -> Self {
        Self {
            name: "diffusion".into(),
            kind: PdeKind::Diffusion,
            axes: vec![axis("t", 0.0, 1.0), axis("x", 0.0, 1.0)],
            boundaries: vec![
                face("t=0", 0, 0.0, BoundaryTarget::SinPi { axis: 1, amp: 1.0 }),
                face("x=0", 1, 0.0, BoundaryTarget::Constant(0.0)),
                face("x=1", 1, 1.0, BoundaryTarget::Constant(0.0)),
            ],
            w_f: 1.0,
            n_f: DEFAULT_N_F,
            n_b: DEFAULT_N_B,
            reference: Some(ReferenceSolution::Analytic(AnalyticReference::Diffusion)),
        }
    }

    pub fn helmholtz() -> Self {
        Self {
            name: "helmholtz".into(),
            kind: PdeKind::Helmholtz { k: 1.0 },
            axes: vec![axis("x", -1.0, 1.0), axis("y", -1.0, 1.0)],
            boundaries: vec![
                face("x=-1", 0, -1.0, BoundaryTarget::Constant(0.0)),
                face("x=1", 0, 1.0, BoundaryTarget::Constant(0.0)),
                face("y=-1", 1, -1.0, BoundaryTarget::Constant(0.0)),
                face("y=1", 1, 1.0, BoundaryTarget::Constant(0.0)),
            ],
            w_f: 0.01,
            n_f: DEFAULT_N_F,
            n_b: DEFAULT_N_B,
            reference: Some(ReferenceSolution::Analytic(AnalyticReference::Helmholtz)),
        }
    }

    pub fn burgers() -> Self {
        Self {
            name: "burgers".into(),
            kind: PdeKind::Burgers { nu: 0.01 / PI },
            axes: vec![axis("t", 0.0, 1.0), axis("x", -1.0, 1.0)],
            boundaries: vec![
                face("t=0", 0, 0.0, BoundaryTarget::SinPi { axis: 1, amp: -1.0 }),
                face("x=-1", 1, -1.0, BoundaryTarget::Constant(0.0)),
                face("x=1", 1, 1.0, BoundaryTarget::Constant(0.0)),
            ],
            w_f: 1.0,
            n_f: DEFAULT_N_F,
            n_b: DEFAULT_N_B,
            reference: None,
        }
    }

    pub fn allen_cahn() -> Self {
        Self {
            name: "allen_cahn".into(),
            kind: PdeKind::AllenCahn { d: 0.001 },
            axes: vec![axis("t", 0.0, 1.0), axis("x", -1.0, 1.0)],
            boundaries: vec![
                face("t=0", 0, 0.0, BoundaryTarget::SquareCosPi { axis: 1 }),
                face("x=-1", 1, -1.0, BoundaryTarget::Constant(-1.0)),
                face("x=1", 1, 1.0, BoundaryTarget::Constant(-1.0)),
            ],
            w_f: 1.0,
            n_f: DEFAULT_N_F,
            n_b: DEFAULT_N_B,
            reference: None,
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "diffusion" => Ok(Self::diffusion()),
            "helmholtz" => Ok(Self::helmholtz()),
            "burgers" => Ok(Self::burgers()),
            "allen_cahn" => Ok(Self::allen_cahn()),
            _ => Err(Error::InvalidArgument(format!("unknown PDE problem '{name}'"))),
        }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.axes.iter().map(|a| (a.lo, a.hi)).collect()
    }

    /// Named physical constants and their current values.
    pub fn constants(&self) -> Vec<(&'static str, f64)> {
        match self.kind {
            PdeKind::Diffusion => vec![],
            PdeKind::Helmholtz { k } => vec![("k", k)],
            PdeKind::Burgers { nu } => vec![("nu", nu)],
            PdeKind::AllenCahn { d } => vec![("D", d)],
        }
    }

    pub fn set_constant(&mut self, name: &str, value: f64) -> Result<()> {
        match (&mut self.kind, name) {
            (PdeKind::Helmholtz { k }, "k") => *k = value,
            (PdeKind::Burgers { nu }, "nu") => *nu = value,
            (PdeKind::AllenCahn { d }, "D") => *d = value,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "problem '{}' has no constant '{name}'",
                    self.name
                )))
            }
        }
        Ok(())
    }

    /// `d(network input)/d(problem coordinate)` per axis: every axis is
    /// mapped affinely onto `[-1, 1]`.
    pub fn input_scale(&self) -> Vec<f64> {
        self.axes.iter().map(|a| 2.0 / (a.hi - a.lo)).collect()
    }

    pub fn to_input(&self, x: &[f64], out: &mut [f64]) {
        for ((o, &v), a) in out.iter_mut().zip(x).zip(&self.axes) {
            *o = (2.0 * v - a.lo - a.hi) / (a.hi - a.lo);
        }
    }

    pub fn to_inputs(&self, points: &PointSet) -> PointSet {
        let mut out = PointSet::with_capacity(points.dim(), points.len());
        let mut row = vec![0.0; points.dim()];
        for x in points.iter() {
            self.to_input(x, &mut row);
            out.push(&row);
        }
        out
    }

    /// Jets along every axis, in problem coordinates.
    pub fn residual_spec(&self) -> JetSpec {
        JetSpec::all_axes(&self.input_scale()).expect("problem dimension within jet limits")
    }

    /// Source term `f` on the right-hand side.
    pub fn source(&self, x: &[f64]) -> f64 {
        match self.kind {
            PdeKind::Diffusion => (PI * PI - 1.0) * (-x[0]).exp() * (PI * x[1]).sin(),
            PdeKind::Helmholtz { k } => (k * k - 17.0 * PI * PI) * (PI * x[0]).sin() * (4.0 * PI * x[1]).sin(),
            PdeKind::Burgers { .. } | PdeKind::AllenCahn { .. } => 0.0,
        }
    }

    /// `F(u) - f` at problem point `x`.
    pub fn residual<S: FieldScalar>(&self, x: &[f64], f: &Fields<S>) -> S {
        let src = self.source(x);
        match self.kind {
            PdeKind::Diffusion => f.d1[0] - f.d2[1] - src,
            PdeKind::Helmholtz { k } => f.d2[0] + f.d2[1] + f.u * (k * k) - src,
            PdeKind::Burgers { nu } => f.d1[0] + f.u * f.d1[1] - f.d2[1] * nu,
            PdeKind::AllenCahn { d } => f.d1[0] - f.d2[1] * d + (f.u.powi(3) - f.u) * 5.0,
        }
    }

    /// Collocation points drawn from the Sobol sequence after skipping
    /// `skip` points: `n_f` in the interior, `n_b` on each boundary face.
    pub fn collocation(&self, skip: u64) -> Result<CollocationSet> {
        let interior = sobol_sample(&self.bounds(), self.n_f, skip)?;
        let mut boundary = Vec::with_capacity(self.boundaries.len());
        for b in &self.boundaries {
            let free: Vec<usize> = (0..self.dim()).filter(|&a| a != b.axis).collect();
            let ranges: Vec<(f64, f64)> = free.iter().map(|&a| (self.axes[a].lo, self.axes[a].hi)).collect();
            let s = sobol_sample(&ranges, self.n_b, skip)?;
            let mut pts = PointSet::with_capacity(self.dim(), self.n_b);
            let mut row = vec![0.0; self.dim()];
            for r in s.iter() {
                row[b.axis] = b.at;
                for (&a, &v) in free.iter().zip(r) {
                    row[a] = v;
                }
                pts.push(&row);
            }
            boundary.push(pts);
        }
        Ok(self.collocation_from(interior, boundary))
    }

    pub fn collocation_from(&self, interior: PointSet, boundary: Vec<PointSet>) -> CollocationSet {
        let interior_input = self.to_inputs(&interior);
        let boundary_input = boundary.iter().map(|b| self.to_inputs(b)).collect();
        CollocationSet {
            interior,
            boundary,
            interior_input,
            boundary_input,
        }
    }

    pub fn describe(&self) -> String {
        let mut s = String::new();
        let eq = match self.kind {
            PdeKind::Diffusion => "u_t - u_xx = (pi^2 - 1) exp(-t) sin(pi x)".to_string(),
            PdeKind::Helmholtz { .. } => "u_xx + u_yy + k^2 u = (k^2 - 17 pi^2) sin(pi x) sin(4 pi y)".to_string(),
            PdeKind::Burgers { .. } => "u_t + u u_x - nu u_xx = 0".to_string(),
            PdeKind::AllenCahn { .. } => "u_t - D u_xx + 5 (u^3 - u) = 0".to_string(),
        };
        s.push_str(&format!("{}: {eq}\n", self.name));
        let dom: Vec<String> = self.axes.iter().map(|a| format!("{} in [{}, {}]", a.name, a.lo, a.hi)).collect();
        s.push_str(&format!("  domain: {}\n", dom.join(", ")));
        for b in &self.boundaries {
            s.push_str(&format!("  boundary {}: u = {}\n", b.name, b.target.describe(&self.axes)));
        }
        for (name, v) in self.constants() {
            let note = if name == "nu" { " (0.01/pi)" } else { "" };
            s.push_str(&format!("  {name} = {v}{note}\n"));
        }
        s.push_str(&format!(
            "  w_f = {}, N_f = {}, N_b = {} per boundary\n",
            self.w_f, self.n_f, self.n_b
        ));
        let r = match &self.reference {
            Some(r) => r.describe(),
            None => "external table (not loaded)".into(),
        };
        s.push_str(&format!("  reference: {r}"));
        s
    }
}

impl BoundaryTarget {
    fn describe(&self, axes: &[Axis]) -> String {
        match *self {
            BoundaryTarget::Constant(c) => format!("{c}"),
            BoundaryTarget::SinPi { axis, amp } => {
                let sign = if amp < 0.0 { "-" } else { "" };
                let mag = amp.abs();
                let m = if mag == 1.0 { String::new() } else { format!("{mag} ") };
                format!("{sign}{m}sin(pi {})", axes[axis].name)
            }
            BoundaryTarget::SquareCosPi { axis } => {
                let n = &axes[axis].name;
                format!("{n}^2 cos(pi {n})")
            }
        }
    }
}

/// Closed-form solutions of the problems that have one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalyticReference {
    /// `sin(pi x) exp(-t)` on axes `(t, x)`.
    Diffusion,
    /// `sin(pi x) sin(4 pi y)`.
    Helmholtz,
}

impl AnalyticReference {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            AnalyticReference::Diffusion => (PI * x[1]).sin() * (-x[0]).exp(),
            AnalyticReference::Helmholtz => (PI * x[0]).sin() * (4.0 * PI * x[1]).sin(),
        }
    }

    /// Value with first and second derivatives along every axis.
    pub fn fields(&self, x: &[f64]) -> Fields<f64> {
        let mut f = Fields {
            u: self.eval(x),
            d1: [0.0; MAX_DIRS],
            d2: [0.0; MAX_DIRS],
        };
        match self {
            AnalyticReference::Diffusion => {
                let (s, c) = (PI * x[1]).sin_cos();
                let e = (-x[0]).exp();
                f.d1[0] = -s * e;
                f.d2[0] = s * e;
                f.d1[1] = PI * c * e;
                f.d2[1] = -PI * PI * s * e;
            }
            AnalyticReference::Helmholtz => {
                let (sx, cx) = (PI * x[0]).sin_cos();
                let (sy, cy) = (4.0 * PI * x[1]).sin_cos();
                f.d1[0] = PI * cx * sy;
                f.d2[0] = -PI * PI * sx * sy;
                f.d1[1] = 4.0 * PI * sx * cy;
                f.d2[1] = -16.0 * PI * PI * sx * sy;
            }
        }
        f
    }
}

impl fmt::Display for AnalyticReference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalyticReference::Diffusion => write!(f, "sin(pi x) exp(-t)"),
            AnalyticReference::Helmholtz => write!(f, "sin(pi x) sin(4 pi y)"),
        }
    }
}

/// Supervised regression of
/// `f(x) = exp(sin(pi (x1^2 + x2^2)) / 2 + sin(pi (x3^2 + x4^2)) / 2)`
/// from points drawn uniformly in `[-1, 1]^4`.
#[derive(Debug, Clone, PartialEq)]
pub struct FitTask {
    pub name: String,
    pub dim: usize,
    pub n_points: usize,
}

impl Default for FitTask {
    fn default() -> Self {
        Self {
            name: "function_fit".into(),
            dim: 4,
            n_points: 3000,
        }
    }
}

impl FitTask {
    pub fn target(x: &[f64]) -> f64 {
        let a = (PI * (x[0] * x[0] + x[1] * x[1])).sin();
        let b = (PI * (x[2] * x[2] + x[3] * x[3])).sin();
        (0.5 * a + 0.5 * b).exp()
    }

    /// Inputs and target values.
    pub fn sample(&self, seed: u64) -> (PointSet, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = PointSet::with_capacity(self.dim, self.n_points);
        let mut row = vec![0.0; self.dim];
        for _ in 0..self.n_points {
            row.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
            pts.push(&row);
        }
        let y = pts.iter().map(Self::target).collect();
        (pts, y)
    }

    pub fn describe(&self) -> String {
        format!(
            "{}: regression of exp(sin(pi (x1^2 + x2^2))/2 + sin(pi (x3^2 + x4^2))/2)\n  domain: [-1, 1]^4, {} uniformly sampled points",
            self.name, self.n_points
        )
    }
}

/// One of the built-in tasks.
#[derive(Debug, Clone)]
pub enum Task {
    Pde(Box<PdeProblem>),
    Fit(FitTask),
}

impl Task {
    pub fn name(&self) -> &str {
        match self {
            Task::Pde(p) => &p.name,
            Task::Fit(f) => &f.name,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Task::Pde(p) => p.describe(),
            Task::Fit(f) => f.describe(),
        }
    }
}

/// The four PDE problems followed by the function-fit task.
pub fn builtin_problems() -> Vec<Task> {
    vec![
        Task::Pde(Box::new(PdeProblem::diffusion())),
        Task::Pde(Box::new(PdeProblem::helmholtz())),
        Task::Pde(Box::new(PdeProblem::burgers())),
        Task::Pde(Box::new(PdeProblem::allen_cahn())),
        Task::Fit(FitTask::default()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn references_at_known_points() {
        assert_eq!(AnalyticReference::Diffusion.eval(&[0.0, 0.5]), 1.0);
        assert_eq!(AnalyticReference::Helmholtz.eval(&[0.5, 0.125]), 1.0);
    }

    #[test]
    fn exact_fields_annihilate_residuals() {
        for p in [PdeProblem::diffusion(), PdeProblem::helmholtz()] {
            let Some(ReferenceSolution::Analytic(r)) = p.reference.clone() else {
                panic!()
            };
            let pts = sobol_sample(&p.bounds(), 256, 1).unwrap();
            for x in pts.iter() {
                let res = p.residual(x, &r.fields(x));
                assert!(res.abs() < 1e-10, "{} {x:?}: {res}", p.name);
            }
        }
    }

    #[test]
    fn zero_field_residuals() {
        let zero = Fields {
            u: 0.0,
            d1: [0.0; MAX_DIRS],
            d2: [0.0; MAX_DIRS],
        };
        let d = PdeProblem::diffusion();
        let x = [0.3, 0.2];
        let expect = -(PI * PI - 1.0) * (-0.3f64).exp() * (PI * 0.2).sin();
        assert_eq!(d.residual(&x, &zero), expect);
        let b = PdeProblem::burgers();
        assert_eq!(b.residual(&x, &zero), 0.0);
        assert_eq!(b.constants(), vec![("nu", 0.01 / PI)]);
        assert_eq!(PdeProblem::allen_cahn().constants(), vec![("D", 0.001)]);
    }

    #[test]
    fn defaults() {
        for t in builtin_problems() {
            if let Task::Pde(p) = t {
                assert_eq!((p.n_f, p.n_b), (4096, 64));
            }
        }
        assert_eq!(PdeProblem::helmholtz().w_f, 0.01);
        assert_eq!(builtin_problems().len(), 5);
    }

    #[test]
    fn boundary_points_lie_on_their_faces() {
        for p in [
            PdeProblem::diffusion(),
            PdeProblem::helmholtz(),
            PdeProblem::burgers(),
            PdeProblem::allen_cahn(),
        ] {
            let c = p.collocation(1).unwrap();
            assert_eq!(c.interior.len(), 4096);
            for (b, pts) in p.boundaries.iter().zip(&c.boundary) {
                assert_eq!(pts.len(), 64);
                assert!(pts.iter().all(|x| x[b.axis].to_bits() == b.at.to_bits()));
            }
            let inp = &c.interior_input;
            assert!(inp.as_slice().iter().all(|v| (-1.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn input_map_hits_box_corners() {
        let p = PdeProblem::burgers();
        let mut out = [0.0; 2];
        p.to_input(&[0.0, -1.0], &mut out);
        assert_eq!(out, [-1.0, -1.0]);
        p.to_input(&[1.0, 1.0], &mut out);
        assert_eq!(out, [1.0, 1.0]);
    }

    #[test]
    fn fit_target_at_origin() {
        assert_eq!(FitTask::target(&[0.0; 4]), 1.0);
        let t = FitTask::default();
        let (x, y) = t.sample(3);
        assert_eq!((x.len(), y.len()), (3000, 3000));
        assert_eq!(t.sample(3).0, x);
    }
}
