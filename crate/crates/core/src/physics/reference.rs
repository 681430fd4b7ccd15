use std::path::Path;

use serde::Deserialize;

use super::problem::{AnalyticReference, PdeProblem};
use crate::error::{Error, Result};
use crate::network::{KanModel, PointSet};

/// Reference field tabulated on a two-dimensional tensor grid and read
/// between nodes by bilinear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct GridTable {
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
    /// Row-major over `axis1` then `axis2`.
    pub values: Vec<f64>,
}

#[derive(Deserialize)]
struct Row {
    axis1: f64,
    axis2: f64,
    u: f64,
}

fn strictly_increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[0] < w[1])
}

impl GridTable {
    pub fn new(axis1: Vec<f64>, axis2: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if axis1.len() < 2 || axis2.len() < 2 {
            return Err(Error::Data("reference grid needs at least two nodes per axis".into()));
        }
        if !strictly_increasing(&axis1) || !strictly_increasing(&axis2) {
            return Err(Error::Data("reference grid coordinates must be strictly increasing".into()));
        }
        if values.len() != axis1.len() * axis2.len() {
            return Err(Error::Data(format!(
                "reference grid of {}x{} nodes needs {} values, got {}",
                axis1.len(),
                axis2.len(),
                axis1.len() * axis2.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: i, value: values[i] });
        }
        Ok(Self { axis1, axis2, values })
    }

    /// Reads a table with header `axis1,axis2,u`, one row per grid node,
    /// `axis1` varying slowest.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        let headers = rdr
            .headers()
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["axis1", "axis2", "u"] {
            return Err(Error::Data(format!(
                "{}: expected header 'axis1,axis2,u'",
                path.display()
            )));
        }
        let mut rows = Vec::new();
        for r in rdr.deserialize() {
            let r: Row = r.map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
            rows.push(r);
        }
        Self::from_rows(&rows).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
    }

    fn from_rows(rows: &[Row]) -> Result<Self> {
        let mut axis1: Vec<f64> = Vec::new();
        for r in rows {
            if axis1.last() != Some(&r.axis1) {
                axis1.push(r.axis1);
            }
        }
        if axis1.is_empty() || !rows.len().is_multiple_of(axis1.len()) {
            return Err(Error::Data("rows do not form a tensor grid".into()));
        }
        let n2 = rows.len() / axis1.len();
        let axis2: Vec<f64> = rows[..n2].iter().map(|r| r.axis2).collect();
        for (k, r) in rows.iter().enumerate() {
            if r.axis1 != axis1[k / n2] || r.axis2 != axis2[k % n2] {
                return Err(Error::Data(format!("row {} breaks the tensor-grid ordering", k + 2)));
            }
        }
        Self::new(axis1, axis2, rows.iter().map(|r| r.u).collect())
    }

    fn locate(nodes: &[f64], x: f64) -> Option<(usize, f64)> {
        let (lo, hi) = (nodes[0], nodes[nodes.len() - 1]);
        if !(lo..=hi).contains(&x) {
            return None;
        }
        let i = nodes.partition_point(|&v| v <= x).clamp(1, nodes.len() - 1) - 1;
        Some((i, (x - nodes[i]) / (nodes[i + 1] - nodes[i])))
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let out_of_range = || {
            Error::InvalidArgument(format!(
                "point {x:?} lies outside the reference grid [{}, {}] x [{}, {}]",
                self.axis1[0],
                self.axis1[self.axis1.len() - 1],
                self.axis2[0],
                self.axis2[self.axis2.len() - 1]
            ))
        };
        let (i, s) = Self::locate(&self.axis1, x[0]).ok_or_else(out_of_range)?;
        let (j, t) = Self::locate(&self.axis2, x[1]).ok_or_else(out_of_range)?;
        let n2 = self.axis2.len();
        let v = |a: usize, b: usize| self.values[a * n2 + b];
        Ok((1.0 - s) * ((1.0 - t) * v(i, j) + t * v(i, j + 1)) + s * ((1.0 - t) * v(i + 1, j) + t * v(i + 1, j + 1)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceSolution {
    Analytic(AnalyticReference),
    Table(GridTable),
}

impl ReferenceSolution {
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        match self {
            ReferenceSolution::Analytic(a) => Ok(a.eval(x)),
            ReferenceSolution::Table(t) => t.eval(x),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ReferenceSolution::Analytic(a) => format!("analytic, {a}"),
            ReferenceSolution::Table(t) => format!("table, {}x{} nodes", t.axis1.len(), t.axis2.len()),
        }
    }

    /// Checks that a tabulated reference covers the whole problem domain.
    pub fn check_covers(&self, problem: &PdeProblem) -> Result<()> {
        let ReferenceSolution::Table(t) = self else {
            return Ok(());
        };
        let b = problem.bounds();
        let covers = |nodes: &[f64], (lo, hi): (f64, f64)| nodes[0] <= lo && nodes[nodes.len() - 1] >= hi;
        if b.len() != 2 || !covers(&t.axis1, b[0]) || !covers(&t.axis2, b[1]) {
            return Err(Error::Data(format!(
                "reference grid does not cover the domain of '{}'",
                problem.name
            )));
        }
        Ok(())
    }
}

/// Default evaluation lattice size per axis.
pub const EVAL_LATTICE: usize = 256;

/// `n` evenly spaced nodes per axis over the problem box, endpoints
/// included, first axis varying slowest. A single node sits at the centre.
pub fn eval_lattice(problem: &PdeProblem, n: usize) -> PointSet {
    let node = |lo: f64, hi: f64, i: usize| {
        if n == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    };
    let axes: Vec<Vec<f64>> = problem
        .axes
        .iter()
        .map(|a| (0..n).map(|i| node(a.lo, a.hi, i)).collect())
        .collect();
    let d = axes.len();
    let total = n.pow(d as u32);
    let mut pts = PointSet::with_capacity(d, total);
    let mut row = vec![0.0; d];
    for mut k in 0..total {
        for a in (0..d).rev() {
            row[a] = axes[a][k % n];
            k /= n;
        }
        pts.push(&row);
    }
    pts
}

/// `||u_r - u|| / ||u_r||` over `points`.
pub fn relative_l2_with<F>(u: F, reference: &ReferenceSolution, points: &PointSet) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let pred: Vec<f64> = points.iter().map(u).collect();
    relative_l2_values(&pred, reference, points)
}

/// As [`relative_l2_with`] for predictions already evaluated at `points`.
pub fn relative_l2_values(pred: &[f64], reference: &ReferenceSolution, points: &PointSet) -> Result<f64> {
    if pred.len() != points.len() {
        return Err(Error::InvalidShape(format!(
            "{} predictions for {} points",
            pred.len(),
            points.len()
        )));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (x, &u) in points.iter().zip(pred) {
        let r = reference.eval(x)?;
        num += (r - u) * (r - u);
        den += r * r;
    }
    if den == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok((num / den).sqrt())
}

/// Relative L2 error of a model trained on `problem`; `points` are in
/// problem coordinates.
pub fn relative_l2(model: &KanModel, problem: &PdeProblem, reference: &ReferenceSolution, points: &PointSet) -> Result<f64> {
    let u = model.forward(&problem.to_inputs(points))?;
    relative_l2_values(&u.column(0), reference, points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn diffusion_ref() -> ReferenceSolution {
        ReferenceSolution::Analytic(AnalyticReference::Diffusion)
    }

    #[test]
    fn relative_error_cases() {
        let p = PdeProblem::diffusion();
        let pts = eval_lattice(&p, 32);
        let r = diffusion_ref();
        let f = |x: &[f64]| AnalyticReference::Diffusion.eval(x);
        assert_eq!(relative_l2_with(f, &r, &pts).unwrap(), 0.0);
        assert_eq!(relative_l2_with(|_| 0.0, &r, &pts).unwrap(), 1.0);
        let e = relative_l2_with(|x| 1.01 * f(x), &r, &pts).unwrap();
        assert!((e - 0.01).abs() < 1e-12, "{e}");
    }

    #[test]
    fn zero_reference_is_an_error() {
        let t = GridTable::new(vec![0.0, 1.0], vec![0.0, 1.0], vec![0.0; 4]).unwrap();
        let pts = PointSet::new(2, vec![0.5, 0.5]);
        let err = relative_l2_with(|_| 1.0, &ReferenceSolution::Table(t), &pts);
        assert!(matches!(err, Err(Error::ZeroReference)));
    }

    #[test]
    fn bilinear_reproduces_bilinear_fields() {
        let a1 = vec![0.0, 0.25, 1.0];
        let a2 = vec![-1.0, 0.0, 0.5, 1.0];
        let f = |x: f64, y: f64| 1.0 + 2.0 * x - 3.0 * y + 0.5 * x * y;
        let vals = a1.iter().flat_map(|&x| a2.iter().map(move |&y| f(x, y))).collect();
        let t = GridTable::new(a1, a2, vals).unwrap();
        for &(x, y) in &[(0.0, -1.0), (1.0, 1.0), (0.1, 0.7), (0.6, -0.2)] {
            assert!((t.eval(&[x, y]).unwrap() - f(x, y)).abs() < 1e-14);
        }
        assert!(t.eval(&[1.1, 0.0]).is_err());
        assert!(t.eval(&[0.5, -1.5]).is_err());
    }

    #[test]
    fn reads_csv_tables() {
        let dir = std::env::temp_dir().join(format!("pikan-ref-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("ref.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "axis1,axis2,u").unwrap();
        for t in [0.0, 1.0] {
            for x in [-1.0, 0.0, 1.0] {
                writeln!(f, "{t},{x},{}", t + x).unwrap();
            }
        }
        drop(f);
        let t = GridTable::from_csv(&path).unwrap();
        assert_eq!(t.axis1, vec![0.0, 1.0]);
        assert_eq!(t.axis2, vec![-1.0, 0.0, 1.0]);
        assert!((t.eval(&[0.5, 0.5]).unwrap() - 1.0).abs() < 1e-15);
        let r = ReferenceSolution::Table(t);
        assert!(r.check_covers(&PdeProblem::burgers()).is_ok());
        assert!(r.check_covers(&PdeProblem::helmholtz()).is_err());

        std::fs::write(&path, "a,b,c\n0,0,0\n").unwrap();
        assert!(matches!(GridTable::from_csv(&path), Err(Error::Data(_))));
        std::fs::write(&path, "axis1,axis2,u\n0,0,1\n0,1,1\n1,1,1\n1,0,1\n").unwrap();
        assert!(GridTable::from_csv(&path).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn lattice_covers_box() {
        let p = PdeProblem::burgers();
        let pts = eval_lattice(&p, 4);
        assert_eq!(pts.len(), 16);
        assert_eq!(pts.row(0), &[0.0, -1.0]);
        assert!((pts.row(1)[1] + 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(pts.row(15), &[1.0, 1.0]);
    }
}
