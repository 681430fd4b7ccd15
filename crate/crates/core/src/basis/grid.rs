use serde::{Deserialize, Serialize};

use super::spline::SpanTable;
use crate::error::{Error, Result};

/// Largest spline degree the local evaluator supports.
pub const MAX_DEGREE: usize = 8;

/// Knot set for one activation input, plus the augmentation needed to build
/// a full family of `G + k` degree-`k` B-splines on it.
///
/// `knots` holds the `G + 1` points the grid was adapted to. The augmented
/// vector extends them by `k` points on each side with the mean interior
/// spacing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct Grid {
    knots: Vec<f64>,
    degree: usize,
    augmented: Vec<f64>,
    // augmented knots padded by another `degree` points per side so that the
    // triangular de Boor scheme never indexes outside the vector near the ends
    padded: Vec<f64>,
    table: SpanTable,
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    knots: Vec<f64>,
    degree: usize,
}

impl TryFrom<GridRepr> for Grid {
    type Error = Error;

    fn try_from(r: GridRepr) -> Result<Self> {
        Grid::new(r.knots, r.degree)
    }
}

impl From<Grid> for GridRepr {
    fn from(g: Grid) -> Self {
        GridRepr {
            knots: g.knots,
            degree: g.degree,
        }
    }
}

fn extend_uniform(knots: &[f64], count: usize, spacing: f64) -> Vec<f64> {
    let first = knots[0];
    let last = knots[knots.len() - 1];
    let mut out = Vec::with_capacity(knots.len() + 2 * count);
    out.extend((1..=count).rev().map(|j| first - j as f64 * spacing));
    out.extend_from_slice(knots);
    out.extend((1..=count).map(|j| last + j as f64 * spacing));
    out
}

impl Grid {
    pub fn new(knots: Vec<f64>, degree: usize) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 2 knots, got {}",
                knots.len()
            )));
        }
        if degree > MAX_DEGREE {
            return Err(Error::InvalidArgument(format!(
                "spline degree {degree} exceeds supported maximum {MAX_DEGREE}"
            )));
        }
        if let Some((index, &value)) = knots.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        if let Some(w) = knots.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(format!(
                "knots must be strictly increasing (knot {} = {} >= knot {} = {})",
                w,
                knots[w],
                w + 1,
                knots[w + 1]
            )));
        }
        let g = knots.len() - 1;
        let spacing = (knots[g] - knots[0]) / g as f64;
        let augmented = extend_uniform(&knots, degree, spacing);
        let padded = extend_uniform(&augmented, degree, spacing);
        let mut grid = Self {
            knots,
            degree,
            augmented,
            padded,
            table: SpanTable::default(),
        };
        grid.table = SpanTable::build(&grid);
        Ok(grid)
    }

    /// Equidistant grid with `intervals` cells on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, intervals: usize, degree: usize) -> Result<Self> {
        if intervals == 0 {
            return Err(Error::InvalidArgument("grid needs G >= 1".into()));
        }
        if !(hi > lo) {
            return Err(Error::InvalidArgument(format!(
                "uniform grid needs lo < hi, got [{lo}, {hi}]"
            )));
        }
        Self::new(linspace(lo, hi, intervals + 1), degree)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn augmented_knots(&self) -> &[f64] {
        &self.augmented
    }

    pub(crate) fn padded_knots(&self) -> &[f64] {
        &self.padded
    }

    pub(crate) fn span_table(&self) -> &SpanTable {
        &self.table
    }

    pub fn intervals(&self) -> usize {
        self.knots.len() - 1
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn num_spline_basis(&self) -> usize {
        self.intervals() + self.degree
    }

    pub fn lo(&self) -> f64 {
        self.knots[0]
    }

    pub fn hi(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    /// Same knots, different augmentation degree.
    pub fn with_degree(&self, degree: usize) -> Result<Self> {
        Self::new(self.knots.clone(), degree)
    }
}

pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + i as f64 * step })
        .collect()
}

/// Mixing between the equidistant and the input-quantile grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridMixConfig {
    /// Weight of the uniform grid, in `[0, 1]`.
    pub g_e: f64,
    /// Padding beyond the observed input range, as a fraction of that range.
    #[serde(default = "default_margin")]
    pub margin: f64,
}

fn default_margin() -> f64 {
    0.01
}

impl Default for GridMixConfig {
    fn default() -> Self {
        Self {
            g_e: 0.05,
            margin: default_margin(),
        }
    }
}

impl GridMixConfig {
    pub fn new(g_e: f64) -> Self {
        Self {
            g_e,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.g_e) {
            return Err(Error::InvalidArgument(format!(
                "g_e must lie in [0, 1], got {}",
                self.g_e
            )));
        }
        if !(self.margin >= 0.0) || !self.margin.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "grid margin must be finite and non-negative, got {}",
                self.margin
            )));
        }
        Ok(())
    }
}

/// Empirical quantile of sorted data at `level` in `[0, 1]`, with linear
/// interpolation between order statistics.
pub(crate) fn quantile_sorted(sorted: &[f64], level: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = level * (n - 1) as f64;
    let lo = (pos.floor() as usize).min(n - 1);
    let hi = (lo + 1).min(n - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Grid end points and the uniform and quantile knot vectors that
/// [`build_adapted_grid`] mixes.
#[derive(Debug, Clone)]
pub struct GridCandidates {
    pub uniform: Vec<f64>,
    pub adaptive: Vec<f64>,
}

pub fn grid_candidates(inputs: &[f64], intervals: usize, cfg: &GridMixConfig) -> Result<GridCandidates> {
    cfg.validate()?;
    if inputs.is_empty() {
        return Err(Error::InvalidArgument("grid adaptation needs inputs".into()));
    }
    if intervals == 0 {
        return Err(Error::InvalidArgument("grid needs G >= 1".into()));
    }
    if let Some((index, &value)) = inputs.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { index, value });
    }
    let mut sorted = inputs.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let min = sorted[0];
    let max = sorted[sorted.len() - 1];
    if max <= min {
        return Err(Error::DegenerateRange {
            count: inputs.len(),
            value: min,
        });
    }
    let pad = cfg.margin * (max - min);
    let (lo, hi) = (min - pad, max + pad);

    let uniform = linspace(lo, hi, intervals + 1);
    let mut adaptive = Vec::with_capacity(intervals + 1);
    adaptive.push(lo);
    for j in 1..intervals {
        adaptive.push(quantile_sorted(&sorted, j as f64 / intervals as f64));
    }
    adaptive.push(hi);
    Ok(GridCandidates { uniform, adaptive })
}

/// Input-adapted grid `g_e * uniform + (1 - g_e) * quantile` with `intervals`
/// cells, augmented for splines of the given degree.
pub fn build_adapted_grid(
    inputs: &[f64],
    intervals: usize,
    degree: usize,
    cfg: &GridMixConfig,
) -> Result<Grid> {
    let GridCandidates { uniform, adaptive } = grid_candidates(inputs, intervals, cfg)?;
    let last = intervals;
    let knots = uniform
        .iter()
        .zip(&adaptive)
        .enumerate()
        .map(|(i, (u, a))| {
            // ends are shared; keep them bit-identical to the uniform grid
            if i == 0 || i == last {
                *u
            } else {
                cfg.g_e * u + (1.0 - cfg.g_e) * a
            }
        })
        .collect();
    Grid::new(knots, degree)
}
