use rand::seq::index::sample_weighted;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::loss::{pde_residual, RbaWeights};
use super::problem::{CollocationSet, PdeProblem};
use super::sobol::sobol_sample;
use crate::basis::GridMixConfig;
use crate::error::{Error, Result};
use crate::network::{update_grids, GridUpdateReport, KanModel, PointSet};

/// Residual-based adaptive resampling settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadConfig {
    pub a: f64,
    pub c: f64,
    /// Candidate set size as a multiple of `N_f`.
    #[serde(default = "default_dense_factor")]
    pub dense_factor: usize,
}

fn default_dense_factor() -> usize {
    16
}

impl Default for RadConfig {
    fn default() -> Self {
        Self {
            a: 1.0,
            c: 1.0,
            dense_factor: default_dense_factor(),
        }
    }
}

impl RadConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.a >= 0.0 && self.c >= 0.0 && self.a.is_finite() && self.c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "RAD needs finite a >= 0 and c >= 0, got a={}, c={}",
                self.a, self.c
            )));
        }
        if self.dense_factor == 0 {
            return Err(Error::InvalidArgument("RAD dense factor must be positive".into()));
        }
        Ok(())
    }
}

/// `p_i = |r_i|^a / mean(|r|^a) + c`, normalized to sum to one. Falls back
/// to uniform when every term vanishes.
pub fn rad_probabilities(residuals: &[f64], a: f64, c: f64) -> Vec<f64> {
    let n = residuals.len();
    let pow: Vec<f64> = residuals.iter().map(|r| r.abs().powf(a)).collect();
    let mean = pow.iter().sum::<f64>() / n as f64;
    let mut p: Vec<f64> = if mean > 0.0 {
        pow.iter().map(|v| v / mean + c).collect()
    } else {
        vec![1.0; n]
    };
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= s);
    p
}

/// `amount` distinct indices drawn by probability `p`, in ascending order.
/// When fewer than `amount` entries carry mass, the rest are drawn
/// uniformly from the remaining indices.
pub fn draw_without_replacement<R: Rng + ?Sized>(rng: &mut R, p: &[f64], amount: usize) -> Result<Vec<usize>> {
    if amount > p.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot draw {amount} distinct points from {}",
            p.len()
        )));
    }
    let mut idx = sample_weighted(rng, p.len(), |i| p[i], amount)
        .map_err(|e| Error::InvalidArgument(format!("sampling weights: {e}")))?
        .into_vec();
    if idx.len() < amount {
        let mut taken = vec![false; p.len()];
        idx.iter().for_each(|&i| taken[i] = true);
        let rest: Vec<usize> = (0..p.len()).filter(|&i| !taken[i]).collect();
        let extra = rand::seq::index::sample(rng, rest.len(), amount - idx.len());
        idx.extend(extra.iter().map(|k| rest[k]));
    }
    idx.sort_unstable();
    Ok(idx)
}

/// Outcome of one resampling round.
#[derive(Debug, Clone)]
pub struct RadOutcome {
    pub colloc: CollocationSet,
    pub rba: Option<RbaWeights>,
    pub model: KanModel,
    pub grid_report: GridUpdateReport,
}

/// Replaces the interior collocation points by a residual-weighted draw
/// from a dense Sobol candidate set, resets interior attention weights to
/// their mean and adapts the model grids to the new points. Boundary points
/// and their weights are kept. Round `round` uses candidates disjoint from
/// the initial points and from every other round.
#[allow(clippy::too_many_arguments)]
pub fn rad_resample<R: Rng + ?Sized>(
    problem: &PdeProblem,
    model: &KanModel,
    colloc: &CollocationSet,
    rba: Option<&RbaWeights>,
    cfg: &RadConfig,
    grid_cfg: &GridMixConfig,
    round: u64,
    rng: &mut R,
) -> Result<RadOutcome> {
    cfg.validate()?;
    let n_f = colloc.interior.len();
    let dense_n = cfg.dense_factor * n_f;
    let skip = 1 + n_f as u64 + round * dense_n as u64;
    let dense = sobol_sample(&problem.bounds(), dense_n, skip)?;
    let r = pde_residual(problem, model, &dense)?;
    if let Some(i) = r.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index: i, value: r[i] });
    }
    let p = rad_probabilities(&r, cfg.a, cfg.c);
    let idx = draw_without_replacement(rng, &p, n_f)?;
    let interior = dense.select(&idx);
    let new_colloc = problem.collocation_from(interior, colloc.boundary.clone());

    let rba = rba.map(|w| {
        let mut w = w.clone();
        if let Some(a0) = w.alpha.first_mut() {
            let mean = if a0.is_empty() { 1.0 } else { a0.iter().sum::<f64>() / a0.len() as f64 };
            *a0 = vec![mean; n_f];
        }
        w
    });
    let (model, grid_report) = update_grids(model, &new_colloc.interior_input, None, grid_cfg)?;
    Ok(RadOutcome {
        colloc: new_colloc,
        rba,
        model,
        grid_report,
    })
}

/// Fraction of `points` with every coordinate inside the given box.
pub fn fraction_in_box(points: &PointSet, lo: &[f64], hi: &[f64]) -> f64 {
    let inside = points
        .iter()
        .filter(|x| x.iter().zip(lo).zip(hi).all(|((v, l), h)| v >= l && v <= h))
        .count();
    inside as f64 / points.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{init_model, BasisFamily};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn probabilities_are_normalized() {
        let r: Vec<f64> = (0..1000).map(|i| ((i as f64) * 0.37).sin() * 3.0).collect();
        for (a, c) in [(0.0, 0.0), (1.0, 0.0), (3.0, 1.0), (2.0, 1e6)] {
            let p = rad_probabilities(&r, a, c);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let p = rad_probabilities(&r, 0.0, 0.5);
        assert!(p.iter().all(|&v| (v - 1e-3).abs() < 1e-15));
        let p = rad_probabilities(&[0.0; 8], 2.0, 0.0);
        assert!(p.iter().all(|&v| v == 0.125));
    }

    #[test]
    fn draws_are_distinct_and_sorted() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut p = vec![0.0; 100];
        p[3] = 0.5;
        p[70] = 0.5;
        let idx = draw_without_replacement(&mut rng, &p, 10).unwrap();
        assert_eq!(idx.len(), 10);
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
        assert!(idx.contains(&3) && idx.contains(&70));
        assert!(draw_without_replacement(&mut rng, &p, 101).is_err());
    }

    fn quadrant_field(x: &[f64]) -> f64 {
        // residual peaked around (0.75, 0.75)
        let d = (x[0] - 0.75).powi(2) + (x[1] - 0.75).powi(2);
        (-d / 0.02).exp()
    }

    #[test]
    fn peaked_residual_concentrates_samples() {
        let n = 1024;
        let dense = sobol_sample(&[(0.0, 1.0); 2], 16 * n, 1).unwrap();
        let r: Vec<f64> = dense.iter().map(quadrant_field).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = rad_probabilities(&r, 3.0, 1.0);
        let pts = dense.select(&draw_without_replacement(&mut rng, &p, n).unwrap());
        let frac = fraction_in_box(&pts, &[0.5, 0.5], &[1.0, 1.0]);
        assert!(frac >= 0.5, "{frac}");
    }

    #[test]
    fn large_offset_gives_uniform_histogram() {
        let n = 1024;
        let dense = sobol_sample(&[(0.0, 1.0); 2], 16 * n, 1).unwrap();
        let r: Vec<f64> = dense.iter().map(quadrant_field).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = rad_probabilities(&r, 3.0, 1e6);
        let pts = dense.select(&draw_without_replacement(&mut rng, &p, n).unwrap());
        // 4x4 histogram; without replacement the spread is below binomial
        let mut counts = [0usize; 16];
        for x in pts.iter() {
            let i = ((x[0] * 4.0) as usize).min(3);
            let j = ((x[1] * 4.0) as usize).min(3);
            counts[i * 4 + j] += 1;
        }
        let e = n as f64 / 16.0;
        let sigma = (n as f64 * (1.0 / 16.0) * (15.0 / 16.0)).sqrt();
        for c in counts {
            assert!((c as f64 - e).abs() <= 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn resampling_keeps_boundary_and_resets_attention() {
        let mut p = PdeProblem::diffusion();
        p.n_f = 64;
        p.n_b = 8;
        let c = p.collocation(1).unwrap();
        let m = init_model(&[2, 3, 1], BasisFamily::Spline { k: 3 }, 5, 3).unwrap();
        let mut w = RbaWeights::for_collocation(&c, 0.1).unwrap();
        w.alpha[0] = (0..64).map(|i| 0.5 + i as f64 / 128.0).collect();
        w.alpha[1][0] = 0.25;
        let mean = w.alpha[0].iter().sum::<f64>() / 64.0;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = RadConfig { a: 1.0, c: 1.0, dense_factor: 16 };
        let out = rad_resample(&p, &m, &c, Some(&w), &cfg, &GridMixConfig::default(), 0, &mut rng).unwrap();
        assert_eq!(out.colloc.interior.len(), 64);
        assert_eq!(out.colloc.boundary, c.boundary);
        let rba = out.rba.unwrap();
        assert!(rba.alpha[0].iter().all(|&a| (a - mean).abs() < 1e-15));
        assert_eq!(rba.alpha[1], w.alpha[1]);
        assert_eq!(out.model.grid_sizes(), m.grid_sizes());

        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let again = rad_resample(&p, &m, &c, Some(&w), &cfg, &GridMixConfig::default(), 0, &mut rng).unwrap();
        assert_eq!(again.colloc, out.colloc);
        assert!(RadConfig { a: -1.0, ..cfg }.validate().is_err());
    }
}
