//! Unscrambled Sobol points in up to four dimensions.
//!
//! Direction numbers are the Joe-Kuo `new-joe-kuo-6.21201` entries for the
//! first four dimensions; point `n` is the XOR of the direction numbers
//! selected by the Gray code of `n`, so the first point is the origin.

use crate::error::{Error, Result};
use crate::network::PointSet;

const BITS: usize = 32;

/// Largest supported dimension.
pub const SOBOL_MAX_DIM: usize = 4;

// (s, a, m_1..m_s) for dimensions 2..=4; dimension 1 uses m_k = 1.
const JOE_KUO: [(usize, u32, &[u32]); 3] = [(1, 0, &[1]), (2, 1, &[1, 3]), (3, 1, &[1, 3, 1])];

fn direction_numbers(dim: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim == 0 {
        for (k, vk) in v.iter_mut().enumerate() {
            *vk = 1 << (BITS - 1 - k);
        }
        return v;
    }
    let (s, a, m) = JOE_KUO[dim - 1];
    for k in 0..s.min(BITS) {
        v[k] = m[k] << (BITS - 1 - k);
    }
    for k in s..BITS {
        let mut x = v[k - s] ^ (v[k - s] >> s);
        for j in 1..s {
            if (a >> (s - 1 - j)) & 1 == 1 {
                x ^= v[k - j];
            }
        }
        v[k] = x;
    }
    v
}

/// Random-access generator of the first `dim` Sobol coordinates.
#[derive(Debug, Clone)]
pub struct Sobol {
    dirs: Vec<[u32; BITS]>,
}

impl Sobol {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 || dim > SOBOL_MAX_DIM {
            return Err(Error::InvalidArgument(format!(
                "Sobol dimension must be in 1..={SOBOL_MAX_DIM}, got {dim}"
            )));
        }
        Ok(Self {
            dirs: (0..dim).map(direction_numbers).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dirs.len()
    }

    /// Point `n` of the sequence in `[0, 1)^dim`.
    pub fn point(&self, n: u64, out: &mut [f64]) {
        let gray = n ^ (n >> 1);
        for (o, v) in out.iter_mut().zip(&self.dirs) {
            let mut x = 0u32;
            let mut g = gray;
            let mut k = 0;
            while g != 0 && k < BITS {
                if g & 1 == 1 {
                    x ^= v[k];
                }
                g >>= 1;
                k += 1;
            }
            *o = x as f64 / (1u64 << BITS) as f64;
        }
    }
}

/// `n` Sobol points after skipping the first `skip`, mapped affinely into
/// the box `[lo_i, hi_i]`. Any `n` is accepted; balance properties only
/// hold for powers of two, so other sizes are reported as a warning.
pub fn sobol_sample(bounds: &[(f64, f64)], n: usize, skip: u64) -> Result<PointSet> {
    let gen = Sobol::new(bounds.len())?;
    if !n.is_power_of_two() {
        log::warn!("Sobol sample size {n} is not a power of two");
    }
    let mut out = PointSet::with_capacity(bounds.len(), n);
    let mut row = vec![0.0; bounds.len()];
    for i in 0..n as u64 {
        gen.point(skip + i, &mut row);
        for (x, &(lo, hi)) in row.iter_mut().zip(bounds) {
            *x = lo + (hi - lo) * *x;
        }
        out.push(&row);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn prefix_matches_reference() {
        // scipy.stats.qmc.Sobol(d=4, scramble=False).random(8)
        let expected = [
            [0.0, 0.0, 0.0, 0.0],
            [0.5, 0.5, 0.5, 0.5],
            [0.75, 0.25, 0.25, 0.25],
            [0.25, 0.75, 0.75, 0.75],
            [0.375, 0.375, 0.625, 0.875],
            [0.875, 0.875, 0.125, 0.375],
            [0.625, 0.125, 0.875, 0.625],
            [0.125, 0.625, 0.375, 0.125],
        ];
        let unit = [(0.0, 1.0); 4];
        let pts = sobol_sample(&unit, 8, 0).unwrap();
        for (row, e) in pts.iter().zip(&expected) {
            assert_eq!(row, e);
        }
        let d1 = sobol_sample(&unit[..1], 4, 0).unwrap();
        assert_eq!(d1.as_slice(), &[0.0, 0.5, 0.75, 0.25]);
    }

    #[test]
    fn later_points_match_reference() {
        let pts = sobol_sample(&[(0.0, 1.0); 2], 1024, 0).unwrap();
        assert_eq!(pts.row(1000), &[0.2197265625, 0.0966796875]);
        assert_eq!(pts.row(1023), &[0.0009765625, 0.7529296875]);
    }

    #[test]
    fn skip_and_box() {
        let a = sobol_sample(&[(0.0, 1.0), (-1.0, 1.0)], 16, 1).unwrap();
        let b = sobol_sample(&[(0.0, 1.0), (-1.0, 1.0)], 17, 0).unwrap();
        assert_eq!(a.as_slice(), &b.as_slice()[2..]);
        assert_eq!(a, sobol_sample(&[(0.0, 1.0), (-1.0, 1.0)], 16, 1).unwrap());
        assert!(a.iter().all(|r| (0.0..1.0).contains(&r[0]) && (-1.0..1.0).contains(&r[1])));
    }

    fn max_gap(mut xs: Vec<f64>) -> f64 {
        xs.sort_by(f64::total_cmp);
        let mut gap = xs[0].max(1.0 - xs[xs.len() - 1]);
        for w in xs.windows(2) {
            gap = gap.max(w[1] - w[0]);
        }
        gap
    }

    #[test]
    fn more_even_than_random() {
        let n = 1 << 12;
        let s = sobol_sample(&[(0.0, 1.0); 2], n, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r: Vec<f64> = (0..2 * n).map(|_| rng.random::<f64>()).collect();
        let r = PointSet::new(2, r);
        for axis in 0..2 {
            assert!(max_gap(s.column(axis)) < max_gap(r.column(axis)));
        }
    }

    #[test]
    fn rejects_high_dimension() {
        assert!(Sobol::new(5).is_err());
        assert!(Sobol::new(0).is_err());
    }
}
