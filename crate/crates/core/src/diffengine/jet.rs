use std::ops::{Add, Div, Mul, Neg, Sub};

/// Second-order truncated Taylor number along one direction: a value with
/// its first and second directional derivatives.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet2 {
    pub const fn new(value: f64, d1: f64, d2: f64) -> Self {
        Self { value, d1, d2 }
    }

    pub const fn constant(value: f64) -> Self {
        Self::new(value, 0.0, 0.0)
    }

    /// The independent variable itself at `value`.
    pub const fn variable(value: f64) -> Self {
        Self::new(value, 1.0, 0.0)
    }

    /// `f(self)` given `f`, `f'` and `f''` at `self.value`.
    #[inline]
    pub fn chain(self, f: [f64; 3]) -> Self {
        Self {
            value: f[0],
            d1: f[1] * self.d1,
            d2: f[2] * self.d1 * self.d1 + f[1] * self.d2,
        }
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain([s, c, -s])
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain([c, -s, -c])
    }

    pub fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain([e, e, e])
    }

    pub fn powi(self, n: i32) -> Self {
        let v = self.value;
        let nf = n as f64;
        self.chain([
            v.powi(n),
            nf * v.powi(n - 1),
            nf * (nf - 1.0) * v.powi(n - 2),
        ])
    }

    pub fn silu(self) -> Self {
        let s = crate::network::silu_derivs(self.value);
        self.chain([s[0], s[1], s[2]])
    }
}

impl Add for Jet2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.value + o.value, self.d1 + o.d1, self.d2 + o.d2)
    }
}

impl Sub for Jet2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.value - o.value, self.d1 - o.d1, self.d2 - o.d2)
    }
}

impl Neg for Jet2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.value, -self.d1, -self.d2)
    }
}

impl Mul for Jet2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.value * o.value,
            self.d1 * o.value + self.value * o.d1,
            self.d2 * o.value + 2.0 * self.d1 * o.d1 + self.value * o.d2,
        )
    }
}

impl Div for Jet2 {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.value;
        let r = o.chain([inv, -inv * inv, 2.0 * inv * inv * inv]);
        self * r
    }
}

impl Add<f64> for Jet2 {
    type Output = Self;
    fn add(self, c: f64) -> Self {
        Self::new(self.value + c, self.d1, self.d2)
    }
}

impl Sub<f64> for Jet2 {
    type Output = Self;
    fn sub(self, c: f64) -> Self {
        Self::new(self.value - c, self.d1, self.d2)
    }
}

impl Mul<f64> for Jet2 {
    type Output = Self;
    fn mul(self, c: f64) -> Self {
        Self::new(self.value * c, self.d1 * c, self.d2 * c)
    }
}

impl Mul<Jet2> for f64 {
    type Output = Jet2;
    fn mul(self, j: Jet2) -> Jet2 {
        j * self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // p(x) = sum c_i x^i with exact derivatives
    fn poly(c: &[f64], x: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (i, &ci) in c.iter().enumerate() {
            let i = i as i32;
            out[0] += ci * x.powi(i);
            if i >= 1 {
                out[1] += ci * i as f64 * x.powi(i - 1);
            }
            if i >= 2 {
                out[2] += ci * (i * (i - 1)) as f64 * x.powi(i - 2);
            }
        }
        out
    }

    fn poly_jet(c: &[f64], x: Jet2) -> Jet2 {
        // Horner in jet arithmetic
        c.iter().rev().fold(Jet2::constant(0.0), |acc, &ci| acc * x + ci)
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-10 * (1.0 + a.abs().max(b.abs()))
    }

    proptest! {
        #[test]
        fn product_obeys_leibniz(
            p in proptest::collection::vec(-2.0f64..2.0, 1..6),
            q in proptest::collection::vec(-2.0f64..2.0, 1..6),
            x in -1.5f64..1.5,
        ) {
            let f = poly(&p, x);
            let g = poly(&q, x);
            let prod = poly_jet(&p, Jet2::variable(x)) * poly_jet(&q, Jet2::variable(x));
            prop_assert!(close(prod.value, f[0] * g[0]));
            prop_assert!(close(prod.d1, f[1] * g[0] + f[0] * g[1]));
            prop_assert!(close(prod.d2, f[2] * g[0] + 2.0 * f[1] * g[1] + f[0] * g[2]));
        }

        #[test]
        fn horner_matches_symbolic(
            p in proptest::collection::vec(-2.0f64..2.0, 1..8),
            x in -1.5f64..1.5,
        ) {
            let j = poly_jet(&p, Jet2::variable(x));
            let f = poly(&p, x);
            prop_assert!(close(j.value, f[0]) && close(j.d1, f[1]) && close(j.d2, f[2]));
        }
    }

    #[test]
    fn chain_rule_through_sin_of_square() {
        let x = 0.7f64;
        let j = (Jet2::variable(x) * Jet2::variable(x)).sin();
        let u = x * x;
        assert!(close(j.d1, 2.0 * x * u.cos()));
        assert!(close(j.d2, 2.0 * u.cos() - 4.0 * x * x * u.sin()));
    }

    #[test]
    fn quotient() {
        let x = 1.3f64;
        let j = Jet2::constant(1.0) / Jet2::variable(x);
        assert!(close(j.d1, -1.0 / (x * x)));
        assert!(close(j.d2, 2.0 / (x * x * x)));
    }

    #[test]
    fn silu_at_origin() {
        let j = Jet2::variable(0.0).silu();
        assert_eq!(j.value, 0.0);
        assert_eq!(j.d1, 0.5);
        // 2 s'(0) + 0 * s''(0) = 2 * 0.25
        assert_eq!(j.d2, 0.5);
    }
}
