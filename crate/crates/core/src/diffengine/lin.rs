use std::ops::{Add, Mul, Neg, Sub};

use super::MAX_DIRS;

/// Number of jet components a [`Lin`] tracks: the value, then first and
/// second derivatives along up to [`MAX_DIRS`] axes.
pub const MAX_COMPONENTS: usize = 1 + 2 * MAX_DIRS;

/// A real number together with its gradient with respect to the jet
/// components of one network output at one point.
///
/// Residual operators are written in this type; the gradient then seeds
/// the reverse pass through the network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lin {
    pub value: f64,
    pub grad: [f64; MAX_COMPONENTS],
}

impl Lin {
    pub fn constant(value: f64) -> Self {
        Self {
            value,
            grad: [0.0; MAX_COMPONENTS],
        }
    }

    /// Jet component `slot` with value `value`.
    pub fn component(value: f64, slot: usize) -> Self {
        let mut l = Self::constant(value);
        l.grad[slot] = 1.0;
        l
    }

    #[inline]
    fn map(self, f: f64, df: f64) -> Self {
        let mut grad = self.grad;
        grad.iter_mut().for_each(|g| *g *= df);
        Self { value: f, grad }
    }

    pub fn powi(self, n: i32) -> Self {
        let v = self.value;
        self.map(v.powi(n), n as f64 * v.powi(n - 1))
    }

    pub fn abs(self) -> Self {
        let s = if self.value < 0.0 { -1.0 } else { 1.0 };
        self.map(self.value.abs(), s)
    }
}

impl Add for Lin {
    type Output = Self;
    #[inline]
    fn add(mut self, o: Self) -> Self {
        self.value += o.value;
        for (a, b) in self.grad.iter_mut().zip(o.grad) {
            *a += b;
        }
        self
    }
}

impl Sub for Lin {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Neg for Lin {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self.map(-self.value, -1.0)
    }
}

impl Mul for Lin {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        let mut grad = [0.0; MAX_COMPONENTS];
        for (g, (a, b)) in grad.iter_mut().zip(self.grad.iter().zip(o.grad)) {
            *g = a * o.value + self.value * b;
        }
        Self {
            value: self.value * o.value,
            grad,
        }
    }
}

impl Add<f64> for Lin {
    type Output = Self;
    fn add(mut self, c: f64) -> Self {
        self.value += c;
        self
    }
}

impl Sub<f64> for Lin {
    type Output = Self;
    fn sub(mut self, c: f64) -> Self {
        self.value -= c;
        self
    }
}

impl Mul<f64> for Lin {
    type Output = Self;
    fn mul(self, c: f64) -> Self {
        self.map(self.value * c, c)
    }
}

impl Mul<Lin> for f64 {
    type Output = Lin;
    fn mul(self, l: Lin) -> Lin {
        l * self
    }
}
