//! Scalar second-order dual numbers.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// `value + d1·ε + d2·ε²/2` truncated after the second-order term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual2 {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Dual2 {
    pub const fn new(value: f64, d1: f64, d2: f64) -> Self {
        Self { value, d1, d2 }
    }

    pub const fn constant(value: f64) -> Self {
        Self::new(value, 0.0, 0.0)
    }

    /// The independent variable: unit first derivative.
    pub const fn variable(value: f64) -> Self {
        Self::new(value, 1.0, 0.0)
    }

    /// Applies a scalar function given `f(g)`, `f'(g)`, `f''(g)`.
    #[inline]
    pub fn chain(self, f: f64, f1: f64, f2: f64) -> Self {
        Self {
            value: f,
            d1: f1 * self.d1,
            d2: f2 * self.d1 * self.d1 + f1 * self.d2,
        }
    }

    pub fn tanh(self) -> Self {
        let t = self.value.tanh();
        let f1 = 1.0 - t * t;
        self.chain(t, f1, -2.0 * t * f1)
    }

    pub fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn sqrt(self) -> Self {
        let r = self.value.sqrt();
        self.chain(r, 0.5 / r, -0.25 / (r * self.value))
    }

    pub fn recip(self) -> Self {
        let r = 1.0 / self.value;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }

    pub fn powi(self, n: i32) -> Self {
        let x = self.value;
        let nf = f64::from(n);
        let f1 = if n == 0 { 0.0 } else { nf * x.powi(n - 1) };
        let f2 = if n <= 1 && n >= 0 {
            0.0
        } else {
            nf * (nf - 1.0) * x.powi(n - 2)
        };
        self.chain(x.powi(n), f1, f2)
    }

    pub fn elu(self) -> Self {
        let x = self.value;
        if x > 0.0 {
            self.chain(x, 1.0, 0.0)
        } else {
            let e = x.exp();
            self.chain(x.exp_m1(), e, e)
        }
    }

    /// Second derivative defined as zero everywhere (including the kink).
    pub fn relu(self) -> Self {
        if self.value > 0.0 {
            self.chain(self.value, 1.0, 0.0)
        } else {
            self.chain(0.0, 0.0, 0.0)
        }
    }

    pub fn is_finite(self) -> bool {
        self.value.is_finite() && self.d1.is_finite() && self.d2.is_finite()
    }
}

impl From<f64> for Dual2 {
    fn from(v: f64) -> Self {
        Dual2::constant(v)
    }
}

impl Add for Dual2 {
    type Output = Dual2;
    fn add(self, o: Dual2) -> Dual2 {
        Dual2::new(self.value + o.value, self.d1 + o.d1, self.d2 + o.d2)
    }
}

impl Sub for Dual2 {
    type Output = Dual2;
    fn sub(self, o: Dual2) -> Dual2 {
        Dual2::new(self.value - o.value, self.d1 - o.d1, self.d2 - o.d2)
    }
}

impl Mul for Dual2 {
    type Output = Dual2;
    fn mul(self, o: Dual2) -> Dual2 {
        Dual2::new(
            self.value * o.value,
            self.d1 * o.value + self.value * o.d1,
            self.d2 * o.value + 2.0 * self.d1 * o.d1 + self.value * o.d2,
        )
    }
}

impl Div for Dual2 {
    type Output = Dual2;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Dual2) -> Dual2 {
        self * o.recip()
    }
}

impl Neg for Dual2 {
    type Output = Dual2;
    fn neg(self) -> Dual2 {
        Dual2::new(-self.value, -self.d1, -self.d2)
    }
}

impl Add<f64> for Dual2 {
    type Output = Dual2;
    fn add(self, c: f64) -> Dual2 {
        Dual2::new(self.value + c, self.d1, self.d2)
    }
}

impl Sub<f64> for Dual2 {
    type Output = Dual2;
    fn sub(self, c: f64) -> Dual2 {
        Dual2::new(self.value - c, self.d1, self.d2)
    }
}

impl Mul<f64> for Dual2 {
    type Output = Dual2;
    fn mul(self, c: f64) -> Dual2 {
        Dual2::new(self.value * c, self.d1 * c, self.d2 * c)
    }
}

impl Mul<Dual2> for f64 {
    type Output = Dual2;
    fn mul(self, d: Dual2) -> Dual2 {
        d * self
    }
}

/// `(f(x), ∂f/∂x_k, ∂²f/∂x_k²)` for coordinate `axis`.
pub fn directional_derivs<F>(f: F, x: &[f64], axis: usize) -> Result<(f64, f64, f64)>
where
    F: FnOnce(&[Dual2]) -> Dual2,
{
    if axis >= x.len() {
        return Err(Error::invalid(format!(
            "axis {axis} out of range for {}-dimensional input",
            x.len()
        )));
    }
    let seeded: Vec<Dual2> = x
        .iter()
        .enumerate()
        .map(|(i, &xi)| {
            if i == axis {
                Dual2::variable(xi)
            } else {
                Dual2::constant(xi)
            }
        })
        .collect();
    let out = f(&seeded);
    if !out.is_finite() {
        return Err(Error::NonFinite("directional derivative propagation".into()));
    }
    Ok((out.value, out.d1, out.d2))
}
