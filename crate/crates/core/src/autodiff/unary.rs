/// Elementwise primitives recognised by every backend.
///
/// The ELU and ReLU families carry their own derivative functions as
/// primitives so that forward-mode propagation stays on the tape.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Unary {
    Tanh,
    Exp,
    Sin,
    Cos,
    Sqrt,
    Recip,
    Powi(i32),
    Elu,
    /// First derivative of ELU.
    EluD1,
    /// Second derivative of ELU (also its own derivative).
    EluD2,
    Relu,
    /// Heaviside step, the derivative of ReLU; its own derivative is zero a.e.
    Step,
}

impl Unary {
    #[inline]
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Unary::Tanh => x.tanh(),
            Unary::Exp => x.exp(),
            Unary::Sin => x.sin(),
            Unary::Cos => x.cos(),
            Unary::Sqrt => x.sqrt(),
            Unary::Recip => 1.0 / x,
            Unary::Powi(n) => x.powi(n),
            Unary::Elu => {
                if x > 0.0 {
                    x
                } else {
                    x.exp_m1()
                }
            }
            Unary::EluD1 => {
                if x > 0.0 {
                    1.0
                } else {
                    x.exp()
                }
            }
            Unary::EluD2 => {
                if x > 0.0 {
                    0.0
                } else {
                    x.exp()
                }
            }
            Unary::Relu => x.max(0.0),
            Unary::Step => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Local derivative given the input `x` and the already computed output `y`.
    #[inline]
    pub fn deriv(self, x: f64, y: f64) -> f64 {
        match self {
            Unary::Tanh => 1.0 - y * y,
            Unary::Exp => y,
            Unary::Sin => x.cos(),
            Unary::Cos => -x.sin(),
            Unary::Sqrt => 0.5 / y,
            Unary::Recip => -y * y,
            Unary::Powi(0) => 0.0,
            Unary::Powi(n) => f64::from(n) * x.powi(n - 1),
            Unary::Elu => Unary::EluD1.eval(x),
            Unary::EluD1 | Unary::EluD2 => Unary::EluD2.eval(x),
            Unary::Relu => Unary::Step.eval(x),
            Unary::Step => 0.0,
        }
    }
}
