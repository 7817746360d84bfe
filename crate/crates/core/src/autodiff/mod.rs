//! Automatic differentiation: a reverse-mode tape over matrix nodes,
//! second-order forward-mode duals, and their forward-over-reverse nesting.

mod backend;
mod dual;
mod grad;
mod tape;
mod unary;

pub use backend::{lane_or_zero, Backend, DualVar, Eager, Jet};
pub use dual::{directional_derivs, Dual2};
pub use grad::{
    collect_gradients, grad_of_residual, register_params, reverse_grad, GradientVector,
    ParamSet, Parameterized,
};
pub use tape::{Adjoints, Tape, Var};
pub use unary::Unary;
