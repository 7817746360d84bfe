//! Physics-informed DeepONets.
//!
//! Operator networks whose training loss penalises PDE residuals computed
//! by nested automatic differentiation, together with the input-function
//! samplers and reference solvers used to build test sets.

pub mod autodiff;
pub mod datagen;
pub mod deeponet;
pub mod error;
pub mod harness;
pub mod nn;
pub mod pde;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::Mat;
