//! Benchmark problems: residual operators and composite losses.

mod loss;
mod pools;
mod problem;

pub use loss::{
    loss_antiderivative, loss_burgers, loss_diffusion_reaction, inside_curve, loss_eikonal, Batch, LossReport, EIKONAL_EPS,
};
pub use pools::{
    build_pools, residual_antiderivative, residual_burgers, residual_diffusion_reaction, residual_eikonal,
    sample_rng, Pools,
};
pub use problem::{CollocationSpec, Constants, PdeProblem, ProblemKind};
