//! Input-function samplers and reference solvers.

mod burgers;
mod curves;
mod grf;
mod ode;
mod reaction;

pub use burgers::{burgers_etdrk4, fourier_eval, fourier_resample, solve_burgers_spectral};
pub use curves::{
    airfoil_from_str, circle_sensors, load_airfoil, normalize_points, parse_airfoil, resample_closed, sdf_circle,
    sdf_polygon, BoundaryCurve,
};
pub use grf::{grf_sample, linspace, periodic_grf_sample, periodic_grid, Grf, GrfSpec, PeriodicField, PeriodicGrfSpec};
pub use ode::{interp_linear, rk45, solve_antiderivative_rk45, Rk45Options};
pub use reaction::{solve_diffusion_reaction, solve_diffusion_reaction_with};
