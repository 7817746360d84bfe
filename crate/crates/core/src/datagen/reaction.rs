use crate::deeponet::FieldSample;
use crate::error::{Error, Result};
use crate::tensor::Mat;

use super::grf::linspace;
use super::ode::interp_linear;

const DIVERGENCE: f64 = 1e6;

/// Solves `a_i x_{i-1} + b_i x_i + c_i x_{i+1} = d_i` in place (`d` becomes `x`).
fn thomas(a: f64, b: f64, c: f64, d: &mut [f64]) {
    let n = d.len();
    if n == 0 {
        return;
    }
    let mut cp = vec![0.0; n];
    cp[0] = c / b;
    d[0] /= b;
    for i in 1..n {
        let m = b - a * cp[i - 1];
        cp[i] = c / m;
        d[i] = (d[i] - a * d[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        d[i] -= cp[i] * d[i + 1];
    }
}

/// `s_t = D s_xx + k s² + f(x, t)` on `[0, 1]²` with zero initial and
/// boundary values, on an `nx x nt` grid including both ends.
///
/// Crank–Nicolson for diffusion; the reaction and source are taken at the
/// half step from a predictor, then re-evaluated once (corrector).
/// Returns `nx x nt`, row `i` at `x_i`, column `n` at `t_n`.
pub fn solve_diffusion_reaction_with<F>(source: F, d: f64, k: f64, nx: usize, nt: usize) -> Result<Mat>
where
    F: Fn(f64, f64) -> f64,
{
    if nx < 3 || nt < 3 {
        return Err(Error::invalid("diffusion-reaction grid needs nx, nt >= 3"));
    }
    let xs = linspace(0.0, 1.0, nx);
    let dx = 1.0 / (nx - 1) as f64;
    let dt = 1.0 / (nt - 1) as f64;
    let r = d * dt / (dx * dx);
    let inner = nx - 2;
    let mut out = Mat::zeros(nx, nt);
    let mut s = vec![0.0; nx];
    let mut rhs = vec![0.0; inner];

    let explicit_part = |s: &[f64], rhs: &mut [f64]| {
        for i in 1..=inner {
            rhs[i - 1] = (1.0 - r) * s[i] + 0.5 * r * (s[i - 1] + s[i + 1]);
        }
    };
    for n in 0..nt - 1 {
        let th = (n as f64 + 0.5) * dt;
        // Predictor: reaction frozen at t_n.
        explicit_part(&s, &mut rhs);
        for i in 1..=inner {
            rhs[i - 1] += dt * (k * s[i] * s[i] + source(xs[i], th));
        }
        thomas(-0.5 * r, 1.0 + r, -0.5 * r, &mut rhs);
        let mut half = s.clone();
        for i in 1..=inner {
            half[i] = 0.5 * (s[i] + rhs[i - 1]);
        }
        // Corrector: reaction at the predicted half step.
        explicit_part(&s, &mut rhs);
        for i in 1..=inner {
            rhs[i - 1] += dt * (k * half[i] * half[i] + source(xs[i], th));
        }
        thomas(-0.5 * r, 1.0 + r, -0.5 * r, &mut rhs);
        s[1..=inner].copy_from_slice(&rhs);
        let norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm <= DIVERGENCE) {
            return Err(Error::Solver(format!("diffusion-reaction solution diverged at step {}", n + 1)));
        }
        for (i, &v) in s.iter().enumerate() {
            out.set(i, n + 1, v);
        }
    }
    Ok(out)
}

/// Time-independent source given at sensors, interpolated linearly.
pub fn solve_diffusion_reaction(u: &FieldSample, d: f64, k: f64, nx: usize, nt: usize) -> Result<Mat> {
    if u.sensors.cols() != 1 {
        return Err(Error::shape("diffusion-reaction source must be a scalar field"));
    }
    let grid = u.grid();
    solve_diffusion_reaction_with(|x, _| interp_linear(grid, &u.values, x), d, k, nx, nt)
}
