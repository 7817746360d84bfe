use crate::deeponet::FieldSample;
use crate::error::{Error, Result};

/// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Tolerances for [`rk45`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rk45Options {
    pub atol: f64,
    pub rtol: f64,
    pub min_step: f64,
}

impl Default for Rk45Options {
    fn default() -> Self {
        Self {
            atol: 1e-9,
            rtol: 1e-9,
            min_step: 1e-14,
        }
    }
}

/// Integrates the scalar ODE `y' = f(x, y)` from `(xs[0], y0)` and returns
/// `y` at every point of the increasing sequence `xs`. Steps are clipped so
/// each output point is hit exactly.
pub fn rk45<F>(mut f: F, xs: &[f64], y0: f64, opts: Rk45Options) -> Result<Vec<f64>>
where
    F: FnMut(f64, f64) -> f64,
{
    if xs.is_empty() {
        return Ok(vec![]);
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("RK45 output points must be strictly increasing"));
    }
    let mut out = Vec::with_capacity(xs.len());
    out.push(y0);
    let (mut x, mut y) = (xs[0], y0);
    let span = xs[xs.len() - 1] - xs[0];
    let mut h = (span / 100.0).max(opts.min_step);
    let mut k = [0.0; 7];
    k[0] = f(x, y);
    for &target in &xs[1..] {
        while x < target {
            let last = h >= target - x;
            let step = if last { target - x } else { h };
            for s in 1..7 {
                let mut acc = y;
                for j in 0..s {
                    acc += step * A[s][j] * k[j];
                }
                k[s] = f(x + C[s] * step, acc);
            }
            let y5 = y + step * (0..7).map(|i| B5[i] * k[i]).sum::<f64>();
            let y4 = y + step * (0..7).map(|i| B4[i] * k[i]).sum::<f64>();
            let err = (y5 - y4).abs() / (opts.atol + opts.rtol * y.abs().max(y5.abs()));
            if !y5.is_finite() {
                return Err(Error::Solver("RK45 produced a non-finite state".into()));
            }
            if err <= 1.0 {
                x = if last { target } else { x + step };
                y = y5;
                // First-same-as-last: the 7th stage is f at the new point.
                k[0] = k[6];
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 && last {
                h = h.max(step * factor);
            } else {
                h = step * factor;
            }
            if h < opts.min_step {
                return Err(Error::Solver(format!("RK45 step size underflow at x = {x}")));
            }
        }
        out.push(y);
    }
    Ok(out)
}

/// Piecewise-linear interpolant through `(grid, values)`, clamped outside.
pub fn interp_linear(grid: &[f64], values: &[f64], x: f64) -> f64 {
    let n = grid.len();
    if x <= grid[0] {
        return values[0];
    }
    if x >= grid[n - 1] {
        return values[n - 1];
    }
    let i = grid.partition_point(|&g| g <= x) - 1;
    let w = (x - grid[i]) / (grid[i + 1] - grid[i]);
    values[i] + w * (values[i + 1] - values[i])
}

/// `s(x) = ∫_{x_0}^x u` on the sensor grid, with `u` interpolated linearly.
pub fn solve_antiderivative_rk45(u: &FieldSample) -> Result<Vec<f64>> {
    let grid = u.grid();
    if u.sensors.cols() != 1 {
        return Err(Error::shape("antiderivative input must be a scalar field"));
    }
    rk45(|x, _| interp_linear(grid, &u.values, x), grid, 0.0, Rk45Options::default())
}
