use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::deeponet::FieldSample;
use crate::error::{Error, Result};
use crate::tensor::Mat;

const CONTOUR_POINTS: usize = 32;
const BLOW_UP: f64 = 1e8;

struct Spectral {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Spectral {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    fn forward(&self, u: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = u.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fwd.process(&mut buf);
        buf
    }

    fn inverse(&self, v: &[Complex64]) -> Vec<f64> {
        let mut buf = v.to_vec();
        self.inv.process(&mut buf);
        let s = 1.0 / self.n as f64;
        buf.iter().map(|c| c.re * s).collect()
    }
}

/// Signed integer wavenumber for FFT index `j`; the Nyquist mode maps to 0.
fn wavenumber(j: usize, n: usize) -> i64 {
    let j = j as i64;
    let n = n as i64;
    if 2 * j < n {
        j
    } else if 2 * j == n {
        0
    } else {
        j - n
    }
}

/// Trigonometric interpolation of periodic samples onto `n` equispaced points.
pub fn fourier_resample(values: &[f64], n: usize) -> Vec<f64> {
    let m = values.len();
    if m == n {
        return values.to_vec();
    }
    let src = Spectral::new(m).forward(values);
    let mut dst = vec![Complex64::new(0.0, 0.0); n];
    let keep = (m.min(n) - 1) / 2;
    let scale = n as f64 / m as f64;
    dst[0] = src[0] * scale;
    for k in 1..=keep {
        dst[k] = src[k] * scale;
        dst[n - k] = src[m - k] * scale;
    }
    Spectral::new(n).inverse(&dst)
}

/// Evaluates the trigonometric interpolant of periodic samples at `x`.
pub fn fourier_eval(values: &[f64], x: f64) -> f64 {
    let m = values.len();
    let c = Spectral::new(m).forward(values);
    let mut s = c[0].re;
    for j in 1..m {
        let k = wavenumber(j, m);
        if k == 0 {
            continue;
        }
        let (sn, cs) = (TAU * k as f64 * x).sin_cos();
        s += c[j].re * cs - c[j].im * sn;
    }
    s / m as f64
}

/// Periodic viscous Burgers `u_t + u u_x = ν u_xx` on `[0, 1)`, integrated
/// with ETDRK4 and 2/3-rule dealiasing. `u0` holds the initial values on the
/// `nx`-point grid `j / nx`. Returns `nx x S` where column `s` is the state at
/// `t = s · snapshot_every`, up to `t = 1`.
pub fn burgers_etdrk4(u0: &[f64], nu: f64, dt: f64, snapshot_every: f64) -> Result<Mat> {
    let nx = u0.len();
    if nx < 4 || nx % 2 != 0 {
        return Err(Error::invalid("Burgers grid needs an even nx >= 4"));
    }
    if !(nu > 0.0) || !(dt > 0.0) || !(snapshot_every >= dt) {
        return Err(Error::invalid("Burgers solver needs nu > 0 and 0 < dt <= snapshot interval"));
    }
    let per_snap = (snapshot_every / dt).round() as usize;
    if ((per_snap as f64) * dt - snapshot_every).abs() > 1e-9 * snapshot_every {
        return Err(Error::invalid("snapshot interval must be a multiple of dt"));
    }
    let snaps = (1.0 / snapshot_every).round() as usize + 1;
    let sp = Spectral::new(nx);

    let kmax = nx as i64 / 3;
    let mut lin = vec![0.0; nx];
    let mut g = vec![Complex64::new(0.0, 0.0); nx];
    for j in 0..nx {
        let k = wavenumber(j, nx);
        let w = TAU * k as f64;
        lin[j] = -nu * w * w;
        if k.abs() <= kmax {
            g[j] = Complex64::new(0.0, -0.5 * w);
        }
    }

    let e: Vec<f64> = lin.iter().map(|l| (dt * l).exp()).collect();
    let e2: Vec<f64> = lin.iter().map(|l| (dt * l / 2.0).exp()).collect();
    let (mut q, mut f1, mut f2, mut f3) = (vec![0.0; nx], vec![0.0; nx], vec![0.0; nx], vec![0.0; nx]);
    for j in 0..nx {
        let (mut sq, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
        for p in 1..=CONTOUR_POINTS {
            let r = Complex64::from_polar(1.0, PI * (p as f64 - 0.5) / CONTOUR_POINTS as f64);
            let z = r + dt * lin[j];
            let ez = z.exp();
            let z3 = z * z * z;
            sq += (((z / 2.0).exp() - 1.0) / z).re;
            s1 += ((-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3).re;
            s2 += ((2.0 + z + ez * (z - 2.0)) / z3).re;
            s3 += ((-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3).re;
        }
        let mm = CONTOUR_POINTS as f64;
        q[j] = dt * sq / mm;
        f1[j] = dt * s1 / mm;
        f2[j] = dt * s2 / mm;
        f3[j] = dt * s3 / mm;
    }

    let nonlinear = |v: &[Complex64]| -> Vec<Complex64> {
        let u = sp.inverse(v);
        let sq: Vec<f64> = u.iter().map(|x| x * x).collect();
        let mut w = sp.forward(&sq);
        for j in 0..nx {
            w[j] *= g[j];
        }
        w
    };

    let mut v = sp.forward(u0);
    let mut out = Mat::zeros(nx, snaps);
    for (i, &x) in u0.iter().enumerate() {
        out.set(i, 0, x);
    }
    let zero = Complex64::new(0.0, 0.0);
    let mut a = vec![zero; nx];
    let mut b = vec![zero; nx];
    let mut c = vec![zero; nx];
    for s in 1..snaps {
        for _ in 0..per_snap {
            let nv = nonlinear(&v);
            for j in 0..nx {
                a[j] = e2[j] * v[j] + q[j] * nv[j];
            }
            let na = nonlinear(&a);
            for j in 0..nx {
                b[j] = e2[j] * v[j] + q[j] * na[j];
            }
            let nb = nonlinear(&b);
            for j in 0..nx {
                c[j] = e2[j] * a[j] + q[j] * (2.0 * nb[j] - nv[j]);
            }
            let nc = nonlinear(&c);
            for j in 0..nx {
                v[j] = e[j] * v[j] + nv[j] * f1[j] + 2.0 * (na[j] + nb[j]) * f2[j] + nc[j] * f3[j];
            }
            let peak = v.iter().map(|z| z.norm()).fold(0.0, f64::max) / nx as f64;
            if !(peak <= BLOW_UP) {
                return Err(Error::Solver(format!("Burgers solution blew up before t = {}", s as f64 * snapshot_every)));
            }
        }
        for (i, x) in sp.inverse(&v).into_iter().enumerate() {
            out.set(i, s, x);
        }
    }
    Ok(out)
}

/// As [`burgers_etdrk4`], starting from periodic sensor values resampled
/// spectrally onto `nx` points.
pub fn solve_burgers_spectral(u0: &FieldSample, nu: f64, nx: usize, dt: f64, snapshot_every: f64) -> Result<Mat> {
    if u0.sensors.cols() != 1 {
        return Err(Error::shape("Burgers initial condition must be a scalar field"));
    }
    burgers_etdrk4(&fourier_resample(&u0.values, nx), nu, dt, snapshot_every)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavenumbers_follow_fft_order() {
        let k: Vec<i64> = (0..6).map(|j| wavenumber(j, 6)).collect();
        assert_eq!(k, vec![0, 1, 2, 0, -2, -1]);
    }

    #[test]
    fn resample_is_exact_for_band_limited_data() {
        let src: Vec<f64> = (0..16).map(|j| (TAU * j as f64 / 16.0).sin()).collect();
        let dst = fourier_resample(&src, 40);
        for (j, v) in dst.iter().enumerate() {
            assert!((v - (TAU * j as f64 / 40.0).sin()).abs() < 1e-13);
        }
        assert!((fourier_eval(&src, 0.3) - (TAU * 0.3).sin()).abs() < 1e-13);
    }

    #[test]
    fn zero_stays_zero() {
        let out = burgers_etdrk4(&[0.0; 16], 0.01, 0.01, 0.1).unwrap();
        assert_eq!(out.shape(), (16, 11));
        assert!(out.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pure_diffusion_of_a_small_mode() {
        // Tiny amplitude: the nonlinearity is negligible, so u ≈ ε e^{-ν(2π)² t} sin 2πx.
        let nx = 32;
        let eps = 1e-8;
        let u0: Vec<f64> = (0..nx).map(|j| eps * (TAU * j as f64 / nx as f64).sin()).collect();
        let out = burgers_etdrk4(&u0, 0.1, 1e-3, 0.5).unwrap();
        let decay = (-0.1 * TAU * TAU).exp();
        for j in 0..nx {
            assert!((out.get(j, 2) - u0[j] * decay).abs() < 1e-14);
        }
    }

    #[test]
    fn misaligned_snapshots_are_rejected() {
        assert!(burgers_etdrk4(&[0.0; 8], 0.01, 0.003, 0.01).is_err());
    }
}
