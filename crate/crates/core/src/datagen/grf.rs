use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::deeponet::FieldSample;
use crate::error::{Error, Result};

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-6;

/// Mean-zero GRF on a 1-D grid with kernel `exp(-|x1 - x2|² / 2l²)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GrfSpec {
    pub length_scale: f64,
    pub grid: Vec<f64>,
}

impl GrfSpec {
    pub fn new(length_scale: f64, grid: Vec<f64>) -> Self {
        Self { length_scale, grid }
    }

    /// `m` equispaced points on `[0, 1]`.
    pub fn uniform(length_scale: f64, m: usize) -> Self {
        Self::new(length_scale, linspace(0.0, 1.0, m))
    }

    pub fn kernel(&self, x1: f64, x2: f64) -> f64 {
        let d = x1 - x2;
        (-d * d / (2.0 * self.length_scale * self.length_scale)).exp()
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Lower Cholesky factor, row-major `n x n`, or `None` if not positive definite.
fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// A factorized GRF ready for repeated sampling.
#[derive(Clone, Debug)]
pub struct Grf {
    spec: GrfSpec,
    factor: Vec<f64>,
    jitter: f64,
}

impl Grf {
    pub fn new(spec: GrfSpec) -> Result<Self> {
        if !(spec.length_scale > 0.0) {
            return Err(Error::invalid("length scale must be positive"));
        }
        if spec.grid.is_empty() || spec.grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("GRF grid must be non-empty and strictly increasing"));
        }
        let n = spec.grid.len();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                k[i * n + j] = spec.kernel(spec.grid[i], spec.grid[j]);
            }
        }
        let mut jitter = JITTER_START;
        loop {
            let mut kj = k.clone();
            for i in 0..n {
                kj[i * n + i] += jitter;
            }
            if let Some(factor) = cholesky(&kj, n) {
                if jitter > JITTER_START {
                    log::info!("GRF covariance (l = {}) needed jitter {jitter:e}", spec.length_scale);
                }
                return Ok(Self { spec, factor, jitter });
            }
            if jitter >= JITTER_MAX {
                return Err(Error::Cholesky { jitter });
            }
            jitter *= 10.0;
        }
    }

    pub fn spec(&self) -> &GrfSpec {
        &self.spec
    }

    /// Diagonal jitter that made the covariance factorizable.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn sample<R: Rng + ?Sized>(&self, id: u64, rng: &mut R) -> FieldSample {
        let n = self.spec.grid.len();
        let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let values = (0..n)
            .map(|i| (0..=i).map(|k| self.factor[i * n + k] * z[k]).sum())
            .collect();
        FieldSample::new(id, &self.spec.grid, values).expect("grid and values have equal length")
    }
}

/// One draw `u = L z`; factorizes on every call, so prefer [`Grf`] in loops.
pub fn grf_sample<R: Rng + ?Sized>(spec: &GrfSpec, rng: &mut R) -> Result<FieldSample> {
    Ok(Grf::new(spec.clone())?.sample(0, rng))
}

/// Periodic GRF on `[0, 1)` with spectral variance
/// `amplitude² ((2πk)² + shift²)^(-power)` for `k = 0..=modes`.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicGrfSpec {
    pub amplitude: f64,
    pub laplacian_shift: f64,
    pub power: i32,
    pub modes: usize,
}

impl PeriodicGrfSpec {
    /// Standard settings, truncated to `nx / 2 - 1` modes.
    pub fn for_grid(nx: usize) -> Self {
        Self {
            amplitude: 25.0,
            laplacian_shift: 5.0,
            power: 4,
            modes: (nx / 2).saturating_sub(1),
        }
    }

    pub fn mode_variance(&self, k: usize) -> f64 {
        let w = TAU * k as f64;
        self.amplitude * self.amplitude * (w * w + self.laplacian_shift * self.laplacian_shift).powi(-self.power)
    }

    /// Pointwise variance of the field (sum over all modes).
    pub fn pointwise_variance(&self) -> f64 {
        (0..=self.modes).map(|k| self.mode_variance(k)).sum()
    }
}

/// A drawn periodic field, evaluable anywhere.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicField {
    /// `a_0, a_1, ..., a_K` cosine coefficients.
    pub cos: Vec<f64>,
    /// `b_0 = 0, b_1, ..., b_K` sine coefficients.
    pub sin: Vec<f64>,
}

impl PeriodicField {
    pub fn draw<R: Rng + ?Sized>(spec: &PeriodicGrfSpec, rng: &mut R) -> Self {
        let mut cos = Vec::with_capacity(spec.modes + 1);
        let mut sin = Vec::with_capacity(spec.modes + 1);
        for k in 0..=spec.modes {
            let s = spec.mode_variance(k).sqrt();
            cos.push(s * rng.sample::<f64, _>(StandardNormal));
            sin.push(if k == 0 { 0.0 } else { s * rng.sample::<f64, _>(StandardNormal) });
        }
        Self { cos, sin }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut s = self.cos[0];
        for k in 1..self.cos.len() {
            let (sn, cs) = (TAU * k as f64 * x).sin_cos();
            s += self.cos[k] * cs + self.sin[k] * sn;
        }
        s
    }
}

/// `n` equispaced points on `[0, 1)`.
pub fn periodic_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / n as f64).collect()
}

pub fn periodic_grf_sample<R: Rng + ?Sized>(spec: &PeriodicGrfSpec, grid: &[f64], rng: &mut R) -> FieldSample {
    let f = PeriodicField::draw(spec, rng);
    let values = grid.iter().map(|&x| f.eval(x)).collect();
    FieldSample::new(0, grid, values).expect("grid and values have equal length")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cholesky_of_a_known_matrix() {
        let l = cholesky(&[4.0, 2.0, 2.0, 5.0], 2).unwrap();
        assert_eq!(l, vec![2.0, 0.0, 1.0, 2.0]);
        assert!(cholesky(&[1.0, 2.0, 2.0, 1.0], 2).is_none());
    }

    #[test]
    fn huge_length_scale_gives_flat_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let s = grf_sample(&GrfSpec::uniform(1e6, 50), &mut rng).unwrap();
            let (lo, hi) = s.values.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
            assert!(hi - lo < 1e-3);
        }
    }

    #[test]
    fn bad_grids_are_rejected() {
        assert!(Grf::new(GrfSpec::new(0.2, vec![0.0, 0.5, 0.5])).is_err());
        assert!(Grf::new(GrfSpec::new(-1.0, vec![0.0, 1.0])).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let g = Grf::new(GrfSpec::uniform(0.2, 30)).unwrap();
        let a = g.sample(3, &mut ChaCha8Rng::seed_from_u64(9));
        let b = g.sample(3, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
        assert_eq!(a.id, 3);
    }

    #[test]
    fn periodic_field_wraps_around() {
        let spec = PeriodicGrfSpec::for_grid(64);
        assert_eq!(spec.modes, 31);
        let f = PeriodicField::draw(&spec, &mut ChaCha8Rng::seed_from_u64(2));
        assert!((f.eval(0.0) - f.eval(1.0)).abs() < 1e-12);
    }
}
