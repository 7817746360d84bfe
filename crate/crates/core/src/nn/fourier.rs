use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::autodiff::{Backend, Eager, Unary};
use crate::error::{Error, Result};
use crate::tensor::Mat;

/// Random Fourier coordinate embedding `γ(v) = [cos(B v), sin(B v)]`.
///
/// `B` is `features x d`, drawn once from N(0, σ²) and never trained.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierFeatureMap {
    pub b: Mat,
    pub sigma: f64,
}

impl FourierFeatureMap {
    pub fn new<R: Rng + ?Sized>(features: usize, d: usize, sigma: f64, rng: &mut R) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!("Fourier scale must be positive, got {sigma}")));
        }
        let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
        let b = Mat::from_fn(features, d, |_, _| normal.sample(rng));
        Ok(Self { b, sigma })
    }

    pub fn from_matrix(b: Mat, sigma: f64) -> Self {
        Self { b, sigma }
    }

    pub fn features(&self) -> usize {
        self.b.rows()
    }

    pub fn in_dim(&self) -> usize {
        self.b.cols()
    }

    pub fn out_dim(&self) -> usize {
        2 * self.features()
    }

    /// Row-wise embedding of `y` (`rows x d`) into `rows x 2·features`.
    pub fn embed<B: Backend>(&self, be: &mut B, y: &B::T) -> B::T {
        let bt = be.constant(self.b.transpose());
        let proj = be.matmul(y, &bt);
        let c = be.unary(&proj, Unary::Cos);
        let s = be.unary(&proj, Unary::Sin);
        be.hcat(&c, &s)
    }
}

pub fn fourier_embed(map: &FourierFeatureMap, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != map.in_dim() {
        return Err(Error::shape(format!(
            "embedding expects {} coordinates, got {}",
            map.in_dim(),
            v.len()
        )));
    }
    Ok(map.embed(&mut Eager, &Mat::row(v)).into_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn origin_maps_to_ones_then_zeros() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let map = FourierFeatureMap::new(3, 2, 10.0, &mut rng).unwrap();
        assert_eq!(
            fourier_embed(&map, &[0.0, 0.0]).unwrap(),
            vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn pi_frequency() {
        let map = FourierFeatureMap::from_matrix(Mat::scalar(std::f64::consts::PI), 1.0);
        let e = fourier_embed(&map, &[1.0]).unwrap();
        assert_eq!(e[0], -1.0);
        assert!(e[1].abs() < 1e-15);
    }

    #[test]
    fn outputs_are_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let map = FourierFeatureMap::new(8, 2, 50.0, &mut rng).unwrap();
        for _ in 0..10_000 {
            let v = [rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)];
            for c in fourier_embed(&map, &v).unwrap() {
                assert!((-1.0..=1.0).contains(&c));
            }
        }
    }

    #[test]
    fn entries_have_scale_sigma() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let map = FourierFeatureMap::new(200, 50, 3.0, &mut rng).unwrap();
        let n = map.b.len() as f64;
        let var = map.b.as_slice().iter().map(|x| x * x).sum::<f64>() / n;
        assert!((var.sqrt() / 3.0 - 1.0).abs() < 0.03);
    }

    #[test]
    fn nonpositive_sigma_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(FourierFeatureMap::new(2, 1, 0.0, &mut rng).is_err());
    }
}
