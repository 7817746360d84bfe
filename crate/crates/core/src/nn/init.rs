use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::tensor::Mat;

/// Glorot (Xavier) normal initialisation: entries ~ N(0, 2 / (fan_in + fan_out)).
///
/// The matrix is `fan_in x fan_out`, matching the row-vector convention
/// `x W + b` used by every layer.
pub fn glorot_normal<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Mat {
    assert!(fan_in >= 1 && fan_out >= 1, "fan_in and fan_out must be positive");
    let std = (2.0 / (fan_in + fan_out) as f64).sqrt();
    Mat::from_fn(fan_in, fan_out, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        std * z
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn moments(fan_in: usize, fan_out: usize, draws: usize) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut vals = Vec::with_capacity(draws);
        while vals.len() < draws {
            vals.extend_from_slice(glorot_normal(fan_in, fan_out, &mut rng).as_slice());
        }
        vals.truncate(draws);
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn unit_fans_give_unit_variance() {
        let (mean, var) = moments(1, 1, 100_000);
        assert!((var - 1.0).abs() < 0.03, "variance {var}");
        assert!(mean.abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn fifty_by_fifty_variance() {
        let (mean, var) = moments(50, 50, 100_000);
        assert!((var / 0.02 - 1.0).abs() < 0.03, "variance {var}");
        assert!(mean.abs() < 0.01);
    }
}
