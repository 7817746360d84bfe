use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::init::glorot_normal;
use crate::autodiff::{Backend, Unary};
use crate::error::{Error, Result};
use crate::tensor::Mat;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Elu,
    Relu,
}

impl Activation {
    pub fn unary(self) -> Unary {
        match self {
            Activation::Tanh => Unary::Tanh,
            Activation::Elu => Unary::Elu,
            Activation::Relu => Unary::Relu,
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Tanh => "tanh",
            Activation::Elu => "elu",
            Activation::Relu => "relu",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "elu" => Ok(Activation::Elu),
            "relu" => Ok(Activation::Relu),
            other => Err(Error::Config(format!("unknown activation `{other}`"))),
        }
    }
}

/// Affine map `x W + b` with `W: in x out`, `b: 1 x out`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub w: Mat,
    pub b: Mat,
}

impl Dense {
    pub fn glorot<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        Self {
            w: glorot_normal(fan_in, fan_out, rng),
            b: Mat::zeros(1, fan_out),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.w.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.w.cols()
    }

    pub(crate) fn apply<B: Backend>(&self, be: &mut B, name: &str, x: &B::T) -> B::T {
        let w = be.param(&format!("{name}.w"), &self.w);
        let b = be.param(&format!("{name}.b"), &self.b);
        let xw = be.matmul(x, &w);
        be.add_row(&xw, &b)
    }

    pub(crate) fn visit(&self, name: &str, f: &mut dyn FnMut(&str, &Mat)) {
        f(&format!("{name}.w"), &self.w);
        f(&format!("{name}.b"), &self.b);
    }

    pub(crate) fn visit_mut(&mut self, name: &str, f: &mut dyn FnMut(&str, &mut Mat)) {
        f(&format!("{name}.w"), &mut self.w);
        f(&format!("{name}.b"), &mut self.b);
    }
}

/// Fully connected network: affine + activation on every layer but the last.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<Dense>,
    pub activation: Activation,
}

impl MlpParams {
    /// `widths = [in, h1, ..., out]`; Glorot-normal weights, zero biases.
    pub fn init<R: Rng + ?Sized>(widths: &[usize], activation: Activation, rng: &mut R) -> Self {
        assert!(widths.len() >= 2, "an MLP needs at least one layer");
        let layers = widths
            .windows(2)
            .map(|w| Dense::glorot(w[0], w[1], rng))
            .collect();
        Self { layers, activation }
    }

    pub fn from_layers(layers: Vec<Dense>, activation: Activation) -> Result<Self> {
        let p = Self { layers, activation };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::shape("MLP without layers"));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.b.shape() != (1, l.out_dim()) {
                return Err(Error::shape(format!("layer {i} bias shape {:?}", l.b.shape())));
            }
            if !l.w.is_finite() || !l.b.is_finite() {
                return Err(Error::NonFinite(format!("MLP layer {i}")));
            }
        }
        for (i, pair) in self.layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::shape(format!(
                    "layer {i} outputs {} but layer {} expects {}",
                    pair[0].out_dim(),
                    i + 1,
                    pair[1].in_dim()
                )));
            }
        }
        Ok(())
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().map_or(0, Dense::out_dim)
    }

    pub fn forward<B: Backend>(&self, be: &mut B, prefix: &str, x: &B::T) -> B::T {
        let act = self.activation.unary();
        let last = self.layers.len() - 1;
        let mut h = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.apply(be, &format!("{prefix}.l{i}"), &h);
            if i < last {
                h = be.unary(&h, act);
            }
        }
        h
    }

    pub(crate) fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &Mat)) {
        for (i, l) in self.layers.iter().enumerate() {
            l.visit(&format!("{prefix}.l{i}"), f);
        }
    }

    pub(crate) fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Mat)) {
        for (i, l) in self.layers.iter_mut().enumerate() {
            l.visit_mut(&format!("{prefix}.l{i}"), f);
        }
    }
}

/// Evaluates an MLP on a single input vector.
pub fn mlp_forward(params: &MlpParams, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != params.in_dim() {
        return Err(Error::shape(format!(
            "input has length {} but the network expects {}",
            x.len(),
            params.in_dim()
        )));
    }
    let mut be = crate::autodiff::Eager;
    Ok(params.forward(&mut be, "mlp", &Mat::row(x)).into_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dense(w: &[&[f64]], b: &[f64]) -> Dense {
        Dense {
            w: Mat::from_rows(&w.iter().map(|r| r.to_vec()).collect::<Vec<_>>()),
            b: Mat::row(b),
        }
    }

    #[test]
    fn zero_network_outputs_zero() {
        let p = MlpParams::from_layers(
            vec![dense(&[&[0.0, 0.0]], &[0.0, 0.0]), dense(&[&[0.0], &[0.0]], &[0.0])],
            Activation::Tanh,
        )
        .unwrap();
        assert_eq!(mlp_forward(&p, &[3.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn identity_tanh_at_zero() {
        let p = MlpParams::from_layers(
            vec![dense(&[&[1.0]], &[0.0]), dense(&[&[1.0]], &[0.0])],
            Activation::Tanh,
        )
        .unwrap();
        assert_eq!(mlp_forward(&p, &[0.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn two_layer_hand_computation() {
        let p = MlpParams::from_layers(
            vec![
                dense(&[&[0.5, -1.0], &[2.0, 0.25]], &[0.1, -0.2]),
                dense(&[&[1.5], &[-0.75]], &[0.3]),
            ],
            Activation::Tanh,
        )
        .unwrap();
        let x = [0.4, -0.6];
        let h0 = (0.4 * 0.5 + -0.6 * 2.0 + 0.1_f64).tanh();
        let h1 = (0.4 * -1.0 + -0.6 * 0.25 - 0.2_f64).tanh();
        let expected = h0 * 1.5 + h1 * -0.75 + 0.3;
        let out = mlp_forward(&p, &x).unwrap()[0];
        assert!((out - expected).abs() <= 1e-15, "{out} vs {expected}");
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = MlpParams::init(&[3, 4, 1], Activation::Tanh, &mut rng);
        assert!(matches!(mlp_forward(&p, &[1.0]), Err(Error::Shape(_))));
        let bad = MlpParams::from_layers(
            vec![Dense::glorot(2, 3, &mut rng), Dense::glorot(4, 1, &mut rng)],
            Activation::Tanh,
        );
        assert!(bad.is_err());
    }

    // Scale every weight matrix so its Frobenius norm (an upper bound on the
    // spectral norm) is at most one; tanh is 1-Lipschitz, so the network is too.
    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn contractive_tanh_nets_are_one_lipschitz(seed in 0u64..10_000, xs in prop::collection::vec(-3.0f64..3.0, 6)) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut p = MlpParams::init(&[3, 8, 8, 2], Activation::Tanh, &mut rng);
            for l in &mut p.layers {
                let n = l.w.frobenius_norm();
                if n > 1.0 {
                    l.w = l.w.map(|v| v / n);
                }
            }
            let a = mlp_forward(&p, &xs[..3]).unwrap();
            let b = mlp_forward(&p, &xs[3..]).unwrap();
            let dy = a.iter().zip(&b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
            let dx = xs[..3].iter().zip(&xs[3..]).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
            prop_assert!(dy <= dx * (1.0 + 1e-12));
        }
    }
}
