use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::fourier::FourierFeatureMap;
use super::mlp::{Activation, MlpParams};
use super::modified::ModifiedMlpParams;
use crate::autodiff::Backend;
use crate::error::{Error, Result};
use crate::tensor::Mat;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BackboneKind {
    Mlp,
    ModifiedMlp,
}

impl fmt::Display for BackboneKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackboneKind::Mlp => "mlp",
            BackboneKind::ModifiedMlp => "modified_mlp",
        })
    }
}

impl FromStr for BackboneKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mlp" => Ok(BackboneKind::Mlp),
            "modified_mlp" => Ok(BackboneKind::ModifiedMlp),
            other => Err(Error::Config(format!("unknown backbone `{other}`"))),
        }
    }
}

/// Shape of one sub-network. `depth` counts affine layers; every hidden
/// layer and the output have `width` units.
#[derive(Clone, Debug, PartialEq)]
pub struct NetSpec {
    pub in_dim: usize,
    pub depth: usize,
    pub width: usize,
    pub backbone: BackboneKind,
    pub activation: Activation,
    /// `(features, σ)` of an optional Fourier input embedding.
    pub fourier: Option<(usize, f64)>,
}

impl NetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.depth < 2 && self.backbone == BackboneKind::Mlp {
            return Err(Error::Config("MLP depth must be at least 2".into()));
        }
        if self.depth < 3 && self.backbone == BackboneKind::ModifiedMlp {
            return Err(Error::Config("modified MLP depth must be at least 3".into()));
        }
        if self.width == 0 || self.in_dim == 0 {
            return Err(Error::Config("network widths must be positive".into()));
        }
        if let Some((features, sigma)) = self.fourier {
            if features == 0 || !(sigma > 0.0) {
                return Err(Error::Config("Fourier embedding needs features > 0 and sigma > 0".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Backbone {
    Mlp(MlpParams),
    Modified(ModifiedMlpParams),
}

impl Backbone {
    pub fn in_dim(&self) -> usize {
        match self {
            Backbone::Mlp(p) => p.in_dim(),
            Backbone::Modified(p) => p.in_dim(),
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            Backbone::Mlp(p) => p.out_dim(),
            Backbone::Modified(p) => p.out_dim(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Backbone::Mlp(p) => p.validate(),
            Backbone::Modified(p) => p.validate(),
        }
    }

    pub fn forward<B: Backend>(&self, be: &mut B, prefix: &str, x: &B::T) -> B::T {
        match self {
            Backbone::Mlp(p) => p.forward(be, prefix, x),
            Backbone::Modified(p) => p.forward(be, prefix, x),
        }
    }

    pub(crate) fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &Mat)) {
        match self {
            Backbone::Mlp(p) => p.visit(prefix, f),
            Backbone::Modified(p) => p.visit(prefix, f),
        }
    }

    pub(crate) fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Mat)) {
        match self {
            Backbone::Mlp(p) => p.visit_mut(prefix, f),
            Backbone::Modified(p) => p.visit_mut(prefix, f),
        }
    }
}

/// A backbone with an optional frozen Fourier embedding in front.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub fourier: Option<FourierFeatureMap>,
    pub body: Backbone,
}

impl Network {
    pub fn init<R: Rng + ?Sized>(spec: &NetSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let fourier = match spec.fourier {
            Some((features, sigma)) => Some(FourierFeatureMap::new(features, spec.in_dim, sigma, rng)?),
            None => None,
        };
        let body_in = fourier.as_ref().map_or(spec.in_dim, FourierFeatureMap::out_dim);
        let body = match spec.backbone {
            BackboneKind::Mlp => {
                let mut widths = vec![body_in];
                widths.extend(std::iter::repeat_n(spec.width, spec.depth));
                Backbone::Mlp(MlpParams::init(&widths, spec.activation, rng))
            }
            BackboneKind::ModifiedMlp => Backbone::Modified(ModifiedMlpParams::init(
                body_in,
                spec.width,
                spec.depth - 2,
                spec.width,
                spec.activation,
                rng,
            )),
        };
        Ok(Self { fourier, body })
    }

    /// Recovers the shape description this network was built from.
    pub fn spec(&self) -> NetSpec {
        let (depth, width, backbone, activation) = match &self.body {
            Backbone::Mlp(p) => (p.layers.len(), p.out_dim(), BackboneKind::Mlp, p.activation),
            Backbone::Modified(p) => (p.gates() + 2, p.width(), BackboneKind::ModifiedMlp, p.activation),
        };
        NetSpec {
            in_dim: self.in_dim(),
            depth,
            width,
            backbone,
            activation,
            fourier: self.fourier.as_ref().map(|f| (f.features(), f.sigma)),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.fourier
            .as_ref()
            .map_or_else(|| self.body.in_dim(), FourierFeatureMap::in_dim)
    }

    pub fn out_dim(&self) -> usize {
        self.body.out_dim()
    }

    pub fn validate(&self) -> Result<()> {
        self.body.validate()?;
        if let Some(f) = &self.fourier {
            if f.out_dim() != self.body.in_dim() {
                return Err(Error::shape(format!(
                    "embedding emits {} features but the backbone takes {}",
                    f.out_dim(),
                    self.body.in_dim()
                )));
            }
        }
        Ok(())
    }

    pub fn forward<B: Backend>(&self, be: &mut B, prefix: &str, x: &B::T) -> B::T {
        match &self.fourier {
            Some(f) => {
                let e = f.embed(be, x);
                self.body.forward(be, prefix, &e)
            }
            None => self.body.forward(be, prefix, x),
        }
    }

    pub fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &Mat)) {
        self.body.visit(prefix, f);
    }

    pub fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Mat)) {
        self.body.visit_mut(prefix, f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(backbone: BackboneKind, fourier: Option<(usize, f64)>) -> NetSpec {
        NetSpec {
            in_dim: 2,
            depth: 4,
            width: 6,
            backbone,
            activation: Activation::Tanh,
            fourier,
        }
    }

    #[test]
    fn depth_counts_affine_layers() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let n = Network::init(&spec(BackboneKind::Mlp, None), &mut rng).unwrap();
        match &n.body {
            Backbone::Mlp(p) => assert_eq!(p.layers.len(), 4),
            _ => unreachable!(),
        }
        let m = Network::init(&spec(BackboneKind::ModifiedMlp, None), &mut rng).unwrap();
        match &m.body {
            Backbone::Modified(p) => assert_eq!(p.gates(), 2),
            _ => unreachable!(),
        }
        assert_eq!(m.out_dim(), 6);
        assert_eq!(m.spec(), spec(BackboneKind::ModifiedMlp, None));
        assert_eq!(n.spec(), spec(BackboneKind::Mlp, None));
    }

    #[test]
    fn fourier_front_end_feeds_the_backbone() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = Network::init(&spec(BackboneKind::Mlp, Some((5, 2.0))), &mut rng).unwrap();
        assert_eq!(n.in_dim(), 2);
        assert_eq!(n.body.in_dim(), 10);
        n.validate().unwrap();
        // B is not a trainable parameter.
        let mut names = Vec::new();
        n.visit("t", &mut |k, _| names.push(k.to_string()));
        assert!(names.iter().all(|k| k.starts_with("t.l")));
    }
}
