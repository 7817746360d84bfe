use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{Backend, DualVar, Eager, Jet, Parameterized};
use crate::error::{Error, Result};
use crate::nn::{Activation, Archive, BackboneKind, FourierFeatureMap, NetSpec, Network};
use crate::tensor::Mat;

/// Branch and trunk networks merged by a dot product over `q` latent features.
#[derive(Clone, Debug, PartialEq)]
pub struct DeepOnetParams {
    pub branch: Network,
    pub trunk: Network,
}

impl DeepOnetParams {
    pub fn init<R: Rng + ?Sized>(branch: &NetSpec, trunk: &NetSpec, rng: &mut R) -> Result<Self> {
        let p = Self {
            branch: Network::init(branch, rng)?,
            trunk: Network::init(trunk, rng)?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.branch.validate()?;
        self.trunk.validate()?;
        if self.branch.out_dim() != self.trunk.out_dim() {
            return Err(Error::shape(format!(
                "branch emits {} features but trunk emits {}",
                self.branch.out_dim(),
                self.trunk.out_dim()
            )));
        }
        Ok(())
    }

    pub fn q(&self) -> usize {
        self.trunk.out_dim()
    }

    /// Sensor count `m` expected by the branch.
    pub fn m(&self) -> usize {
        self.branch.in_dim()
    }

    /// Coordinate dimension `d` expected by the trunk.
    pub fn d(&self) -> usize {
        self.trunk.in_dim()
    }

    pub fn branch_features<B: Backend>(&self, be: &mut B, u: &Mat) -> B::T {
        let uc = be.constant(u.clone());
        self.branch.forward(be, "branch", &uc)
    }

    /// `G(u)(y)` for every row: `u` is `rows x m`, `y` is `rows x d`; returns `rows x 1`.
    pub fn forward<B: Backend>(&self, be: &mut B, u: &Mat, y: &Mat) -> B::T {
        let b = self.branch_features(be, u);
        let yc = be.constant(y.clone());
        let t = self.trunk.forward(be, "trunk", &yc);
        let prod = be.mul(&b, &t);
        be.row_sum(&prod)
    }

    /// `G` together with its first (and optionally second) derivative along
    /// coordinate `axis` of `y`, given precomputed branch features.
    pub fn forward_along<B: Backend>(
        &self,
        be: &mut B,
        branch: &B::T,
        y: &Mat,
        axis: usize,
        second_order: bool,
    ) -> DualVar<B::T> {
        let mut jet = Jet::new(be, second_order);
        let yv = jet.seed_axis(y.clone(), axis);
        let t = self.trunk.forward(&mut jet, "trunk", &yv);
        let b = jet.lift(branch.clone());
        let prod = jet.mul(&b, &t);
        jet.row_sum(&prod)
    }

    pub fn to_archive(&self) -> Archive {
        let mut a = Archive::new();
        for (net, n) in [("branch", &self.branch), ("trunk", &self.trunk)] {
            let s = n.spec();
            a.set_meta(&format!("{net}.in_dim"), s.in_dim);
            a.set_meta(&format!("{net}.depth"), s.depth);
            a.set_meta(&format!("{net}.width"), s.width);
            a.set_meta(&format!("{net}.backbone"), s.backbone);
            a.set_meta(&format!("{net}.activation"), s.activation);
            if let Some(f) = &n.fourier {
                a.set_meta(&format!("{net}.fourier_features"), f.features());
                a.set_meta(&format!("{net}.fourier_sigma"), format!("{:e}", f.sigma));
                a.arrays.insert(format!("{net}.fourier.B"), f.b.clone());
            }
        }
        self.visit_params(&mut |name, m| {
            a.arrays.insert(name.to_string(), m.clone());
        });
        a
    }

    pub fn from_archive(a: &Archive) -> Result<Self> {
        let spec = |net: &str| -> Result<NetSpec> {
            let fourier = match a.meta.get(&format!("{net}.fourier_features")) {
                Some(_) => Some((
                    a.meta_parse::<usize>(&format!("{net}.fourier_features"))?,
                    a.meta_parse::<f64>(&format!("{net}.fourier_sigma"))?,
                )),
                None => None,
            };
            Ok(NetSpec {
                in_dim: a.meta_parse(&format!("{net}.in_dim"))?,
                depth: a.meta_parse(&format!("{net}.depth"))?,
                width: a.meta_parse(&format!("{net}.width"))?,
                backbone: a.meta(&format!("{net}.backbone"))?.parse::<BackboneKind>()?,
                activation: a.meta(&format!("{net}.activation"))?.parse::<Activation>()?,
                fourier,
            })
        };
        // Shapes come from the metadata; every value is then overwritten.
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut p = Self {
            branch: Network::init(&spec("branch")?, &mut rng)?,
            trunk: Network::init(&spec("trunk")?, &mut rng)?,
        };
        for (net, n) in [("branch", &mut p.branch), ("trunk", &mut p.trunk)] {
            if let Some(f) = &mut n.fourier {
                let b = a.array(&format!("{net}.fourier.B"))?;
                if b.shape() != f.b.shape() {
                    return Err(Error::Format(format!("{net} Fourier matrix has shape {:?}", b.shape())));
                }
                *f = FourierFeatureMap::from_matrix(b.clone(), f.sigma);
            }
        }
        let mut problem = None;
        p.visit_params_mut(&mut |name, m| match a.arrays.get(name) {
            Some(v) if v.shape() == m.shape() => *m = v.clone(),
            Some(v) => {
                problem.get_or_insert(format!("array `{name}` has shape {:?}, expected {:?}", v.shape(), m.shape()));
            }
            None => {
                problem.get_or_insert(format!("checkpoint lacks array `{name}`"));
            }
        });
        if let Some(msg) = problem {
            return Err(Error::Format(msg));
        }
        p.validate()?;
        Ok(p)
    }
}

impl Parameterized for DeepOnetParams {
    fn visit_params(&self, f: &mut dyn FnMut(&str, &Mat)) {
        self.branch.visit("branch", f);
        self.trunk.visit("trunk", f);
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&str, &mut Mat)) {
        self.branch.visit_mut("branch", f);
        self.trunk.visit_mut("trunk", f);
    }
}

/// `Σ_k b_k(u) t_k(y)` for a single input function and query point.
pub fn deeponet_eval(params: &DeepOnetParams, u: &[f64], y: &[f64]) -> Result<f64> {
    params.validate()?;
    if u.len() != params.m() || y.len() != params.d() {
        return Err(Error::shape(format!(
            "expected u of length {} and y of length {}, got {} and {}",
            params.m(),
            params.d(),
            u.len(),
            y.len()
        )));
    }
    Ok(params.forward(&mut Eager, &Mat::row(u), &Mat::row(y)).item())
}
