use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::deeponet::{DeepOnetParams, FieldSample, OperatorDataset};
use crate::error::{Error, Result};
use crate::tensor::Mat;

use super::loss::physics_rows;
use super::problem::{PdeProblem, ProblemKind};
use crate::autodiff::Eager;

/// Constraint and collocation rows for a training set. Pools a problem
/// does not use are `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct Pools {
    pub ic: Option<OperatorDataset>,
    pub bc: Option<OperatorDataset>,
    pub physics: Option<OperatorDataset>,
}

/// Independent generator for sample `index`, derived from `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

struct PoolBuilder {
    ids: Vec<u64>,
    inputs: Vec<f64>,
    y: Vec<f64>,
    targets: Vec<f64>,
    m: usize,
    d: usize,
    per_sample: usize,
    with_targets: bool,
}

impl PoolBuilder {
    fn new(m: usize, d: usize, per_sample: usize, with_targets: bool) -> Self {
        Self {
            ids: Vec::new(),
            inputs: Vec::new(),
            y: Vec::new(),
            targets: Vec::new(),
            m,
            d,
            per_sample,
            with_targets,
        }
    }

    fn sample(&mut self, s: &FieldSample) {
        self.ids.push(s.id);
        self.inputs.extend_from_slice(&s.values);
    }

    fn row(&mut self, y: &[f64], target: Option<f64>) {
        self.y.extend_from_slice(y);
        self.targets.extend(target);
    }

    fn finish(self) -> Result<OperatorDataset> {
        let n = self.ids.len();
        OperatorDataset::new(
            self.ids,
            Mat::from_vec(n, self.m, self.inputs),
            self.per_sample,
            Mat::from_vec(n * self.per_sample, self.d, self.y),
            self.with_targets.then_some(self.targets),
        )
    }
}

/// Draws the per-sample constraint and collocation points.
///
/// Points are fixed once per dataset. Collocation `x` coordinates for the
/// antiderivative and diffusion–reaction problems cycle through the sensor
/// grid so their forcing targets are exact sensor values.
pub fn build_pools(problem: &PdeProblem, samples: &[FieldSample], seed: u64) -> Result<Pools> {
    problem.validate()?;
    let first = samples
        .first()
        .ok_or_else(|| Error::invalid("cannot build pools from zero samples"))?;
    let m_in = first.values.len();
    let sensors = first.m();
    let (p, q) = (problem.collocation.p, problem.collocation.q);
    let d = problem.d();
    for s in samples {
        if s.values.len() != m_in || s.m() != sensors {
            return Err(Error::shape(format!("sample {} has a different sensor layout", s.id)));
        }
    }

    let mut ic = None;
    let mut bc = None;
    let mut phys: Option<OperatorDataset>;
    match problem.kind {
        ProblemKind::Antiderivative => {
            let mut a = PoolBuilder::new(m_in, d, p, true);
            let mut r = PoolBuilder::new(m_in, d, q, true);
            for s in samples {
                a.sample(s);
                for _ in 0..p {
                    a.row(&[0.0], Some(0.0));
                }
                r.sample(s);
                for j in 0..q {
                    let k = j % sensors;
                    r.row(&[s.grid()[k]], Some(s.values[k]));
                }
            }
            ic = Some(a.finish()?);
            phys = Some(r.finish()?);
        }
        ProblemKind::DiffusionReaction => {
            let mut b = PoolBuilder::new(m_in, d, p, true);
            let mut r = PoolBuilder::new(m_in, d, q, true);
            for (i, s) in samples.iter().enumerate() {
                let mut rng = sample_rng(seed, i as u64);
                b.sample(s);
                for _ in 0..p {
                    // The three segments t = 0, x = 0, x = 1 have equal length.
                    let y = match rng.random_range(0..3) {
                        0 => [rng.random::<f64>(), 0.0],
                        1 => [0.0, rng.random::<f64>()],
                        _ => [1.0, rng.random::<f64>()],
                    };
                    b.row(&y, Some(0.0));
                }
                r.sample(s);
                for j in 0..q {
                    let k = j % sensors;
                    r.row(&[s.grid()[k], rng.random::<f64>()], Some(s.values[k]));
                }
            }
            bc = Some(b.finish()?);
            phys = Some(r.finish()?);
        }
        ProblemKind::Burgers => {
            let mut a = PoolBuilder::new(m_in, d, p, true);
            let mut b = PoolBuilder::new(m_in, d, p, false);
            let mut r = PoolBuilder::new(m_in, d, q, true);
            for (i, s) in samples.iter().enumerate() {
                let mut rng = sample_rng(seed, i as u64);
                a.sample(s);
                for j in 0..p {
                    let k = j % sensors;
                    a.row(&[s.grid()[k], 0.0], Some(s.values[k]));
                }
                b.sample(s);
                for _ in 0..p {
                    b.row(&[0.0, rng.random::<f64>()], None);
                }
                r.sample(s);
                for _ in 0..q {
                    r.row(&[rng.random::<f64>(), rng.random::<f64>()], Some(0.0));
                }
            }
            ic = Some(a.finish()?);
            bc = Some(b.finish()?);
            phys = Some(r.finish()?);
        }
        ProblemKind::Eikonal => {
            if first.sensors.cols() != 2 {
                return Err(Error::shape("Eikonal samples must be curves"));
            }
            let h = problem.collocation.box_half_width;
            let mut b = PoolBuilder::new(m_in, d, sensors, true);
            let mut r = PoolBuilder::new(m_in, d, q, true);
            for (i, s) in samples.iter().enumerate() {
                let mut rng = sample_rng(seed, i as u64);
                b.sample(s);
                for j in 0..sensors {
                    b.row(s.sensors.row_slice(j), Some(0.0));
                }
                r.sample(s);
                for _ in 0..q {
                    r.row(&[rng.random_range(-h..h), rng.random_range(-h..h)], Some(1.0));
                }
            }
            bc = Some(b.finish()?);
            phys = Some(r.finish()?);
        }
    }
    if !problem.physics {
        phys = None;
    }
    Ok(Pools { ic, bc, physics: phys })
}

impl PdeProblem {
    /// Pointwise residual at `y` for input `u`:
    /// antiderivative `dG/dy − u(x)` (x must be a sensor), otherwise the raw
    /// operator value (the diffusion–reaction forcing and the Eikonal target
    /// are compared in the loss, not here).
    pub fn residual(&self, params: &DeepOnetParams, u: &FieldSample, y: &[f64]) -> Result<f64> {
        self.validate()?;
        if y.len() != self.d() || params.d() != self.d() || u.values.len() != params.m() {
            return Err(Error::shape("residual point, sample and model dimensions disagree"));
        }
        let raw = physics_rows(self, params, &mut Eager, &Mat::row(&u.values), &Mat::row(y)).item();
        let r = match self.kind {
            ProblemKind::Antiderivative => {
                let k = u
                    .grid()
                    .iter()
                    .position(|&x| (x - y[0]).abs() <= 1e-12)
                    .ok_or_else(|| Error::invalid(format!("x = {} is not a sensor location", y[0])))?;
                raw - u.values[k]
            }
            _ => raw,
        };
        if !r.is_finite() {
            return Err(Error::NonFinite("residual".into()));
        }
        Ok(r)
    }
}

pub fn residual_antiderivative(params: &DeepOnetParams, u: &FieldSample, x: f64) -> Result<f64> {
    PdeProblem::antiderivative(u.m()).residual(params, u, &[x])
}

pub fn residual_diffusion_reaction(params: &DeepOnetParams, u: &FieldSample, x: f64, t: f64) -> Result<f64> {
    PdeProblem::diffusion_reaction(1, 1).residual(params, u, &[x, t])
}

pub fn residual_burgers(params: &DeepOnetParams, u0: &FieldSample, x: f64, t: f64) -> Result<f64> {
    PdeProblem::burgers(1, 1, 1.0).residual(params, u0, &[x, t])
}

pub fn residual_eikonal(params: &DeepOnetParams, curve: &FieldSample, x: f64, y: f64) -> Result<f64> {
    PdeProblem::eikonal(1, 2.0).residual(params, curve, &[x, y])
}
