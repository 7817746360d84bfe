use rand::Rng;

use crate::datagen::{
    burgers_etdrk4, circle_sensors, linspace, periodic_grid, sdf_circle, solve_antiderivative_rk45,
    solve_diffusion_reaction, Grf, GrfSpec, PeriodicField, PeriodicGrfSpec,
};
use crate::deeponet::{FieldSample, OperatorDataset};
use crate::error::{Error, Result};
use crate::pde::{sample_rng, ProblemKind};
use crate::tensor::Mat;

use super::config::TrainConfig;

const TRAIN_STREAM: u64 = 0x7261_696e;
const TEST_STREAM: u64 = 0x7465_7374;

/// Seed for an independent family of random streams.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Training inputs (no solutions needed) and a solved test set.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkData {
    pub train: Vec<FieldSample>,
    pub test: OperatorDataset,
    /// Radius of each test circle (Eikonal only).
    pub test_radii: Vec<f64>,
}

/// Builds one input function per id from independent streams.
struct Sampler {
    kind: ProblemKind,
    grf: Option<Grf>,
    periodic: Option<(PeriodicGrfSpec, usize)>,
    m: usize,
    radii: (f64, f64),
}

/// A generated input plus what the solver needs to produce truth.
enum Draw {
    Field(FieldSample),
    Periodic(FieldSample, PeriodicField),
    Circle(FieldSample, f64),
}

impl Draw {
    fn sample(&self) -> &FieldSample {
        match self {
            Draw::Field(s) | Draw::Periodic(s, _) | Draw::Circle(s, _) => s,
        }
    }
}

impl Sampler {
    fn new(cfg: &TrainConfig) -> Result<Self> {
        let grf = match cfg.benchmark {
            ProblemKind::Antiderivative | ProblemKind::DiffusionReaction => {
                Some(Grf::new(GrfSpec::uniform(cfg.length_scale, cfg.m))?)
            }
            _ => None,
        };
        let periodic = (cfg.benchmark == ProblemKind::Burgers)
            .then(|| (PeriodicGrfSpec::for_grid(cfg.solver_nx), cfg.solver_nx));
        Ok(Self {
            kind: cfg.benchmark,
            grf,
            periodic,
            m: cfg.m,
            radii: (cfg.radius_min, cfg.radius_max),
        })
    }

    fn draw(&self, id: u64, rng: &mut impl Rng) -> Result<Draw> {
        Ok(match self.kind {
            ProblemKind::Antiderivative | ProblemKind::DiffusionReaction => {
                Draw::Field(self.grf.as_ref().expect("GRF built for this benchmark").sample(id, rng))
            }
            ProblemKind::Burgers => {
                let (spec, _) = self.periodic.as_ref().expect("spectrum built for Burgers");
                let f = PeriodicField::draw(spec, rng);
                let grid = periodic_grid(self.m);
                let values = grid.iter().map(|&x| f.eval(x)).collect();
                Draw::Periodic(FieldSample::new(id, &grid, values)?, f)
            }
            ProblemKind::Eikonal => {
                let (lo, hi) = self.radii;
                let r = if hi > lo { rng.random_range(lo..hi) } else { lo };
                Draw::Circle(circle_sensors(r, self.m)?.to_sample(id), r)
            }
        })
    }
}

/// Inputs for training, ids `0..n_train`.
pub fn generate_train(cfg: &TrainConfig) -> Result<Vec<FieldSample>> {
    let sampler = Sampler::new(cfg)?;
    let seed = derive_seed(cfg.seed, TRAIN_STREAM);
    (0..cfg.n_train)
        .map(|i| {
            let mut rng = sample_rng(seed, i as u64);
            Ok(sampler.draw(i as u64, &mut rng)?.sample().clone())
        })
        .collect()
}

/// Query grid shared by every test sample, as rows of `y`.
pub fn test_queries(cfg: &TrainConfig) -> Mat {
    match cfg.benchmark {
        ProblemKind::Antiderivative => Mat::column(&linspace(0.0, 1.0, cfg.m)),
        ProblemKind::DiffusionReaction => grid2(&linspace(0.0, 1.0, cfg.solver_nx), &linspace(0.0, 1.0, cfg.solver_nt)),
        ProblemKind::Burgers => grid2(&periodic_grid(cfg.solver_nx), &linspace(0.0, 1.0, 101)),
        ProblemKind::Eikonal => {
            let h = cfg.box_half_width;
            let axis = linspace(-h, h, cfg.test_grid);
            grid2(&axis, &axis)
        }
    }
}

/// Row-major product grid: row `i * b.len() + j` is `(a[i], b[j])`.
pub fn grid2(a: &[f64], b: &[f64]) -> Mat {
    let mut y = Mat::zeros(a.len() * b.len(), 2);
    for (i, &x) in a.iter().enumerate() {
        for (j, &t) in b.iter().enumerate() {
            y.set(i * b.len() + j, 0, x);
            y.set(i * b.len() + j, 1, t);
        }
    }
    y
}

/// Test inputs (ids continue after the training ids) with reference solutions.
pub fn generate_test(cfg: &TrainConfig) -> Result<(OperatorDataset, Vec<f64>)> {
    let sampler = Sampler::new(cfg)?;
    let seed = derive_seed(cfg.seed, TEST_STREAM);
    let queries = test_queries(cfg);
    let p = queries.rows();
    let mut ids = Vec::with_capacity(cfg.n_test);
    let mut inputs = Vec::new();
    let mut y = Vec::with_capacity(cfg.n_test * p * queries.cols());
    let mut targets = Vec::with_capacity(cfg.n_test * p);
    let mut radii = Vec::new();
    for i in 0..cfg.n_test {
        let id = (cfg.n_train + i) as u64;
        let mut rng = sample_rng(seed, i as u64);
        let d = sampler.draw(id, &mut rng)?;
        let truth: Vec<f64> = match &d {
            Draw::Field(s) if cfg.benchmark == ProblemKind::Antiderivative => solve_antiderivative_rk45(s)?,
            Draw::Field(s) => solve_diffusion_reaction(s, 0.01, 0.01, cfg.solver_nx, cfg.solver_nt)?.into_vec(),
            Draw::Periodic(_, f) => {
                let u0: Vec<f64> = periodic_grid(cfg.solver_nx).iter().map(|&x| f.eval(x)).collect();
                burgers_etdrk4(&u0, 0.01, cfg.solver_dt, 0.01)?.into_vec()
            }
            Draw::Circle(_, r) => {
                radii.push(*r);
                (0..p).map(|k| sdf_circle(*r, queries.get(k, 0), queries.get(k, 1))).collect()
            }
        };
        if truth.len() != p {
            return Err(Error::shape("reference solution does not match the test grid"));
        }
        ids.push(id);
        inputs.extend_from_slice(&d.sample().values);
        y.extend_from_slice(queries.as_slice());
        targets.extend(truth);
    }
    let n = ids.len();
    let m_in = cfg.branch_inputs();
    let ds = OperatorDataset::new(
        ids,
        Mat::from_vec(n, m_in, inputs),
        p,
        Mat::from_vec(n * p, queries.cols(), y),
        Some(targets),
    )?;
    Ok((ds, radii))
}

pub fn generate(cfg: &TrainConfig) -> Result<BenchmarkData> {
    cfg.validate()?;
    let train = generate_train(cfg)?;
    let (test, test_radii) = generate_test(cfg)?;
    Ok(BenchmarkData { train, test, test_radii })
}

/// Stores input functions as a dataset: one row per sensor with `y` the
/// sensor location and target the field value (0 for curves).
pub fn samples_to_dataset(samples: &[FieldSample]) -> Result<OperatorDataset> {
    let first = samples.first().ok_or_else(|| Error::invalid("no samples to store"))?;
    let (m, d) = (first.m(), first.sensors.cols());
    let m_in = first.values.len();
    let mut inputs = Vec::new();
    let mut y = Vec::new();
    let mut targets = Vec::new();
    for s in samples {
        if s.m() != m || s.sensors.cols() != d || s.values.len() != m_in {
            return Err(Error::shape(format!("sample {} has a different layout", s.id)));
        }
        inputs.extend_from_slice(&s.values);
        y.extend_from_slice(s.sensors.as_slice());
        if d == 1 {
            targets.extend_from_slice(&s.values);
        } else {
            targets.extend(std::iter::repeat_n(0.0, m));
        }
    }
    let n = samples.len();
    OperatorDataset::new(
        samples.iter().map(|s| s.id).collect(),
        Mat::from_vec(n, m_in, inputs),
        m,
        Mat::from_vec(n * m, d, y),
        Some(targets),
    )
}

pub fn samples_from_dataset(ds: &OperatorDataset) -> Result<Vec<FieldSample>> {
    let mut out = Vec::with_capacity(ds.n());
    for s in 0..ds.n() {
        let rows = ds.sample_rows(s);
        let sensors = Mat::from_fn(ds.p(), ds.d(), |i, c| ds.queries().get(rows.start + i, c));
        let id = ds.ids()[s];
        let sample = match ds.d() {
            1 => FieldSample::new(id, sensors.as_slice(), ds.inputs().row_slice(s).to_vec())?,
            2 => FieldSample::curve(id, &sensors)?,
            d => return Err(Error::shape(format!("cannot rebuild samples with d = {d}"))),
        };
        out.push(sample);
    }
    Ok(out)
}
