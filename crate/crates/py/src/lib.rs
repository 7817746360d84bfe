//! Python bindings: configuration, data generation, training, evaluation,
//! derivatives of trained models and the reference solvers.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use pideeponet::autodiff::Eager;
use pideeponet::datagen::{self, linspace, Grf, GrfSpec, PeriodicField, PeriodicGrfSpec};
use pideeponet::deeponet::{DeepOnetParams, FieldSample};
use pideeponet::harness::{self, BenchmarkData, MetricsRecord, TrainConfig};
use pideeponet::nn::Archive;
use pideeponet::pde::ProblemKind;
use pideeponet::{Error, Mat};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        Error::Config(_) | Error::Shape(_) | Error::Invalid(_) | Error::Parse { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn kind(name: &str) -> PyResult<ProblemKind> {
    name.parse().map_err(py_err)
}

/// Rows of equal length into a matrix.
pub fn to_mat(rows: &[Vec<f64>]) -> Result<Mat, Error> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Shape("rows must have equal length".into()));
    }
    Ok(Mat::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

pub fn from_mat(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row_slice(i).to_vec()).collect()
}

/// Experiment settings; see `TrainConfig.to_text()` for every key.
#[pyclass(name = "TrainConfig")]
struct PyConfig {
    inner: TrainConfig,
}

#[pymethods]
impl PyConfig {
    /// Desk-scale preset for `benchmark`.
    #[staticmethod]
    fn desk(benchmark: &str) -> PyResult<Self> {
        Ok(Self {
            inner: TrainConfig::desk(kind(benchmark)?),
        })
    }

    /// Full-size preset for `benchmark`.
    #[staticmethod]
    fn paper(benchmark: &str) -> PyResult<Self> {
        Ok(Self {
            inner: TrainConfig::paper(kind(benchmark)?),
        })
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        TrainConfig::parse(text).map(|inner| Self { inner }).map_err(py_err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        TrainConfig::load(&path).map(|inner| Self { inner }).map_err(py_err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(py_err)
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    /// Overrides one key, validating the result.
    fn set(&mut self, section: &str, key: &str, value: &str) -> PyResult<()> {
        let text = format!("{}\n[{section}]\n{key} = {value}\n", self.inner.to_text());
        self.inner = TrainConfig::parse(&text).map_err(py_err)?;
        Ok(())
    }

    #[getter]
    fn benchmark(&self) -> String {
        self.inner.benchmark.to_string()
    }

    #[getter]
    fn iterations(&self) -> u64 {
        self.inner.iterations
    }

    #[setter]
    fn set_iterations(&mut self, v: u64) {
        self.inner.iterations = v;
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[setter]
    fn set_seed(&mut self, v: u64) {
        self.inner.seed = v;
    }

    #[getter]
    fn n_train(&self) -> usize {
        self.inner.n_train
    }

    #[setter]
    fn set_n_train(&mut self, v: usize) {
        self.inner.n_train = v;
    }

    #[getter]
    fn n_test(&self) -> usize {
        self.inner.n_test
    }

    #[setter]
    fn set_n_test(&mut self, v: usize) {
        self.inner.n_test = v;
    }

    #[getter]
    fn batch_size(&self) -> usize {
        self.inner.batch_size
    }

    #[setter]
    fn set_batch_size(&mut self, v: usize) {
        self.inner.batch_size = v;
    }

    fn __repr__(&self) -> String {
        format!(
            "TrainConfig(benchmark={}, n_train={}, iterations={}, seed={})",
            self.inner.benchmark, self.inner.n_train, self.inner.iterations, self.inner.seed
        )
    }
}

/// Training inputs and the solved test set.
#[pyclass(name = "BenchmarkData")]
struct PyData {
    inner: BenchmarkData,
}

#[pymethods]
impl PyData {
    #[getter]
    fn n_train(&self) -> usize {
        self.inner.train.len()
    }

    #[getter]
    fn n_test(&self) -> usize {
        self.inner.test.n()
    }

    /// Branch input vector of training sample `i`.
    fn train_input(&self, i: usize) -> PyResult<Vec<f64>> {
        let s = self
            .inner
            .train
            .get(i)
            .ok_or_else(|| PyValueError::new_err(format!("sample {i} out of range")))?;
        Ok(s.branch_input().to_vec())
    }

    /// `(u, y, s)` for test sample `i`: branch input, query rows, solution values.
    fn test_sample(&self, i: usize) -> PyResult<(Vec<f64>, Vec<Vec<f64>>, Vec<f64>)> {
        let t = &self.inner.test;
        if i >= t.n() {
            return Err(PyValueError::new_err(format!("sample {i} out of range")));
        }
        let rows = t.sample_rows(i);
        let y = rows.clone().map(|r| t.queries().row_slice(r).to_vec()).collect();
        let s = t.targets().map(|v| v[rows].to_vec()).unwrap_or_default();
        Ok((t.inputs().row_slice(i).to_vec(), y, s))
    }

    /// Circle radii of the test set (Eikonal only).
    #[getter]
    fn test_radii(&self) -> Vec<f64> {
        self.inner.test_radii.clone()
    }
}

/// A DeepONet with trained (or freshly initialised) parameters.
#[pyclass(name = "DeepONet")]
struct PyModel {
    params: DeepOnetParams,
    metrics: Vec<MetricsRecord>,
}

#[pymethods]
impl PyModel {
    /// Untrained parameters for `config`.
    #[staticmethod]
    fn init(config: &PyConfig) -> PyResult<Self> {
        Ok(Self {
            params: harness::init_params(&config.inner).map_err(py_err)?,
            metrics: Vec::new(),
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let a = Archive::load(&path).map_err(py_err)?;
        Ok(Self {
            params: DeepOnetParams::from_archive(&a).map_err(py_err)?,
            metrics: Vec::new(),
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.params.to_archive().save(&path).map_err(py_err)
    }

    /// Sensor count `m`, query dimension `d` and latent size `q`.
    #[getter]
    fn shape(&self) -> (usize, usize, usize) {
        (self.params.m(), self.params.d(), self.params.q())
    }

    #[getter]
    fn num_parameters(&self) -> usize {
        use pideeponet::autodiff::Parameterized;
        self.params.num_scalars()
    }

    /// Logged training records as dicts keyed like the metrics CSV.
    fn metrics(&self, py: Python<'_>) -> PyResult<Vec<Py<pyo3::types::PyDict>>> {
        use pyo3::types::{PyDict, PyDictMethods};
        self.metrics
            .iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("iteration", r.iteration)?;
                d.set_item("total", r.total_loss)?;
                d.set_item("ic", r.ic_loss)?;
                d.set_item("bc", r.bc_loss)?;
                d.set_item("physics", r.physics_loss)?;
                d.set_item("operator", r.operator_loss)?;
                d.set_item("lr", r.lr)?;
                d.set_item("wall_seconds", r.wall_seconds)?;
                Ok(d.unbind())
            })
            .collect()
    }

    /// `G(u)(y)` for every query row.
    fn predict(&self, u: Vec<f64>, y: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        let (uu, yy) = self.inputs(&u, &y)?;
        Ok(self.params.forward(&mut Eager, &uu, &yy).into_vec())
    }

    /// `(G, dG/dy_axis, d²G/dy_axis²)` for every query row.
    fn derivatives(&self, u: Vec<f64>, y: Vec<Vec<f64>>, axis: usize) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let (uu, yy) = self.inputs(&u, &y)?;
        if axis >= self.params.d() {
            return Err(PyValueError::new_err(format!("axis {axis} out of range")));
        }
        let b = self.params.branch_features(&mut Eager, &uu);
        let out = self.params.forward_along(&mut Eager, &b, &yy, axis, true);
        let zeros = vec![0.0; y.len()];
        Ok((
            out.v.into_vec(),
            out.d1.map_or_else(|| zeros.clone(), Mat::into_vec),
            out.d2.map_or(zeros, Mat::into_vec),
        ))
    }

    /// `(mean, std, per-sample errors)` of the relative L² error on the test set.
    fn evaluate(&self, data: &PyData) -> PyResult<(f64, f64, Vec<f64>)> {
        let s = harness::evaluate(&self.params, &data.inner.test).map_err(py_err)?;
        Ok((s.mean, s.std, s.errors.iter().map(|e| e.1).collect()))
    }

    /// Mean radius of the zero level set for a closed curve given as `(x, y)` points.
    #[pyo3(signature = (points, rays = 64, lo = 0.1, hi = 1.9))]
    fn zero_level_radius(&self, points: Vec<Vec<f64>>, rays: usize, lo: f64, hi: f64) -> PyResult<f64> {
        let c = FieldSample::curve(0, &to_mat(&points).map_err(py_err)?).map_err(py_err)?;
        harness::recover_radius(&self.params, &c, rays, lo, hi).map_err(py_err)
    }
}

impl PyModel {
    fn inputs(&self, u: &[f64], y: &[Vec<f64>]) -> PyResult<(Mat, Mat)> {
        if u.len() != self.params.m() {
            return Err(PyValueError::new_err(format!("expected {} sensor values, got {}", self.params.m(), u.len())));
        }
        let yy = to_mat(y).map_err(py_err)?;
        if yy.rows() > 0 && yy.cols() != self.params.d() {
            return Err(PyValueError::new_err(format!("query rows must have {} coordinates", self.params.d())));
        }
        let uu = Mat::from_fn(yy.rows(), u.len(), |_, j| u[j]);
        Ok((uu, yy))
    }
}

/// Samples training inputs and solves the test set.
#[pyfunction]
fn generate(config: &PyConfig) -> PyResult<PyData> {
    harness::generate(&config.inner).map(|inner| PyData { inner }).map_err(py_err)
}

/// Trains a model; with `out` set, writes the checkpoint and metrics there.
#[pyfunction]
#[pyo3(signature = (config, data, out = None))]
fn train(py: Python<'_>, config: &PyConfig, data: &PyData, out: Option<PathBuf>) -> PyResult<PyModel> {
    let cfg = config.inner.clone();
    let samples = data.inner.train.clone();
    let res = py
        .detach(move || harness::train(&cfg, &samples, out.as_deref()))
        .map_err(py_err)?;
    Ok(PyModel {
        params: res.params,
        metrics: res.metrics,
    })
}

/// One Gaussian random field draw on `m` equispaced points of [0, 1].
#[pyfunction]
#[pyo3(signature = (length_scale, m, seed = 0))]
fn grf_sample(length_scale: f64, m: usize, seed: u64) -> PyResult<Vec<f64>> {
    let grf = Grf::new(GrfSpec::uniform(length_scale, m)).map_err(py_err)?;
    Ok(grf.sample(0, &mut ChaCha8Rng::seed_from_u64(seed)).values)
}

/// One periodic random initial condition on `n` points of [0, 1).
#[pyfunction]
#[pyo3(signature = (n, seed = 0))]
fn periodic_grf_sample(n: usize, seed: u64) -> Vec<f64> {
    let f = PeriodicField::draw(&PeriodicGrfSpec::for_grid(n), &mut ChaCha8Rng::seed_from_u64(seed));
    datagen::periodic_grid(n).iter().map(|&x| f.eval(x)).collect()
}

fn scalar_field(u: Vec<f64>) -> PyResult<FieldSample> {
    let grid = linspace(0.0, 1.0, u.len());
    FieldSample::new(0, &grid, u).map_err(py_err)
}

/// `s(x) = ∫₀ˣ u` at the sensor grid for `u` given on equispaced points of [0, 1].
#[pyfunction]
fn solve_antiderivative(u: Vec<f64>) -> PyResult<Vec<f64>> {
    datagen::solve_antiderivative_rk45(&scalar_field(u)?).map_err(py_err)
}

/// Diffusion–reaction solution on an `nx × nt` grid, indexed `[x][t]`.
#[pyfunction]
#[pyo3(signature = (u, nx = 100, nt = 100, diffusivity = 0.01, rate = 0.01))]
fn solve_diffusion_reaction(u: Vec<f64>, nx: usize, nt: usize, diffusivity: f64, rate: f64) -> PyResult<Vec<Vec<f64>>> {
    let s = datagen::solve_diffusion_reaction(&scalar_field(u)?, diffusivity, rate, nx, nt).map_err(py_err)?;
    Ok(from_mat(&s))
}

/// Periodic Burgers solution: `u0` on `j / len(u0)`, result indexed `[x][snapshot]`.
#[pyfunction]
#[pyo3(signature = (u0, nu = 0.01, dt = 1e-3, snapshot_every = 0.01))]
fn solve_burgers(u0: Vec<f64>, nu: f64, dt: f64, snapshot_every: f64) -> PyResult<Vec<Vec<f64>>> {
    let s = datagen::burgers_etdrk4(&u0, nu, dt, snapshot_every).map_err(py_err)?;
    Ok(from_mat(&s))
}

#[pyfunction]
fn sdf_circle(r: f64, x: f64, y: f64) -> f64 {
    datagen::sdf_circle(r, x, y)
}

/// `(name, passed, detail)` for each built-in oracle check.
#[pyfunction]
fn selftest(py: Python<'_>) -> Vec<(String, bool, String)> {
    py.detach(|| {
        harness::run_selftest()
            .into_iter()
            .map(|c| (c.name.to_string(), c.passed, c.detail))
            .collect()
    })
}

#[pymodule]
#[pyo3(name = "pideeponet")]
fn pideeponet_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyData>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(grf_sample, m)?)?;
    m.add_function(wrap_pyfunction!(periodic_grf_sample, m)?)?;
    m.add_function(wrap_pyfunction!(solve_antiderivative, m)?)?;
    m.add_function(wrap_pyfunction!(solve_diffusion_reaction, m)?)?;
    m.add_function(wrap_pyfunction!(solve_burgers, m)?)?;
    m.add_function(wrap_pyfunction!(sdf_circle, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    Ok(())
}
